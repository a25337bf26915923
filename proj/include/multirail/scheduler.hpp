// scheduler.hpp: choosing the measurement intervals.
//
// The uniform schedule repeats one interval. The greedy optimizer picks each
// interval to maximize that step's conditional success probability given the
// residual state: a grid scan over the window followed by golden-section
// refinement around the best node.

#pragma once

#include "multirail/chain.hpp"
#include "multirail/engine.hpp"
#include "multirail/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace multirail {

inline constexpr double greedy_p_floor = 1e-12;

struct OptimizerConfig {
    double t_min = 0.0;
    double t_max = 0.0;
    int grid_points = 64;
    double refine_tolerance = 1e-6;
    int steps = 1;

    void validate() const {
        if (!(t_min > 0.0) || !std::isfinite(t_min))
            throw std::invalid_argument("OptimizerConfig: window start must be positive");
        if (!(t_max > t_min) || !std::isfinite(t_max))
            throw std::invalid_argument("OptimizerConfig: window must have positive length");
        if (grid_points < 16) throw std::invalid_argument("OptimizerConfig: need at least 16 grid points");
        if (!(refine_tolerance > 0.0) || refine_tolerance >= t_max - t_min)
            throw std::invalid_argument("OptimizerConfig: refine tolerance must be below the window length");
        if (steps < 1) throw std::invalid_argument("OptimizerConfig: need at least one step");
    }
};

// Window heuristic: one interval should let the excitation cross the chain,
// and group velocity scales with the largest coupling, so the window is
// (0, 2N/J_max]. The open lower end becomes one grid spacing above zero.
inline OptimizerConfig default_optimizer_config(const ChainSpec& spec, int steps) {
    spec.validate();
    double j_max = 0.0;
    if (spec.model == ChainModel::custom) {
        for (Eigen::Index i = 0; i < spec.custom_matrix.rows(); ++i)
            for (Eigen::Index j = i + 1; j < spec.custom_matrix.cols(); ++j)
                j_max = std::max(j_max, std::abs(spec.custom_matrix(i, j)));
    } else {
        for (double c : spec.couplings) j_max = std::max(j_max, std::abs(c));
    }
    if (j_max <= 0.0)
        throw std::invalid_argument("default_optimizer_config: chain has no nonzero coupling");

    OptimizerConfig cfg;
    cfg.t_max = 2.0 * static_cast<double>(spec.sites) / j_max;
    cfg.t_min = cfg.t_max / static_cast<double>(cfg.grid_points);
    cfg.refine_tolerance = cfg.t_max * 1e-7;
    cfg.steps = steps;
    return cfg;
}

struct GreedyResult {
    Schedule schedule;             // strategy = optimized
    std::vector<double> p;         // conditional success committed at each step
    std::vector<bool> flagged;     // true when no window time beat the p floor
    bool truncated = false;        // a step reached certain success early
};

namespace detail {
// Success probability after evolving the snapshot by t. Pure in `state`.
inline double step_probability(const JointState& state, double t, PropagatorCache& cache) {
    const JointState moved = evolve(state, cache.at(t));
    return std::min(1.0, std::norm(success_amplitude(moved)));
}

// Golden-section maximization of p on [a, b]; assumes local unimodality.
inline std::pair<double, double> golden_refine(const JointState& state, double a, double b,
                                               double tol, PropagatorCache& cache) {
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double pc = step_probability(state, c, cache);
    double pd = step_probability(state, d, cache);
    while (b - a > tol) {
        if (pc > pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - inv_phi * (b - a);
            pc = step_probability(state, c, cache);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + inv_phi * (b - a);
            pd = step_probability(state, d, cache);
        }
    }
    const double mid = 0.5 * (a + b);
    return {mid, step_probability(state, mid, cache)};
}
}  // namespace detail

inline GreedyResult greedy_optimize(const Spectrum& s, int excitations,
                                    const OptimizerConfig& cfg,
                                    Representation rep = Representation::automatic) {
    cfg.validate();

    GreedyResult result;
    result.schedule.strategy = ScheduleStrategy::optimized;

    detail::PropagatorCache cache(s);
    JointState state = initial_state(s.dim(), excitations, rep);

    const double spacing = (cfg.t_max - cfg.t_min) / static_cast<double>(cfg.grid_points - 1);
    for (int step = 0; step < cfg.steps; ++step) {
        // Grid scan; strict improvement keeps ties at the smaller time.
        double best_t = cfg.t_min;
        double best_p = -1.0;
        for (int i = 0; i < cfg.grid_points; ++i) {
            const double t = cfg.t_min + spacing * static_cast<double>(i);
            const double p = detail::step_probability(state, t, cache);
            if (p > best_p) {
                best_p = p;
                best_t = t;
            }
        }

        // Refine inside the bracket around the winning node; fall back to the
        // grid point if refinement lands lower (non-unimodal neighborhoods).
        const double lo = std::max(cfg.t_min, best_t - spacing);
        const double hi = std::min(cfg.t_max, best_t + spacing);
        const auto [t_ref, p_ref] =
            detail::golden_refine(state, lo, hi, cfg.refine_tolerance, cache);
        double commit_t = best_t;
        double commit_p = best_p;
        if (p_ref > best_p) {
            commit_t = t_ref;
            commit_p = p_ref;
        }

        result.schedule.intervals.push_back(commit_t);
        result.flagged.push_back(commit_p < greedy_p_floor);

        state = evolve(state, cache.at(commit_t));
        try {
            auto projection = project_failure(state);
            result.p.push_back(projection.probability);
            state = std::move(projection.state);
        } catch (const success_certain& done) {
            result.p.push_back(done.probability);
            result.truncated = true;  // nothing left to transfer; stop early
            break;
        }
    }
    return result;
}

struct ExpectedSteps {
    double lower_bound = 0.0;          // sum of j * pi[j] over the recorded steps
    std::optional<double> exact;       // set when the trace accounts for all probability
};

inline ExpectedSteps expected_steps(const ProtocolTrace& trace) {
    ExpectedSteps result;
    for (std::size_t j = 0; j < trace.pi.size(); ++j)
        result.lower_bound += static_cast<double>(j + 1) * trace.pi[j];
    if (!trace.P.empty() && trace.P.back() >= 1.0 - 1e-12) result.exact = result.lower_bound;
    return result;
}

}  // namespace multirail
