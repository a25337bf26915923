// protocol.hpp: the repeat-until-success measurement loop.
//
// A run alternates free evolution for an interval t_j with a projective
// check for "all K excitations at the last site". The trace records, per
// step, the conditional success probability p_j, the unconditional mass
// pi_j = p_j * prod_{i<j}(1 - p_i), the cumulative total P_j, and the
// residual weight w. Monte Carlo sampling reproduces the same law from a
// seeded generator.

#pragma once

#include "multirail/chain.hpp"
#include "multirail/engine.hpp"
#include "multirail/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace multirail {

enum class ScheduleStrategy { uniform, optimized, custom };

inline std::string to_string(ScheduleStrategy s) {
    switch (s) {
        case ScheduleStrategy::uniform: return "uniform";
        case ScheduleStrategy::optimized: return "optimized";
        case ScheduleStrategy::custom: return "custom";
    }
    throw std::logic_error("unknown schedule strategy");
}

inline ScheduleStrategy schedule_strategy_from_string(const std::string& name) {
    if (name == "uniform") return ScheduleStrategy::uniform;
    if (name == "optimized") return ScheduleStrategy::optimized;
    if (name == "custom") return ScheduleStrategy::custom;
    throw std::invalid_argument("unknown schedule strategy '" + name + "'");
}

// Timing noise: one independent uniform draw on [-width, width] per interval.
struct JitterSpec {
    std::string distribution = "uniform";
    double width = 0.0;
    std::uint64_t seed = 0;
};

struct Schedule {
    std::vector<double> intervals;
    ScheduleStrategy strategy = ScheduleStrategy::custom;
    std::optional<JitterSpec> jitter;

    void validate() const {
        if (intervals.empty()) throw std::invalid_argument("Schedule: needs at least one interval");
        for (double t : intervals)
            if (!(t > 0.0) || !std::isfinite(t))
                throw std::invalid_argument("Schedule: intervals must be positive and finite");
        if (jitter) {
            if (jitter->distribution != "uniform")
                throw std::invalid_argument("Schedule: only uniform jitter is supported");
            if (!(jitter->width >= 0.0) || !std::isfinite(jitter->width))
                throw std::invalid_argument("Schedule: jitter width must be nonnegative");
            const double shortest = *std::min_element(intervals.begin(), intervals.end());
            if (jitter->width >= shortest)
                throw std::invalid_argument(
                    "Schedule: jitter width must stay below the shortest interval");
        }
    }
};

inline Schedule uniform_schedule(double tau, int steps) {
    if (steps < 1) throw std::invalid_argument("uniform_schedule: needs at least one step");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("uniform_schedule: interval must be positive and finite");
    Schedule s;
    s.intervals.assign(static_cast<std::size_t>(steps), tau);
    s.strategy = ScheduleStrategy::uniform;
    return s;
}

struct ProtocolTrace {
    int sites = 0;
    int excitations = 0;
    std::vector<double> intervals;  // realized intervals (jitter already applied)
    std::vector<double> p;          // conditional success per step
    std::vector<double> pi;         // unconditional success mass per step
    std::vector<double> P;          // cumulative success probability
    std::vector<double> w;          // residual weight; w[0] = 1, w[j] = prod_{i<j}(1 - p[i])
    bool truncated = false;         // a step reached certainty; later steps never ran
    JointState final_state;

    int steps() const { return static_cast<int>(p.size()); }
};

namespace detail {
// Shares propagators across repeated interval values (uniform schedules hit
// one entry q times).
class PropagatorCache {
public:
    explicit PropagatorCache(const Spectrum& s) : spectrum_(s) {}

    const Propagator& at(double t) {
        auto it = cache_.find(t);
        if (it == cache_.end()) it = cache_.emplace(t, propagator(spectrum_, t)).first;
        return it->second;
    }

private:
    const Spectrum& spectrum_;
    std::map<double, Propagator> cache_;
};
}  // namespace detail

inline ProtocolTrace run(const Spectrum& s, int excitations, const Schedule& schedule,
                         Representation rep = Representation::automatic,
                         std::uint64_t budget = default_dense_budget) {
    schedule.validate();
    const auto q = schedule.intervals.size();

    ProtocolTrace trace;
    trace.sites = s.dim();
    trace.excitations = excitations;
    trace.intervals = schedule.intervals;
    trace.p.reserve(q);
    trace.pi.reserve(q);
    trace.P.reserve(q);
    trace.w.reserve(q + 1);
    trace.w.push_back(1.0);

    detail::PropagatorCache cache(s);
    JointState state = initial_state(s.dim(), excitations, rep, budget);

    double residual = 1.0;    // prod (1 - p_i), kept as a product to dodge cancellation
    double cumulative = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        state = evolve(state, cache.at(schedule.intervals[j]));
        double p = 0.0;
        try {
            auto projection = project_failure(state);
            p = projection.probability;
            state = std::move(projection.state);
        } catch (const success_certain&) {
            // All remaining weight converts to success; the run is over.
            trace.p.push_back(1.0);
            trace.pi.push_back(residual);
            cumulative += residual;
            trace.P.push_back(cumulative);
            trace.w.push_back(0.0);
            trace.truncated = true;
            trace.intervals.resize(j + 1);
            break;
        }
        trace.p.push_back(p);
        trace.pi.push_back(p * residual);
        cumulative += p * residual;
        trace.P.push_back(cumulative);
        residual *= 1.0 - p;
        trace.w.push_back(residual);
    }
    trace.final_state = std::move(state);
    return trace;
}

struct ReachResult {
    bool reached = false;
    int steps = 0;       // smallest step count meeting the target, or the cap
    double achieved = 0.0;
};

// Smallest q with P_q >= target under the uniform schedule with interval tau.
inline ReachResult steps_to_reach(const Spectrum& s, int excitations, double tau, double target,
                                  int max_steps,
                                  Representation rep = Representation::automatic) {
    if (!(target > 0.0 && target < 1.0))
        throw std::invalid_argument("steps_to_reach: target must lie in (0, 1)");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("steps_to_reach: interval must be positive and finite");
    if (max_steps < 1) throw std::invalid_argument("steps_to_reach: step cap must be positive");

    const Propagator f = propagator(s, tau);
    JointState state = initial_state(s.dim(), excitations, rep);
    double residual = 1.0;
    double cumulative = 0.0;
    for (int j = 1; j <= max_steps; ++j) {
        state = evolve(state, f);
        try {
            auto projection = project_failure(state);
            cumulative += projection.probability * residual;
            residual *= 1.0 - projection.probability;
            state = std::move(projection.state);
        } catch (const success_certain&) {
            return {true, j, 1.0};
        }
        if (cumulative >= target) return {true, j, cumulative};
    }
    return {false, max_steps, cumulative};
}

struct SuccessHistogram {
    std::vector<std::uint64_t> counts;  // counts[j]: runs that succeeded at step j+1
    std::uint64_t never = 0;            // runs that exhausted the schedule
    std::uint64_t runs = 0;

    std::vector<double> frequencies() const {
        std::vector<double> f(counts.size());
        for (std::size_t j = 0; j < counts.size(); ++j)
            f[j] = static_cast<double>(counts[j]) / static_cast<double>(runs);
        return f;
    }
};

// Samples the success step from the conditional probabilities p. Runs are
// split into fixed blocks of 4096 with per-block seeds, so the histogram is
// identical for any worker count.
inline SuccessHistogram sample_success_steps(const std::vector<double>& p, std::uint64_t runs,
                                             std::uint64_t seed, int workers = 1) {
    if (runs < 1) throw std::invalid_argument("sample_success_steps: needs at least one run");
    if (workers < 1) workers = 1;
    constexpr std::uint64_t block_size = 4096;
    const std::uint64_t blocks = (runs + block_size - 1) / block_size;

    auto run_block = [&](std::uint64_t block, SuccessHistogram& local) {
        SplitMix64 g(derive_seed(seed, block));
        const std::uint64_t begin = block * block_size;
        const std::uint64_t end = std::min(runs, begin + block_size);
        for (std::uint64_t r = begin; r < end; ++r) {
            bool succeeded = false;
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (g.next_unit() < p[j]) {
                    ++local.counts[j];
                    succeeded = true;
                    break;
                }
            }
            if (!succeeded) ++local.never;
        }
    };

    std::vector<SuccessHistogram> partial(static_cast<std::size_t>(workers));
    for (auto& h : partial) h.counts.assign(p.size(), 0);

    if (workers == 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) run_block(b, partial[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int wkr = 0; wkr < workers; ++wkr) {
            pool.emplace_back([&, wkr] {
                for (std::uint64_t b = static_cast<std::uint64_t>(wkr); b < blocks;
                     b += static_cast<std::uint64_t>(workers))
                    run_block(b, partial[static_cast<std::size_t>(wkr)]);
            });
        }
        for (auto& t : pool) t.join();
    }

    SuccessHistogram merged;
    merged.counts.assign(p.size(), 0);
    merged.runs = runs;
    for (const auto& h : partial) {
        for (std::size_t j = 0; j < p.size(); ++j) merged.counts[j] += h.counts[j];
        merged.never += h.never;
    }
    return merged;
}

inline SuccessHistogram monte_carlo(const Spectrum& s, int excitations, const Schedule& schedule,
                                    std::uint64_t runs, std::uint64_t seed, int workers = 1,
                                    Representation rep = Representation::automatic) {
    const ProtocolTrace trace = run(s, excitations, schedule, rep);
    return sample_success_steps(trace.p, runs, seed, workers);
}

// Perturbs every interval by its jitter draw, then delegates to run. The
// trace's intervals field holds the realized values.
inline ProtocolTrace jittered_run(const Spectrum& s, int excitations, const Schedule& schedule,
                                  Representation rep = Representation::automatic) {
    schedule.validate();
    if (!schedule.jitter)
        throw std::invalid_argument("jittered_run: schedule carries no jitter specification");

    Schedule realized = schedule;
    realized.jitter.reset();
    SplitMix64 g(schedule.jitter->seed);
    for (auto& t : realized.intervals) {
        const double offset = (2.0 * g.next_unit() - 1.0) * schedule.jitter->width;
        t += offset;
    }
    return run(s, excitations, realized, rep);
}

}  // namespace multirail
