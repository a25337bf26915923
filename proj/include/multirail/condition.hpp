// condition.hpp: spectral hypotheses behind asymptotic transfer.
//
// The receiver's repeated measurements drive the failure norm to zero only
// when no Hamiltonian eigenvector is orthogonal to the last site |N>. These
// checks decide that hypothesis numerically, classify the open
// nearest-neighbor corollary, and flag measurement intervals at which
// distinct eigenphases collide.

#pragma once

#include "multirail/chain.hpp"

#include <numbers>
#include <utility>

namespace multirail {

// Below this projection norm the condition is reported as failing: the
// contraction rate degrades as 1 - O(eps^2), indistinguishable from
// non-convergence at double precision.
inline constexpr double overlap_epsilon = 1e-9;

// Circle distance under which two eigenphases of U(tau) count as collided.
inline constexpr double phase_epsilon = 1e-6;

struct ConditionReport {
    double min_overlap = 0.0;  // min over eigenclusters of ||P_cluster |N>||
    std::vector<std::pair<double, int>> degenerate_clusters;  // (eigenvalue, multiplicity)
    bool holds = false;
    int witness = -1;  // violating cluster (ascending order), -1 when holds
};

namespace detail {

// Cluster ascending eigenvalues by gap; tolerant of permuted input columns.
inline std::vector<std::vector<int>> eigenvalue_clusters(const Spectrum& s) {
    const int n = s.dim();
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return s.eigenvalues(a) < s.eigenvalues(b); });

    const double tol = s.degeneracy_tolerance();
    std::vector<std::vector<int>> clusters;
    for (int idx : order) {
        if (clusters.empty() ||
            s.eigenvalues(idx) - s.eigenvalues(clusters.back().back()) > tol)
            clusters.emplace_back();
        clusters.back().push_back(idx);
    }
    return clusters;
}

}  // namespace detail

// A cluster of dimension >= 2 always contains a vector orthogonal to |N>,
// so degeneracy fails the condition outright; otherwise the minimum cluster
// projection of |N> must clear overlap_epsilon.
inline ConditionReport overlap_report(const Spectrum& s) {
    const int n = s.dim();
    const auto clusters = detail::eigenvalue_clusters(s);

    ConditionReport report;
    report.min_overlap = 1.0;
    report.holds = true;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        double proj_sq = 0.0;
        double value = 0.0;
        for (int m : clusters[c]) {
            proj_sq += std::norm(s.eigenvectors(n - 1, m));
            value += s.eigenvalues(m);
        }
        value /= static_cast<double>(clusters[c].size());
        const double overlap = std::sqrt(proj_sq);
        report.min_overlap = std::min(report.min_overlap, overlap);

        const bool degenerate = clusters[c].size() >= 2;
        if (degenerate)
            report.degenerate_clusters.emplace_back(value, static_cast<int>(clusters[c].size()));
        if ((degenerate || overlap <= overlap_epsilon) && report.holds) {
            report.holds = false;
            report.witness = static_cast<int>(c);
        }
    }
    return report;
}

// Executable form of the nearest-neighbor corollary: on an open tridiagonal
// chain with nonzero hoppings, <e|N> = 0 would force <e|N-1> = 0 and so on
// down to e = 0, a contradiction. On a ring the argument breaks because the
// wrap term feeds <e|1> back in.
struct NNTheoremVerdict {
    bool applicable = false;           // open chain with tridiagonal sector matrix
    bool all_hoppings_nonzero = false;
    bool numeric_condition_holds = false;
    // Implication applicable && all_hoppings_nonzero => condition holds,
    // evaluated numerically. Can only break for hoppings so small that the
    // overlap drops below overlap_epsilon.
    bool consistent = true;
};

inline NNTheoremVerdict open_nn_theorem_check(const ChainSpec& spec, const Spectrum& s) {
    const auto op = build_chain(spec);
    const int n = op.dim;

    NNTheoremVerdict verdict;
    bool tridiagonal = true;
    for (int i = 0; i < n && tridiagonal; ++i)
        for (int j = i + 2; j < n; ++j)
            if (std::abs(op.matrix(i, j)) != 0.0) {
                tridiagonal = false;
                break;
            }
    verdict.applicable = !spec.periodic && tridiagonal;

    verdict.all_hoppings_nonzero = true;
    for (int i = 0; i + 1 < n; ++i)
        if (std::abs(op.matrix(i + 1, i)) == 0.0) verdict.all_hoppings_nonzero = false;

    verdict.numeric_condition_holds = overlap_report(s).holds;
    verdict.consistent = !(verdict.applicable && verdict.all_hoppings_nonzero) ||
                         verdict.numeric_condition_holds;
    return verdict;
}

// Distinct H-eigenvectors merge into one U(tau)-eigenspace exactly when
// their phases exp(-i E tau) coincide; such tau defeat the convergence
// proof even though the H-eigenvector condition holds.
struct ResonanceReport {
    double tau = 0.0;
    std::vector<std::pair<int, int>> colliding_pairs;
    bool clean = true;
};

inline ResonanceReport resonance_check(const Spectrum& s, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("resonance_check: tau must be positive and finite");
    ResonanceReport report;
    report.tau = tau;
    const int n = s.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double phase = (s.eigenvalues(i) - s.eigenvalues(j)) * tau;
            const double dist =
                std::abs(std::remainder(phase, 2.0 * std::numbers::pi));
            if (dist < phase_epsilon) report.colliding_pairs.emplace_back(i, j);
        }
    report.clean = report.colliding_pairs.empty();
    return report;
}

}  // namespace multirail
