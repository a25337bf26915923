// convergence.hpp: certify geometric decay of the failure weight.
//
// One protocol step acts on the joint state as T = U(tau) * Theta, where
// Theta removes the all-excitations-at-the-end component. The residual
// weight after q steps is ||T^q psi0||^2, so a spectral radius below 1
// guarantees convergence and a radius of 1 pins a trapped component.
//
// For K >= 2 the radius must be taken on the exchange-symmetric sector.
// The initial state |1>^K is symmetric under swapping excitation slots,
// and both U(tau) and Theta preserve that symmetry, so the trajectory
// never leaves the sector. The full tensor operator always carries
// unit-modulus eigenvectors of the form e_a (x) e_b - e_b (x) e_a (their
// end-site component cancels identically), which would report rho = 1 for
// every chain regardless of convergence of the protocol itself.

#pragma once

#include "multirail/chain.hpp"
#include "multirail/condition.hpp"
#include "multirail/engine.hpp"
#include "multirail/protocol.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace multirail {

inline constexpr std::uint64_t default_operator_budget = 4096;
inline constexpr double convergence_margin = 1e-10;

// Dimension of the exchange-symmetric sector: multisets of size K over N
// sites, C(N+K-1, K). Throws budget_exceeded past the given cap.
inline std::uint64_t symmetric_dimension(int sites, int excitations,
                                         std::uint64_t budget = default_operator_budget) {
    if (sites < 2) throw std::invalid_argument("symmetric_dimension: need at least two sites");
    if (excitations < 1)
        throw std::invalid_argument("symmetric_dimension: need at least one excitation");
    std::uint64_t dim = 1;
    for (int j = 1; j <= excitations; ++j) {
        const std::uint64_t numer = static_cast<std::uint64_t>(sites - 1 + j);
        if (dim > (budget * static_cast<std::uint64_t>(j) + static_cast<std::uint64_t>(j) - 1) /
                      numer)
            throw budget_exceeded("symmetric_dimension: sector exceeds the operator budget");
        dim = dim * numer / static_cast<std::uint64_t>(j);  // exact: C(n-1+j, j) is integral
    }
    if (dim > budget)
        throw budget_exceeded("symmetric_dimension: sector exceeds the operator budget");
    return dim;
}

namespace detail {
inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Nondecreasing k-tuples over {0,...,n-1} in lexicographic order. The last
// tuple is (n-1,...,n-1), the all-excitations-at-the-end configuration.
inline std::vector<std::vector<int>> multisets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(k), 0);
    while (true) {
        out.push_back(current);
        int pos = k - 1;
        while (pos >= 0 && current[static_cast<std::size_t>(pos)] == n - 1) --pos;
        if (pos < 0) break;
        const int next = current[static_cast<std::size_t>(pos)] + 1;
        for (int j = pos; j < k; ++j) current[static_cast<std::size_t>(j)] = next;
    }
    return out;
}

// sqrt of the product of site-multiplicity factorials for one multiset;
// converts monomial coefficients to orthonormal-basis coordinates.
inline double sqrt_multiplicity_factorial(const std::vector<int>& tuple) {
    double product = 1.0;
    std::size_t i = 0;
    while (i < tuple.size()) {
        std::size_t j = i + 1;
        int run = 1;
        while (j < tuple.size() && tuple[j] == tuple[i]) {
            ++run;
            product *= static_cast<double>(run);
            ++j;
        }
        i = j;
    }
    return std::sqrt(product);
}

// Orthogonal projection onto the exchange-symmetric sector: every
// coordinate is replaced by the mean over the orbit of its index tuple
// under slot permutations.
inline void symmetrize(DenseJointState& state) {
    if (state.excitations <= 1) return;
    const int n = state.sites;
    const int k = state.excitations;
    const Eigen::Index dim = state.amplitudes.size();
    Vector sums = Vector::Zero(dim);
    std::vector<std::int32_t> counts(static_cast<std::size_t>(dim), 0);
    std::vector<int> digits(static_cast<std::size_t>(k));
    const auto canonical = [&](Eigen::Index idx) {
        Eigen::Index rem = idx;
        for (int j = k - 1; j >= 0; --j) {
            digits[static_cast<std::size_t>(j)] = static_cast<int>(rem % n);
            rem /= n;
        }
        std::sort(digits.begin(), digits.end());
        Eigen::Index canon = 0;
        for (int j = 0; j < k; ++j) canon = canon * n + digits[static_cast<std::size_t>(j)];
        return canon;
    };
    for (Eigen::Index idx = 0; idx < dim; ++idx) {
        const Eigen::Index canon = canonical(idx);
        sums(canon) += state.amplitudes(idx);
        ++counts[static_cast<std::size_t>(canon)];
    }
    for (Eigen::Index idx = 0; idx < dim; ++idx) {
        const Eigen::Index canon = canonical(idx);
        state.amplitudes(idx) =
            sums(canon) / static_cast<double>(counts[static_cast<std::size_t>(canon)]);
    }
}
}  // namespace detail

// f(tau)^{(x)K} with the column at joint index (N,...,N) zeroed. The zeroed
// column is the projector applied on the right: T v never sees the success
// component of v.
inline Matrix build_T(const Spectrum& s, double tau, int excitations,
                      std::uint64_t budget = default_operator_budget) {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("build_T: time must be nonnegative and finite");
    const auto dim = joint_dimension(s.dim(), excitations, budget);
    const Matrix f = propagator(s, tau).matrix;
    Matrix joint = f;
    for (int j = 1; j < excitations; ++j) joint = detail::kron(joint, f);
    joint.col(static_cast<Eigen::Index>(dim - 1)).setZero();
    return joint;
}

// T restricted to the exchange-symmetric sector, in the orthonormal basis
// of normalized multiset states, with the column of the all-at-the-end
// configuration zeroed. Column b is computed by expanding the product of
// the K linear forms f.col(b_j) over commuting site variables, so the
// N^K tensor operator is never formed; the monomial coefficients are then
// rescaled by sqrt-multiplicity factors to land in the orthonormal basis.
inline Matrix build_symmetric_T(const Spectrum& s, double tau, int excitations,
                                std::uint64_t budget = default_operator_budget) {
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("build_symmetric_T: time must be nonnegative and finite");
    const int n = s.dim();
    const int k = excitations;
    const auto dim = static_cast<std::size_t>(symmetric_dimension(n, k, budget));
    const Matrix f = propagator(s, tau).matrix;

    if (k == 1) {
        Matrix T = f;
        T.col(n - 1).setZero();
        return T;
    }

    std::vector<std::vector<std::vector<int>>> basis(static_cast<std::size_t>(k) + 1);
    std::vector<std::map<std::vector<int>, int>> index(static_cast<std::size_t>(k) + 1);
    for (int d = 0; d <= k; ++d) {
        basis[static_cast<std::size_t>(d)] = detail::multisets(n, d);
        auto& lookup = index[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < basis[static_cast<std::size_t>(d)].size(); ++i)
            lookup[basis[static_cast<std::size_t>(d)][i]] = static_cast<int>(i);
    }

    // trans[d][m*n + v]: index at degree d+1 of the degree-d multiset m with
    // site v inserted, so the expansion loop below is pure array lookups.
    std::vector<std::vector<int>> trans(static_cast<std::size_t>(k));
    {
        std::vector<int> key;
        for (int d = 0; d < k; ++d) {
            const auto& level = basis[static_cast<std::size_t>(d)];
            auto& table = trans[static_cast<std::size_t>(d)];
            table.resize(level.size() * static_cast<std::size_t>(n));
            for (std::size_t m = 0; m < level.size(); ++m) {
                for (int v = 0; v < n; ++v) {
                    key = level[m];
                    key.insert(std::lower_bound(key.begin(), key.end(), v), v);
                    table[m * static_cast<std::size_t>(n) + static_cast<std::size_t>(v)] =
                        index[static_cast<std::size_t>(d) + 1].at(key);
                }
            }
        }
    }

    std::vector<double> factor(dim);
    for (std::size_t a = 0; a < dim; ++a)
        factor[a] = detail::sqrt_multiplicity_factorial(basis[static_cast<std::size_t>(k)][a]);

    Matrix T(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    std::vector<Complex> coeff, next;
    for (std::size_t b = 0; b < dim; ++b) {
        const auto& tuple = basis[static_cast<std::size_t>(k)][b];
        coeff.assign(1, Complex(1.0, 0.0));
        for (int j = 0; j < k; ++j) {
            const auto column = f.col(tuple[static_cast<std::size_t>(j)]);
            next.assign(basis[static_cast<std::size_t>(j) + 1].size(), Complex(0.0, 0.0));
            const auto& table = trans[static_cast<std::size_t>(j)];
            for (std::size_t m = 0; m < coeff.size(); ++m) {
                if (coeff[m] == Complex(0.0, 0.0)) continue;
                for (int v = 0; v < n; ++v)
                    next[static_cast<std::size_t>(
                        table[m * static_cast<std::size_t>(n) + static_cast<std::size_t>(v)])] +=
                        coeff[m] * column(v);
            }
            coeff.swap(next);
        }
        for (std::size_t a = 0; a < dim; ++a)
            T(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                coeff[a] * factor[a] / factor[b];
    }
    T.col(static_cast<Eigen::Index>(dim) - 1).setZero();
    return T;
}

inline double spectral_radius(const Matrix& T) {
    Eigen::ComplexEigenSolver<Matrix> solver(T, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw eigensolver_error("spectral_radius: eigenvalue iteration failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

struct RadiusEstimate {
    double rho = 0.0;
    double uncertainty = 0.0;
    int iterations = 0;
};

// Matrix-free fallback for sector dimensions past the dense operator
// budget. ||T^q v||^{1/q} approaches the symmetric-sector radius for
// generic symmetric v; averaging log growth factors over the whole
// post-burn-in window damps the oscillation caused by complex dominant
// pairs. The iterate is re-projected onto the symmetric sector every step
// because rounding leaks feed the trapped unit-modulus eigenvectors of the
// full tensor operator, which would otherwise take over the iteration. No
// deflation is attempted, so the figure is an estimate with a reported
// spread, never a certificate.
inline RadiusEstimate estimate_spectral_radius(const Spectrum& s, double tau, int excitations,
                                               int iterations = 400, int burn_in = 100,
                                               std::uint64_t budget = default_dense_budget) {
    if (iterations <= burn_in + 8)
        throw std::invalid_argument("estimate_spectral_radius: too few iterations");
    const auto dim = joint_dimension(s.dim(), excitations, budget);
    const Propagator f = propagator(s, tau);

    // Deterministic generic start: ramped phases over the multiset orbits.
    DenseJointState v;
    v.sites = s.dim();
    v.excitations = excitations;
    v.amplitudes = Vector(static_cast<Eigen::Index>(dim));
    for (std::uint64_t i = 0; i < dim; ++i) {
        const double x = static_cast<double>(i + 1) / static_cast<double>(dim + 1);
        v.amplitudes(static_cast<Eigen::Index>(i)) = Complex(std::cos(3.0 * x), std::sin(7.0 * x));
    }
    detail::symmetrize(v);
    v.amplitudes.normalize();

    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(iterations - burn_in));
    for (int it = 0; it < iterations; ++it) {
        v.amplitudes(v.amplitudes.size() - 1) = Complex(0.0, 0.0);
        v = evolve(v, f);
        detail::symmetrize(v);
        const double growth = v.amplitudes.norm();
        if (growth < 1e-300) return {0.0, 0.0, it + 1};  // annihilated: radius 0 numerically
        v.amplitudes /= growth;
        if (it >= burn_in) logs.push_back(std::log(growth));
    }

    const auto half = logs.size() / 2;
    double first = 0.0, second = 0.0;
    for (std::size_t i = 0; i < half; ++i) first += logs[i];
    for (std::size_t i = half; i < logs.size(); ++i) second += logs[i];
    first /= static_cast<double>(half);
    second /= static_cast<double>(logs.size() - half);
    const double mean = (first * static_cast<double>(half) +
                         second * static_cast<double>(logs.size() - half)) /
                        static_cast<double>(logs.size());

    RadiusEstimate est;
    est.rho = std::exp(mean);
    est.uncertainty = std::abs(std::exp(second) - std::exp(first));
    est.iterations = iterations;
    return est;
}

enum class Verdict { converges, fails_condition, resonant_tau, inconclusive };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::converges: return "converges";
        case Verdict::fails_condition: return "fails_condition";
        case Verdict::resonant_tau: return "resonant_tau";
        case Verdict::inconclusive: return "inconclusive";
    }
    throw std::logic_error("unknown verdict");
}

inline Verdict verdict_from_string(const std::string& name) {
    if (name == "converges") return Verdict::converges;
    if (name == "fails_condition") return Verdict::fails_condition;
    if (name == "resonant_tau") return Verdict::resonant_tau;
    if (name == "inconclusive") return Verdict::inconclusive;
    throw std::invalid_argument("unknown verdict '" + name + "'");
}

struct ConvergenceCertificate {
    double tau = 0.0;
    int excitations = 0;
    double rho = 0.0;
    bool rho_exact = false;  // dense eigensolve vs. power-iteration estimate
    ConditionReport condition;
    ResonanceReport resonance;
    Verdict verdict = Verdict::inconclusive;
    std::optional<double> empirical_rate;
};

// Verdict rules, in priority order: a failed overlap condition wins, then a
// resonant interval, then an exact rho < 1 - margin certifies convergence;
// everything else (estimated rho, or rho numerically at 1) is inconclusive.
// rho is the symmetric-sector radius, the one the trajectory actually sees.
inline ConvergenceCertificate certify(const Spectrum& s, double tau, int excitations,
                                      std::uint64_t operator_budget = default_operator_budget) {
    ConvergenceCertificate cert;
    cert.tau = tau;
    cert.excitations = excitations;
    cert.condition = overlap_report(s);
    cert.resonance = resonance_check(s, tau);

    try {
        cert.rho = spectral_radius(build_symmetric_T(s, tau, excitations, operator_budget));
        cert.rho_exact = true;
    } catch (const budget_exceeded&) {
        cert.rho_exact = false;
        try {
            cert.rho = estimate_spectral_radius(s, tau, excitations).rho;
        } catch (const budget_exceeded&) {
            cert.rho = std::numeric_limits<double>::quiet_NaN();  // beyond even the vector budget
        }
    }

    if (!cert.condition.holds)
        cert.verdict = Verdict::fails_condition;
    else if (!cert.resonance.clean)
        cert.verdict = Verdict::resonant_tau;
    else if (cert.rho_exact && cert.rho < 1.0 - convergence_margin)
        cert.verdict = Verdict::converges;
    else
        cert.verdict = Verdict::inconclusive;
    return cert;
}

inline constexpr double decay_floor = 1e-13;
inline constexpr int decay_min_points = 10;

// Least-squares slope of log w over the last half of the usable trace.
// Returns r with w(j) ~ A r^j, the empirical counterpart of rho^2; nullopt
// when too few points sit above the noise floor.
inline std::optional<double> fit_decay(const ProtocolTrace& trace) {
    std::vector<std::pair<double, double>> points;  // (step, log w)
    for (std::size_t j = 1; j < trace.w.size(); ++j) {
        if (trace.w[j] <= decay_floor) break;
        points.emplace_back(static_cast<double>(j), std::log(trace.w[j]));
    }
    const std::size_t start = points.size() / 2;
    const std::size_t count = points.size() - start;
    if (count < decay_min_points) return std::nullopt;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = start; i < points.size(); ++i) {
        sx += points[i].first;
        sy += points[i].second;
        sxx += points[i].first * points[i].first;
        sxy += points[i].first * points[i].second;
    }
    const double n = static_cast<double>(count);
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / denom;
    return std::exp(slope);
}

}  // namespace multirail
