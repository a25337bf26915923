// engine.hpp: joint state of the K excited chains between measurements.
//
// Two interchangeable representations:
//   DenseJointState    full N^K amplitude vector, row-major with the first
//                      chain index slowest. Exact but exponential in K.
//   ProductSumState    sum of product terms c_j * phi_j^{(x)K}. Each failure
//                      projection adds exactly one term, so a q-step run
//                      costs O(q^2 N^2) instead of O(N^K).
// Both support the same operations and are cross-checked in the tests.

#pragma once

#include "multirail/chain.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace multirail {

inline constexpr double term_drop_epsilon = 1e-14;
inline constexpr double success_certain_threshold = 1.0 - 1e-12;
inline constexpr std::uint64_t default_dense_budget = std::uint64_t{1} << 20;

// Raised when a failure projection is requested on a state whose success
// probability is already 1 up to roundoff; dividing by sqrt(1-p) would
// amplify noise, and the protocol should stop instead.
struct success_certain : std::runtime_error {
    double probability;
    explicit success_certain(double p)
        : std::runtime_error("success probability is 1 within tolerance; nothing to project"),
          probability(p) {}
};

struct budget_exceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Representation { dense, product_sum, automatic };

inline std::string to_string(Representation r) {
    switch (r) {
        case Representation::dense: return "dense";
        case Representation::product_sum: return "product_sum";
        case Representation::automatic: return "auto";
    }
    throw std::logic_error("unknown representation");
}

inline Representation representation_from_string(const std::string& name) {
    if (name == "dense") return Representation::dense;
    if (name == "product_sum") return Representation::product_sum;
    if (name == "auto") return Representation::automatic;
    throw std::invalid_argument("unknown representation '" + name +
                                "' (expected dense, product_sum, or auto)");
}

// N^K with overflow detection; throws budget_exceeded past the given cap.
inline std::uint64_t joint_dimension(int sites, int excitations,
                                     std::uint64_t budget = default_dense_budget) {
    if (sites < 2) throw std::invalid_argument("joint_dimension: need at least two sites");
    if (excitations < 1) throw std::invalid_argument("joint_dimension: need at least one excitation");
    std::uint64_t dim = 1;
    for (int j = 0; j < excitations; ++j) {
        if (dim > budget / static_cast<std::uint64_t>(sites))
            throw budget_exceeded("joint dimension " + std::to_string(sites) + "^" +
                                  std::to_string(excitations) + " exceeds budget " +
                                  std::to_string(budget));
        dim *= static_cast<std::uint64_t>(sites);
    }
    return dim;
}

struct DenseJointState {
    int sites = 0;
    int excitations = 0;
    Vector amplitudes;  // length sites^excitations, row-major, first index slowest
};

struct ProductSumState {
    struct Term {
        Complex coefficient;
        Vector phi;
    };
    int sites = 0;
    int excitations = 0;
    std::vector<Term> terms;
};

using JointState = std::variant<DenseJointState, ProductSumState>;

// ---------------------------------------------------------------------------
// construction

inline DenseJointState initial_dense_state(int sites, int excitations,
                                           std::uint64_t budget = default_dense_budget) {
    DenseJointState state;
    state.sites = sites;
    state.excitations = excitations;
    const auto dim = joint_dimension(sites, excitations, budget);
    state.amplitudes = Vector::Zero(static_cast<Eigen::Index>(dim));
    state.amplitudes(0) = Complex(1.0, 0.0);  // every excitation at site 1
    return state;
}

inline ProductSumState initial_product_state(int sites, int excitations) {
    if (sites < 2) throw std::invalid_argument("initial_product_state: need at least two sites");
    if (excitations < 1)
        throw std::invalid_argument("initial_product_state: need at least one excitation");
    ProductSumState state;
    state.sites = sites;
    state.excitations = excitations;
    Vector phi = Vector::Zero(sites);
    phi(0) = Complex(1.0, 0.0);
    state.terms.push_back({Complex(1.0, 0.0), std::move(phi)});
    return state;
}

inline JointState initial_state(int sites, int excitations,
                                Representation rep = Representation::automatic,
                                std::uint64_t budget = default_dense_budget) {
    if (rep == Representation::automatic) {
        std::uint64_t dim = 1;
        bool fits = true;
        for (int j = 0; j < excitations && fits; ++j) {
            if (dim > 4096u / static_cast<unsigned>(sites)) fits = false;
            dim *= static_cast<std::uint64_t>(sites);
        }
        rep = (fits && dim <= 4096) ? Representation::dense : Representation::product_sum;
    }
    if (rep == Representation::dense) return initial_dense_state(sites, excitations, budget);
    return initial_product_state(sites, excitations);
}

// ---------------------------------------------------------------------------
// evolution

// Applies f along tensor axis `axis` (0 = slowest index). The vector is
// viewed as (outer, sites, inner) with inner = sites^(K-1-axis).
namespace detail {
inline void apply_to_axis(Vector& amplitudes, const Matrix& f, int sites, int excitations,
                          int axis) {
    Eigen::Index inner = 1;
    for (int j = axis + 1; j < excitations; ++j) inner *= sites;
    const Eigen::Index outer = amplitudes.size() / (inner * sites);

    Vector slice(sites);
    for (Eigen::Index o = 0; o < outer; ++o) {
        const Eigen::Index base = o * sites * inner;
        for (Eigen::Index i = 0; i < inner; ++i) {
            for (int n = 0; n < sites; ++n) slice(n) = amplitudes(base + n * inner + i);
            Vector out = f * slice;
            for (int n = 0; n < sites; ++n) amplitudes(base + n * inner + i) = out(n);
        }
    }
}
}  // namespace detail

inline DenseJointState evolve(const DenseJointState& state, const Propagator& f) {
    if (f.matrix.rows() != state.sites)
        throw std::invalid_argument("evolve: propagator dimension does not match state");
    DenseJointState next = state;
    for (int axis = 0; axis < state.excitations; ++axis)
        detail::apply_to_axis(next.amplitudes, f.matrix, state.sites, state.excitations, axis);
    return next;
}

inline ProductSumState evolve(const ProductSumState& state, const Propagator& f) {
    if (f.matrix.rows() != state.sites)
        throw std::invalid_argument("evolve: propagator dimension does not match state");
    ProductSumState next = state;
    for (auto& term : next.terms) term.phi = f.matrix * term.phi;
    return next;
}

inline JointState evolve(const JointState& state, const Propagator& f) {
    return std::visit([&](const auto& s) -> JointState { return evolve(s, f); }, state);
}

// ---------------------------------------------------------------------------
// measurement bookkeeping

inline Complex success_amplitude(const DenseJointState& state) {
    return state.amplitudes(state.amplitudes.size() - 1);  // index (N,...,N)
}

inline Complex success_amplitude(const ProductSumState& state) {
    Complex gamma(0.0, 0.0);
    for (const auto& term : state.terms) {
        const Complex tail = term.phi(state.sites - 1);
        Complex power(1.0, 0.0);
        for (int j = 0; j < state.excitations; ++j) power *= tail;
        gamma += term.coefficient * power;
    }
    return gamma;
}

inline Complex success_amplitude(const JointState& state) {
    return std::visit([](const auto& s) { return success_amplitude(s); }, state);
}

inline double squared_norm(const DenseJointState& state) { return state.amplitudes.squaredNorm(); }

// Gram-based norm: <psi|psi> = sum_ij conj(c_i) c_j <phi_i|phi_j>^K.
inline double squared_norm(const ProductSumState& state) {
    const auto count = state.terms.size();
    Complex total(0.0, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            const Complex overlap = state.terms[i].phi.dot(state.terms[j].phi);
            Complex power(1.0, 0.0);
            for (int k = 0; k < state.excitations; ++k) power *= overlap;
            total += std::conj(state.terms[i].coefficient) * state.terms[j].coefficient * power;
        }
    }
    return std::max(0.0, total.real());
}

inline double norm(const DenseJointState& state) { return std::sqrt(squared_norm(state)); }

inline double norm(const ProductSumState& state) { return std::sqrt(squared_norm(state)); }

inline double norm(const JointState& state) {
    return std::visit([](const auto& s) { return norm(s); }, state);
}

template <typename State>
struct FailureResidual {
    State state;
    Complex gamma;        // success amplitude removed by the projection
    double probability;   // |gamma|^2
};

// Both projections renormalize by the computed leftover norm
// sqrt(<psi|psi> - |gamma|^2) rather than the analytically equal
// sqrt(1 - p). For a unit input the two coincide, but dividing by the
// literal sqrt(1 - p) amplifies any normalization error by 1/(1 - p) per
// step, which compounds exponentially over long runs; the computed norm
// keeps the iteration self-correcting.

inline FailureResidual<DenseJointState> project_failure(const DenseJointState& state) {
    const Complex gamma = success_amplitude(state);
    const double total = squared_norm(state);
    const double p = std::min(1.0, std::norm(gamma) / total);
    if (p > success_certain_threshold) throw success_certain(p);
    FailureResidual<DenseJointState> result{state, gamma, p};
    result.state.amplitudes(result.state.amplitudes.size() - 1) = Complex(0.0, 0.0);
    result.state.amplitudes /= std::sqrt(total - std::norm(gamma));
    return result;
}

inline FailureResidual<ProductSumState> project_failure(const ProductSumState& state) {
    const Complex gamma = success_amplitude(state);
    const double total = squared_norm(state);
    const double p = std::min(1.0, std::norm(gamma) / total);
    if (p > success_certain_threshold) throw success_certain(p);

    FailureResidual<ProductSumState> result{state, gamma, p};
    const double scale = 1.0 / std::sqrt(total - std::norm(gamma));
    for (auto& term : result.state.terms) term.coefficient *= scale;

    Vector tail = Vector::Zero(state.sites);
    tail(state.sites - 1) = Complex(1.0, 0.0);
    result.state.terms.push_back({-gamma * scale, std::move(tail)});

    std::erase_if(result.state.terms,
                  [](const auto& term) { return std::abs(term.coefficient) < term_drop_epsilon; });
    return result;
}

inline FailureResidual<JointState> project_failure(const JointState& state) {
    return std::visit(
        [](const auto& s) -> FailureResidual<JointState> {
            auto r = project_failure(s);
            return {JointState(std::move(r.state)), r.gamma, r.probability};
        },
        state);
}

// ---------------------------------------------------------------------------
// representation bridge

inline DenseJointState to_dense(const ProductSumState& state,
                                std::uint64_t budget = default_dense_budget) {
    DenseJointState dense;
    dense.sites = state.sites;
    dense.excitations = state.excitations;
    const auto dim = joint_dimension(state.sites, state.excitations, budget);
    dense.amplitudes = Vector::Zero(static_cast<Eigen::Index>(dim));

    std::vector<int> digits(static_cast<std::size_t>(state.excitations), 0);
    for (std::uint64_t idx = 0; idx < dim; ++idx) {
        auto rest = idx;
        for (int j = state.excitations - 1; j >= 0; --j) {
            digits[static_cast<std::size_t>(j)] = static_cast<int>(rest % state.sites);
            rest /= static_cast<std::uint64_t>(state.sites);
        }
        Complex value(0.0, 0.0);
        for (const auto& term : state.terms) {
            Complex product = term.coefficient;
            for (int d : digits) product *= term.phi(d);
            value += product;
        }
        dense.amplitudes(static_cast<Eigen::Index>(idx)) = value;
    }
    return dense;
}

inline DenseJointState to_dense(const JointState& state,
                                std::uint64_t budget = default_dense_budget) {
    if (const auto* d = std::get_if<DenseJointState>(&state)) return *d;
    return to_dense(std::get<ProductSumState>(state), budget);
}

// ---------------------------------------------------------------------------
// closed-form recursion for the conditional success amplitudes
//
// Independent of the state machinery above: works directly with the kernel
// F[n_vec, m_vec; t] = prod_j f_{n_j, m_j}(t) and the textbook recursion
//   gamma_q = sum_{n != N_vec} F[N_vec, n; t_q] K_{q-1}[n]
//   K_q[n]  = sum_{m != N_vec} F[n, m; t_q] K_{q-1}[m] / sqrt(1 - |gamma_q|^2)
// with K_0 the point mass at (1,...,1). Used as an oracle for evolve +
// project_failure; the explicit double sum limits it to small N^K.

inline constexpr std::uint64_t recursion_dimension_guard = 1'000'000;
inline constexpr int recursion_step_guard = 8;

inline std::vector<Complex> recursion_gamma(const std::vector<double>& schedule,
                                            const Spectrum& s, int excitations) {
    if (schedule.empty()) return {};
    if (static_cast<int>(schedule.size()) > recursion_step_guard)
        throw budget_exceeded("recursion_gamma: schedule longer than " +
                              std::to_string(recursion_step_guard) + " steps");
    const int sites = s.dim();
    const auto dim = joint_dimension(sites, excitations, recursion_dimension_guard);

    std::vector<std::vector<int>> index(dim);
    for (std::uint64_t idx = 0; idx < dim; ++idx) {
        auto rest = idx;
        std::vector<int> digits(static_cast<std::size_t>(excitations), 0);
        for (int j = excitations - 1; j >= 0; --j) {
            digits[static_cast<std::size_t>(j)] = static_cast<int>(rest % sites);
            rest /= static_cast<std::uint64_t>(sites);
        }
        index[idx] = std::move(digits);
    }
    const std::uint64_t target = dim - 1;  // (N,...,N)

    std::vector<Complex> kernel(dim, Complex(0.0, 0.0));
    kernel[0] = Complex(1.0, 0.0);  // all excitations at site 1

    std::vector<Complex> gammas;
    gammas.reserve(schedule.size());
    for (double t : schedule) {
        const Matrix f = propagator(s, t).matrix;
        std::vector<Complex> next(dim, Complex(0.0, 0.0));
        for (std::uint64_t n = 0; n < dim; ++n) {
            Complex acc(0.0, 0.0);
            for (std::uint64_t m = 0; m < dim; ++m) {
                if (m == target) continue;  // prior projection removed this component
                if (kernel[m] == Complex(0.0, 0.0)) continue;
                Complex element(1.0, 0.0);
                for (int j = 0; j < excitations; ++j)
                    element *= f(index[n][static_cast<std::size_t>(j)],
                                 index[m][static_cast<std::size_t>(j)]);
                acc += element * kernel[m];
            }
            next[n] = acc;
        }
        const Complex gamma = next[target];
        gammas.push_back(gamma);
        const double p = std::min(1.0, std::norm(gamma));
        if (p > success_certain_threshold) break;  // transfer certain; recursion ends
        const double scale = 1.0 / std::sqrt(1.0 - p);
        for (auto& value : next) value *= scale;
        kernel = std::move(next);
    }
    return gammas;
}

}  // namespace multirail
