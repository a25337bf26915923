// chain.hpp: single-excitation sector Hamiltonians, spectra, and propagators.
//
// A chain of N spins whose Hamiltonian commutes with total Sz keeps the
// one-excitation subspace span{|n>} invariant, so the dynamics in that
// sector is an N x N unitary f(t) with f[n'][n] = <n'|exp(-iHt)|n>
// (hbar = 1, times in inverse energy units).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace multirail {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Eigensolver non-convergence is reported distinctly, never approximated.
struct eigensolver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ChainModel { heisenberg, xy, custom };

inline std::string to_string(ChainModel m) {
    switch (m) {
        case ChainModel::heisenberg: return "heisenberg";
        case ChainModel::xy: return "xy";
        case ChainModel::custom: return "custom";
    }
    throw std::logic_error("unknown chain model");
}

inline ChainModel chain_model_from_string(const std::string& s) {
    if (s == "heisenberg") return ChainModel::heisenberg;
    if (s == "xy") return ChainModel::xy;
    if (s == "custom") return ChainModel::custom;
    throw std::invalid_argument("unknown chain model: " + s);
}

// Parameters of one chain. couplings[n] joins sites n+1 and n+2 (1-based
// site labels in the docs, 0-based storage); when periodic, one extra wrap
// coupling joining sites N and 1 is appended. The custom model bypasses the
// coupling arrays and carries the sector matrix directly, which is how
// engineered or long-range chains enter.
struct ChainSpec {
    int sites = 0;
    ChainModel model = ChainModel::xy;
    std::vector<double> couplings;
    std::vector<double> onsite;
    bool periodic = false;
    Matrix custom_matrix;  // used only when model == custom

    void validate() const {
        if (sites < 2) throw std::invalid_argument("ChainSpec: need at least 2 sites");
        if (model == ChainModel::custom) {
            if (custom_matrix.rows() != sites || custom_matrix.cols() != sites)
                throw std::invalid_argument("ChainSpec: custom matrix must be sites x sites");
            if (!custom_matrix.allFinite())
                throw std::invalid_argument("ChainSpec: custom matrix has non-finite entries");
            const double scale = std::max(1.0, custom_matrix.cwiseAbs().maxCoeff());
            if ((custom_matrix - custom_matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw std::invalid_argument("ChainSpec: custom matrix is not Hermitian");
            return;
        }
        const std::size_t expected = static_cast<std::size_t>(sites - 1) + (periodic ? 1 : 0);
        if (couplings.size() != expected)
            throw std::invalid_argument("ChainSpec: expected " + std::to_string(expected) +
                                        " couplings, got " + std::to_string(couplings.size()));
        if (onsite.size() != static_cast<std::size_t>(sites))
            throw std::invalid_argument("ChainSpec: onsite array must have one entry per site");
        for (double j : couplings)
            if (!std::isfinite(j)) throw std::invalid_argument("ChainSpec: non-finite coupling");
        for (double b : onsite)
            if (!std::isfinite(b)) throw std::invalid_argument("ChainSpec: non-finite onsite term");
    }
};

// Convenience constructors for the common uniform benchmarks.
inline ChainSpec uniform_chain(int sites, ChainModel model, double coupling = 1.0,
                               double field = 0.0, bool periodic = false) {
    ChainSpec spec;
    spec.sites = sites;
    spec.model = model;
    spec.periodic = periodic;
    spec.couplings.assign(static_cast<std::size_t>(sites - 1) + (periodic ? 1 : 0), coupling);
    spec.onsite.assign(static_cast<std::size_t>(sites), field);
    return spec;
}

// The Hamiltonian restricted to the N-dimensional single-excitation sector.
struct SingleExcitationOperator {
    int dim = 0;
    Matrix matrix;  // Hermitian by construction
};

struct Spectrum {
    Eigen::VectorXd eigenvalues;  // ascending
    Matrix eigenvectors;          // column m = |e_m>
    double operator_norm = 1.0;   // max-abs entry of the source matrix

    int dim() const { return static_cast<int>(eigenvalues.size()); }

    // Eigenvalues closer than this are treated as a single cluster.
    double degeneracy_tolerance() const { return 1e-9 * std::max(1.0, operator_norm); }
};

struct Propagator {
    double time = 0.0;
    Matrix matrix;  // f[n'][n], unitary
};

// Sector matrix assembly. Hopping h[n][n+1] = J_n for both built-in models;
// the Heisenberg diagonal carries the Ising contribution
//   h[n][n] = B_n - (sum of couplings on edges incident to n) / 2,
// i.e. the convention H = sum_n J_n [(X X + Y Y)/2 + Z Z/4]_{n,n+1}
//      + sum_n B_n (1 - Z_n)/2 with the excitation-free background dropped.
inline SingleExcitationOperator build_chain(const ChainSpec& spec) {
    spec.validate();
    const int n = spec.sites;
    SingleExcitationOperator op;
    op.dim = n;

    if (spec.model == ChainModel::custom) {
        // Symmetrize so the invariant holds exactly despite serialization round-off.
        op.matrix = 0.5 * (spec.custom_matrix + spec.custom_matrix.adjoint());
        return op;
    }

    op.matrix = Matrix::Zero(n, n);
    const int edges = static_cast<int>(spec.couplings.size());
    for (int e = 0; e < edges; ++e) {
        const int a = e;
        const int b = (e + 1) % n;  // wrap edge closes the ring
        op.matrix(a, b) += spec.couplings[static_cast<std::size_t>(e)];
        op.matrix(b, a) += spec.couplings[static_cast<std::size_t>(e)];
    }
    for (int i = 0; i < n; ++i) op.matrix(i, i) = spec.onsite[static_cast<std::size_t>(i)];
    if (spec.model == ChainModel::heisenberg) {
        for (int e = 0; e < edges; ++e) {
            const int a = e;
            const int b = (e + 1) % n;
            op.matrix(a, a) -= 0.5 * spec.couplings[static_cast<std::size_t>(e)];
            op.matrix(b, b) -= 0.5 * spec.couplings[static_cast<std::size_t>(e)];
        }
    }
    return op;
}

inline Spectrum spectrum(const SingleExcitationOperator& op) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(op.matrix);
    if (solver.info() != Eigen::Success)
        throw eigensolver_error("Hermitian eigendecomposition did not converge");
    Spectrum s;
    s.eigenvalues = solver.eigenvalues();
    s.eigenvectors = solver.eigenvectors();
    s.operator_norm = op.dim > 0 ? op.matrix.cwiseAbs().maxCoeff() : 0.0;
    return s;
}

inline Spectrum spectrum(const ChainSpec& spec) { return spectrum(build_chain(spec)); }

// f(t) = sum_m exp(-i E_m t) |e_m><e_m|. Built spectrally: unitary to
// round-off and O(N^2) storage per time point after one decomposition.
inline Propagator propagator(const Spectrum& s, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("propagator: time must be finite");
    const int n = s.dim();
    Vector phases(n);
    for (int m = 0; m < n; ++m)
        phases(m) = std::exp(Complex(0.0, -s.eigenvalues(m) * t));
    Propagator f;
    f.time = t;
    f.matrix = s.eigenvectors * phases.asDiagonal() * s.eigenvectors.adjoint();
    return f;
}

// End-to-end amplitude f[N][1] by direct mode summation, without forming
// the full propagator.
inline Complex transfer_amplitude(const Spectrum& s, double t) {
    if (!std::isfinite(t)) throw std::invalid_argument("transfer_amplitude: time must be finite");
    const int n = s.dim();
    Complex acc(0.0, 0.0);
    for (int m = 0; m < n; ++m)
        acc += std::exp(Complex(0.0, -s.eigenvalues(m) * t)) * s.eigenvectors(n - 1, m) *
               std::conj(s.eigenvectors(0, m));
    return acc;
}

}  // namespace multirail
