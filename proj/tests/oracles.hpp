// oracles.hpp: independent reference implementations for the test suite.
//
// Everything here deliberately avoids the code paths under test: the matrix
// exponential is scaling-and-squaring on a Taylor series (no
// eigendecomposition), tensor products are built by explicit Kronecker
// expansion, and subsets are enumerated by brute force.

#pragma once

#include "multirail/chain.hpp"
#include "multirail/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracles {

using multirail::Complex;
using multirail::Matrix;
using multirail::Vector;

// exp(-i H t) by scaling-and-squaring: ||A|| is halved until the Taylor
// series converges in a few dozen terms, then the result is squared back.
inline Matrix expm_propagator(const Matrix& h, double t) {
    Matrix a = Complex(0.0, -t) * h;
    int squarings = 0;
    double scale = a.cwiseAbs().maxCoeff() * static_cast<double>(a.rows());
    while (scale > 0.5) {
        a *= 0.5;
        scale *= 0.5;
        ++squarings;
    }

    Matrix result = Matrix::Identity(a.rows(), a.cols());
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    for (int k = 1; k <= 40; ++k) {
        term = term * a / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int k = 0; k < squarings; ++k) result = result * result;
    return result;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
    return out;
}

inline Vector tensor_power(const Vector& v, int k) {
    Vector out = v;
    for (int j = 1; j < k; ++j) out = kron(out, v);
    return out;
}

inline Matrix tensor_power(const Matrix& m, int k) {
    Matrix out = m;
    for (int j = 1; j < k; ++j) out = kron(out, m);
    return out;
}

// All K-subsets of {1..M} in lexicographic order, by direct recursion.
inline std::vector<std::vector<int>> all_subsets(int rails, int excitations) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    auto recurse = [&](auto&& self, int next) -> void {
        if (static_cast<int>(current.size()) == excitations) {
            out.push_back(current);
            return;
        }
        const int needed = excitations - static_cast<int>(current.size());
        for (int v = next; v <= rails - needed + 1; ++v) {
            current.push_back(v);
            self(self, v + 1);
            current.pop_back();
        }
    };
    recurse(recurse, 1);
    return out;
}

// Deterministic random chains for property tests. Couplings stay away from
// zero so the overlap condition generically holds.
inline multirail::ChainSpec random_open_chain(multirail::SplitMix64& g, int max_sites,
                                              multirail::ChainModel model) {
    multirail::ChainSpec spec;
    spec.sites = 2 + static_cast<int>(g.next() % static_cast<std::uint64_t>(max_sites - 1));
    spec.model = model;
    spec.periodic = false;
    spec.couplings.resize(static_cast<std::size_t>(spec.sites - 1));
    spec.onsite.resize(static_cast<std::size_t>(spec.sites));
    for (auto& j : spec.couplings) {
        const double magnitude = 0.2 + 1.3 * g.next_unit();
        j = (g.next() & 1) ? magnitude : -magnitude;
    }
    for (auto& b : spec.onsite) b = 2.0 * g.next_unit() - 1.0;
    return spec;
}

}  // namespace oracles
