#include "multirail/engine.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using Catch::Approx;
using namespace multirail;

namespace {

// gamma sequence through the operational path: evolve, read the success
// amplitude, project, repeat. Truncates when success becomes certain.
std::vector<Complex> gamma_by_states(JointState state, const Spectrum& s,
                                     const std::vector<double>& schedule) {
    std::vector<Complex> gammas;
    for (double t : schedule) {
        state = evolve(state, propagator(s, t));
        try {
            auto projection = project_failure(state);
            gammas.push_back(projection.gamma);
            state = std::move(projection.state);
        } catch (const success_certain&) {
            gammas.push_back(success_amplitude(state));
            break;
        }
    }
    return gammas;
}

}  // namespace

TEST_CASE("joint dimension guards") {
    CHECK(joint_dimension(3, 1) == 3);
    CHECK(joint_dimension(2, 2) == 4);
    CHECK(joint_dimension(10, 6) == 1'000'000);
    CHECK_THROWS_AS(joint_dimension(10, 7), budget_exceeded);
    CHECK_THROWS_AS(joint_dimension(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(joint_dimension(3, 0), std::invalid_argument);
}

TEST_CASE("initial states") {
    const auto dense = initial_dense_state(3, 1);
    REQUIRE(dense.amplitudes.size() == 3);
    CHECK(dense.amplitudes(0) == Complex(1.0, 0.0));
    CHECK(dense.amplitudes(1) == Complex(0.0, 0.0));

    const auto dense22 = initial_dense_state(2, 2);
    REQUIRE(dense22.amplitudes.size() == 4);
    CHECK(dense22.amplitudes(0) == Complex(1.0, 0.0));
    CHECK(norm(dense22) == Approx(1.0).margin(1e-15));

    const auto product = initial_product_state(7, 4);
    CHECK(product.terms.size() == 1);
    CHECK(norm(product) == Approx(1.0).margin(1e-15));

    // Automatic choice: dense for small joint spaces, product-sum otherwise.
    CHECK(std::holds_alternative<DenseJointState>(initial_state(8, 4)));    // 4096
    CHECK(std::holds_alternative<ProductSumState>(initial_state(9, 4)));   // 6561
    CHECK(std::holds_alternative<ProductSumState>(initial_state(20, 30)));
}

TEST_CASE("identity evolution leaves states untouched") {
    const auto s = spectrum(uniform_chain(4, ChainModel::xy));
    const auto identity = propagator(s, 0.0);

    const auto dense = evolve(initial_dense_state(4, 2), identity);
    CHECK(std::abs(dense.amplitudes(0) - Complex(1.0, 0.0)) < 1e-14);
    CHECK(dense.amplitudes.tail(15).cwiseAbs().maxCoeff() < 1e-14);

    const auto product = evolve(initial_product_state(4, 2), identity);
    CHECK(std::abs(product.terms[0].phi(0) - Complex(1.0, 0.0)) < 1e-14);
}

TEST_CASE("single-excitation dense evolution is a plain matrix-vector product") {
    SplitMix64 g(0x5eedf001);
    const auto spec = oracles::random_open_chain(g, 7, ChainModel::heisenberg);
    const auto s = spectrum(spec);
    const auto f = propagator(s, 1.3);

    auto state = initial_dense_state(s.dim(), 1);
    state = evolve(state, f);
    CHECK((state.amplitudes - f.matrix.col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dense evolution matches the Kronecker-product oracle") {
    SplitMix64 g(0x5eedf002);
    for (int trial = 0; trial < 6; ++trial) {
        const auto spec = oracles::random_open_chain(g, 4, ChainModel::xy);
        const auto s = spectrum(spec);
        const int n = s.dim();
        const int k = 2 + static_cast<int>(g.next() % 2);
        const auto f = propagator(s, 0.4 + 2.0 * g.next_unit());

        // Random dense state, normalized.
        DenseJointState state;
        state.sites = n;
        state.excitations = k;
        state.amplitudes = Vector(static_cast<Eigen::Index>(joint_dimension(n, k)));
        for (Eigen::Index i = 0; i < state.amplitudes.size(); ++i)
            state.amplitudes(i) = Complex(g.next_unit() - 0.5, g.next_unit() - 0.5);
        state.amplitudes.normalize();

        const Vector expected = oracles::tensor_power(f.matrix, k) * state.amplitudes;
        const auto evolved = evolve(state, f);
        CHECK((evolved.amplitudes - expected).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(norm(evolved) == Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("two-rail two-excitation corner amplitude is the squared hop") {
    const auto s = spectrum(uniform_chain(2, ChainModel::xy));
    const double t = 0.9;
    const auto f = propagator(s, t);
    const auto state = evolve(initial_dense_state(2, 2), f);
    // Index 3 decodes to (2,2): both excitations arrived.
    CHECK(std::abs(state.amplitudes(3) - f.matrix(1, 0) * f.matrix(1, 0)) < 1e-13);
    CHECK(std::abs(success_amplitude(state) - state.amplitudes(3)) < 1e-15);
}

TEST_CASE("success amplitude") {
    CHECK(success_amplitude(initial_dense_state(5, 2)) == Complex(0.0, 0.0));
    CHECK(success_amplitude(initial_product_state(5, 2)) == Complex(0.0, 0.0));

    const auto s = spectrum(uniform_chain(3, ChainModel::xy));
    const double t = 1.1;
    for (int k : {1, 2, 3}) {
        auto state = evolve(initial_product_state(3, k), propagator(s, t));
        Complex expected(1.0, 0.0);
        for (int j = 0; j < k; ++j) expected *= transfer_amplitude(s, t);
        CHECK(std::abs(success_amplitude(state) - expected) < 1e-12);
    }

    // Perfect-transfer instant: the amplitude hits unit magnitude even for
    // several excitations.
    const double instant = std::numbers::pi / std::sqrt(2.0);
    auto state = evolve(initial_product_state(3, 2), propagator(s, instant));
    CHECK(std::abs(success_amplitude(state)) == Approx(1.0).margin(1e-10));
}

TEST_CASE("product-sum norm agrees with the dense expansion") {
    SplitMix64 g(0x5eedf003);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 3 + static_cast<int>(g.next() % 3);
        const int k = 1 + static_cast<int>(g.next() % 3);
        ProductSumState state;
        state.sites = n;
        state.excitations = k;
        for (int term = 0; term < 3; ++term) {
            Vector phi(n);
            for (int i = 0; i < n; ++i) phi(i) = Complex(g.next_unit() - 0.5, g.next_unit() - 0.5);
            state.terms.push_back({Complex(g.next_unit() - 0.5, g.next_unit() - 0.5), phi});
        }
        CHECK(norm(state) == Approx(norm(to_dense(state))).margin(1e-10));
    }
}

TEST_CASE("to_dense expands term by term") {
    // Single initial term reproduces the dense initial state.
    CHECK((to_dense(initial_product_state(4, 2)).amplitudes -
           initial_dense_state(4, 2).amplitudes)
              .cwiseAbs()
              .maxCoeff() < 1e-15);

    // Opposite terms cancel exactly.
    ProductSumState cancel;
    cancel.sites = 3;
    cancel.excitations = 2;
    Vector v(3);
    v << Complex(0.5, 0.1), Complex(-0.2, 0.3), Complex(0.4, 0.0);
    cancel.terms.push_back({Complex(1.0, 0.0), v});
    cancel.terms.push_back({Complex(-1.0, 0.0), v});
    CHECK(to_dense(cancel).amplitudes.cwiseAbs().maxCoeff() < 1e-15);

    // Random three-term state against the Kronecker oracle.
    SplitMix64 g(0x5eedf004);
    ProductSumState state;
    state.sites = 4;
    state.excitations = 2;
    Vector expected = Vector::Zero(16);
    for (int term = 0; term < 3; ++term) {
        Vector phi(4);
        for (int i = 0; i < 4; ++i) phi(i) = Complex(g.next_unit() - 0.5, g.next_unit() - 0.5);
        const Complex c(g.next_unit() - 0.5, g.next_unit() - 0.5);
        state.terms.push_back({c, phi});
        expected += c * oracles::tensor_power(phi, 2);
    }
    CHECK((to_dense(state).amplitudes - expected).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(to_dense(initial_product_state(100, 100)), budget_exceeded);
}

TEST_CASE("failure projection removes exactly the success component") {
    const auto s = spectrum(uniform_chain(4, ChainModel::heisenberg));
    const auto f = propagator(s, 1.7);

    // Dense path.
    auto dense = evolve(initial_dense_state(4, 2), f);
    const auto dense_proj = project_failure(dense);
    CHECK(dense_proj.probability == Approx(std::norm(dense_proj.gamma)).margin(1e-15));
    CHECK(std::abs(success_amplitude(dense_proj.state)) < 1e-10);
    CHECK(norm(dense_proj.state) == Approx(1.0).margin(1e-10));

    // Product-sum path: one extra term, same gamma.
    auto product = evolve(initial_product_state(4, 2), f);
    const auto product_proj = project_failure(product);
    CHECK(product_proj.state.terms.size() == 2);
    CHECK(std::abs(product_proj.gamma - dense_proj.gamma) < 1e-12);
    CHECK(std::abs(success_amplitude(product_proj.state)) < 1e-10);
    CHECK(norm(product_proj.state) == Approx(1.0).margin(1e-9));
}

TEST_CASE("projection with zero success amplitude is the identity") {
    const auto state = initial_dense_state(3, 1);
    const auto projection = project_failure(state);
    CHECK(projection.probability == 0.0);
    CHECK((projection.state.amplitudes - state.amplitudes).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("projection refuses certain success") {
    DenseJointState arrived;
    arrived.sites = 2;
    arrived.excitations = 1;
    arrived.amplitudes = Vector::Zero(2);
    arrived.amplitudes(1) = Complex(1.0, 0.0);
    CHECK_THROWS_AS(project_failure(arrived), success_certain);

    try {
        project_failure(arrived);
    } catch (const success_certain& e) {
        CHECK(e.probability == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("two-site rank-one projection in closed form") {
    DenseJointState state;
    state.sites = 2;
    state.excitations = 1;
    state.amplitudes = Vector(2);
    state.amplitudes << Complex(0.6, 0.0), Complex(0.0, 0.8);
    const auto projection = project_failure(state);
    CHECK(projection.probability == Approx(0.64).margin(1e-15));
    CHECK(std::abs(projection.state.amplitudes(0) - Complex(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(projection.state.amplitudes(1)) < 1e-15);
}

TEST_CASE("term count grows by one per projection and small terms drop") {
    const auto s = spectrum(uniform_chain(5, ChainModel::xy));
    const auto f = propagator(s, 0.9);
    JointState state = initial_product_state(5, 2);
    for (int step = 1; step <= 6; ++step) {
        state = evolve(state, f);
        auto projection = project_failure(state);
        state = std::move(projection.state);
        CHECK(std::get<ProductSumState>(state).terms.size() <=
              static_cast<std::size_t>(step + 1));
    }
    CHECK(norm(state) == Approx(1.0).margin(1e-9));
}

TEST_CASE("closed-form recursion base case and guards") {
    const auto s = spectrum(uniform_chain(4, ChainModel::heisenberg));
    for (int k : {1, 2}) {
        const auto gammas = recursion_gamma({1.4}, s, k);
        REQUIRE(gammas.size() == 1);
        Complex expected(1.0, 0.0);
        for (int j = 0; j < k; ++j) expected *= transfer_amplitude(s, 1.4);
        CHECK(std::abs(gammas[0] - expected) < 1e-12);
    }

    CHECK(recursion_gamma({}, s, 1).empty());
    CHECK_THROWS_AS(recursion_gamma(std::vector<double>(9, 1.0), s, 1), budget_exceeded);
}

TEST_CASE("two-site two-step recursion matches the hand-expanded formula") {
    const auto s = spectrum(uniform_chain(2, ChainModel::xy));
    const double t1 = 0.7, t2 = 1.9;
    const auto f1 = propagator(s, t1).matrix;
    const auto f2 = propagator(s, t2).matrix;

    const auto gammas = recursion_gamma({t1, t2}, s, 1);
    REQUIRE(gammas.size() == 2);
    CHECK(std::abs(gammas[0] - f1(1, 0)) < 1e-13);
    const Complex expected = f2(1, 0) * f1(0, 0) / std::sqrt(1.0 - std::norm(f1(1, 0)));
    CHECK(std::abs(gammas[1] - expected) < 1e-13);
}

TEST_CASE("recursion terminates at a perfect-transfer instant") {
    const auto s = spectrum(uniform_chain(3, ChainModel::xy));
    const double instant = std::numbers::pi / std::sqrt(2.0);
    const auto gammas = recursion_gamma({instant, instant, instant}, s, 1);
    REQUIRE(gammas.size() == 1);  // certainty reached; later steps never evaluated
    CHECK(std::abs(gammas[0]) == Approx(1.0).margin(1e-10));
}

TEST_CASE("dense, product-sum, and recursion paths give identical gammas") {
    SplitMix64 g(0x5eedf005);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spec = oracles::random_open_chain(
            g, 5, (trial % 2) ? ChainModel::heisenberg : ChainModel::xy);
        const auto s = spectrum(spec);
        const int k = 1 + static_cast<int>(g.next() % 2);
        std::vector<double> schedule;
        const int q = 2 + static_cast<int>(g.next() % 3);
        for (int j = 0; j < q; ++j) schedule.push_back(0.3 + 2.5 * g.next_unit());

        const auto reference = recursion_gamma(schedule, s, k);
        const auto dense =
            gamma_by_states(initial_state(s.dim(), k, Representation::dense), s, schedule);
        const auto product =
            gamma_by_states(initial_state(s.dim(), k, Representation::product_sum), s, schedule);

        REQUIRE(dense.size() == reference.size());
        REQUIRE(product.size() == reference.size());
        for (std::size_t j = 0; j < reference.size(); ++j) {
            CHECK(std::abs(dense[j] - reference[j]) < 1e-9);
            CHECK(std::abs(product[j] - reference[j]) < 1e-9);
        }
    }
}

TEST_CASE("norm is conserved by evolution for both representations") {
    SplitMix64 g(0x5eedf006);
    const auto spec = oracles::random_open_chain(g, 6, ChainModel::xy);
    const auto s = spectrum(spec);
    const auto f = propagator(s, 2.3);

    JointState dense = initial_state(s.dim(), 2, Representation::dense);
    JointState product = initial_state(s.dim(), 2, Representation::product_sum);
    for (int step = 0; step < 5; ++step) {
        dense = evolve(dense, f);
        product = evolve(product, f);
        CHECK(norm(dense) == Approx(1.0).margin(1e-10));
        CHECK(norm(product) == Approx(1.0).margin(1e-10));
    }
}
