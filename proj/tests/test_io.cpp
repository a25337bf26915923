#include "multirail/io.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

using Catch::Approx;
using namespace multirail;

TEST_CASE("shortest round-trip double formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-13) == "-2.5e-13");

    SplitMix64 g(0x5eed1001);
    for (int trial = 0; trial < 100; ++trial) {
        const double x = (g.next_unit() - 0.5) * std::pow(10.0, static_cast<double>(g.next() % 20) - 10.0);
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("chain spec json round trip") {
    ChainSpec spec = uniform_chain(5, ChainModel::heisenberg, 0.8, -0.2, true);
    spec.couplings.back() = 0.3;

    const Json j = spec;
    CHECK(j.at("sites") == 5);
    CHECK(j.at("model") == "heisenberg");
    CHECK(j.at("periodic") == true);

    const auto back = j.get<ChainSpec>();
    CHECK(back.sites == spec.sites);
    CHECK(back.model == spec.model);
    CHECK(back.couplings == spec.couplings);
    CHECK(back.onsite == spec.onsite);
    CHECK(back.periodic == spec.periodic);
}

TEST_CASE("custom chain spec carries its matrix as re/im pairs") {
    ChainSpec spec;
    spec.sites = 2;
    spec.model = ChainModel::custom;
    spec.custom_matrix = Matrix::Zero(2, 2);
    spec.custom_matrix(0, 1) = Complex(0.5, -0.25);
    spec.custom_matrix(1, 0) = Complex(0.5, 0.25);

    const Json j = spec;
    const auto back = j.get<ChainSpec>();
    CHECK((back.custom_matrix - spec.custom_matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK_NOTHROW(back.validate());

    // Defaults: missing optional keys parse as open chain with empty arrays.
    const Json minimal = {{"sites", 3}, {"model", "xy"},
                          {"couplings", {1.0, 1.0}}, {"onsite", {0.0, 0.0, 0.0}}};
    CHECK_NOTHROW(minimal.get<ChainSpec>().validate());
}

TEST_CASE("schedule json round trip with jitter") {
    Schedule schedule = uniform_schedule(0.7, 3);
    schedule.jitter = JitterSpec{"uniform", 0.05, 12345};

    const Json j = schedule;
    CHECK(j.at("strategy") == "uniform");
    const auto back = j.get<Schedule>();
    CHECK(back.intervals == schedule.intervals);
    CHECK(back.strategy == schedule.strategy);
    REQUIRE(back.jitter.has_value());
    CHECK(back.jitter->width == 0.05);
    CHECK(back.jitter->seed == 12345);

    Schedule plain = uniform_schedule(1.0, 2);
    const auto no_jitter = Json(plain).get<Schedule>();
    CHECK_FALSE(no_jitter.jitter.has_value());
}

TEST_CASE("certificate json exposes the documented keys") {
    const auto s = spectrum(uniform_chain(4, ChainModel::heisenberg));
    auto cert = certify(s, 1.0, 1);
    cert.empirical_rate = 0.42;

    const Json j = cert;
    std::set<std::string> actual;
    for (const auto& item : j.items()) actual.insert(item.key());
    CHECK(actual == std::set<std::string>{"tau", "K", "rho", "verdict", "min_overlap",
                                          "degenerate", "resonant_pairs", "empirical_rate"});
    CHECK(j.at("verdict") == "converges");
    CHECK(j.at("empirical_rate") == Approx(0.42));

    // Without a fitted rate the key is present but null.
    const auto bare = certify(s, 1.0, 1);
    CHECK(Json(bare).at("empirical_rate").is_null());

    // Ring: degenerate flag set.
    const auto ring = certify(spectrum(uniform_chain(4, ChainModel::xy, 1.0, 0.0, true)), 1.0, 1);
    CHECK(Json(ring).at("degenerate") == true);
    CHECK(Json(ring).at("verdict") == "fails_condition");
}

TEST_CASE("trace csv layout and determinism") {
    const auto s = spectrum(uniform_chain(4, ChainModel::xy));
    const auto trace = run(s, 1, uniform_schedule(0.9, 5));
    const std::string csv = trace_csv(trace);

    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "step,t,p,pi,P,w");
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(rows == trace.steps());

    // First row carries step 1 and the w value after that step.
    const std::string expected_first = "1," + format_double(trace.intervals[0]) + "," +
                                       format_double(trace.p[0]) + "," +
                                       format_double(trace.pi[0]) + "," +
                                       format_double(trace.P[0]) + "," +
                                       format_double(trace.w[1]);
    CHECK(csv.find(expected_first) != std::string::npos);

    CHECK(trace_csv(run(s, 1, uniform_schedule(0.9, 5))) == csv);
}

TEST_CASE("trace json carries metadata") {
    const auto s = spectrum(uniform_chain(3, ChainModel::xy));
    const auto trace = run(s, 2, uniform_schedule(0.8, 4));
    const Json j = trace;
    CHECK(j.at("metadata").at("sites") == 3);
    CHECK(j.at("metadata").at("excitations") == 2);
    CHECK(j.at("metadata").at("steps") == trace.steps());
    CHECK(j.at("p").size() == static_cast<std::size_t>(trace.steps()));
    CHECK(j.at("w").size() == static_cast<std::size_t>(trace.steps()) + 1);
}

TEST_CASE("state dumps") {
    const Json dense = Json(JointState(initial_dense_state(3, 2)));
    CHECK(dense.at("representation") == "dense");
    CHECK(dense.at("amplitudes").size() == 9);
    CHECK(dense.at("amplitudes")[0][0] == 1.0);
    CHECK(dense.at("amplitudes")[0][1] == 0.0);

    const Json product = Json(JointState(initial_product_state(3, 2)));
    CHECK(product.at("representation") == "product_sum");
    CHECK(product.at("terms").size() == 1);
    CHECK(product.at("terms")[0].at("phi").size() == 3);
}

TEST_CASE("rail code json keeps exact codeword counts as strings") {
    const Json j = RailCode::make(100, 50);
    CHECK(j.at("codewords") == "100891344545564193334812497256");
    CHECK(j.at("qubits") == 96);

    const Json small = RailCode::make(5, 2);
    CHECK(small.at("codewords") == "10");
    CHECK(small.at("rate") == Approx(std::log2(10.0) / 5.0));
}

TEST_CASE("histogram serialization") {
    const auto histogram = sample_success_steps({0.5, 0.5}, 1000, 7);
    const Json j = histogram;
    CHECK(j.at("runs") == 1000);
    CHECK(j.at("counts").size() == 2);

    const std::string csv = histogram_csv(histogram);
    CHECK(csv.rfind("step,count,frequency\n", 0) == 0);
    CHECK(csv.find("never,") != std::string::npos);
}

TEST_CASE("json files round trip through disk") {
    const auto path = std::filesystem::temp_directory_path() / "multirail_io_test.json";
    const Json out = {{"alpha", 1}, {"beta", {1, 2, 3}}};
    write_text_file(path.string(), out.dump());
    const Json in = read_json_file(path.string());
    CHECK(in == out);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(read_json_file("/nonexistent/no.json"), std::runtime_error);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/out.json", "x"), std::runtime_error);
}
