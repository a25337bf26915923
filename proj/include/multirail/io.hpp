// io.hpp: JSON and CSV serialization.
//
// JSON carries structured objects (chain specs, schedules, certificates,
// state dumps); CSV carries per-step traces and histograms for plotting.
// Doubles in CSV use the shortest round-trip decimal so reruns produce
// byte-identical files.

#pragma once

#include "multirail/chain.hpp"
#include "multirail/condition.hpp"
#include "multirail/convergence.hpp"
#include "multirail/encoding.hpp"
#include "multirail/engine.hpp"
#include "multirail/protocol.hpp"
#include "multirail/scheduler.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace multirail {

using Json = nlohmann::json;

inline std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (result.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buffer, result.ptr);
}

namespace detail {
inline Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2)
        throw std::invalid_argument("expected a [re, im] pair");
    return Complex(j[0].get<double>(), j[1].get<double>());
}
}  // namespace detail

// ---------------------------------------------------------------------------
// chain specs

inline void to_json(Json& j, const ChainSpec& spec) {
    j = Json{{"sites", spec.sites},
             {"model", to_string(spec.model)},
             {"couplings", spec.couplings},
             {"onsite", spec.onsite},
             {"periodic", spec.periodic}};
    if (spec.model == ChainModel::custom) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < spec.custom_matrix.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < spec.custom_matrix.cols(); ++c)
                row.push_back(detail::complex_to_json(spec.custom_matrix(r, c)));
            rows.push_back(std::move(row));
        }
        j["matrix"] = std::move(rows);
    }
}

inline void from_json(const Json& j, ChainSpec& spec) {
    spec.sites = j.at("sites").get<int>();
    spec.model = chain_model_from_string(j.at("model").get<std::string>());
    spec.couplings = j.value("couplings", std::vector<double>{});
    spec.onsite = j.value("onsite", std::vector<double>{});
    spec.periodic = j.value("periodic", false);
    if (spec.model == ChainModel::custom) {
        const Json& rows = j.at("matrix");
        const auto n = rows.size();
        spec.custom_matrix = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) {
            if (rows[r].size() != n)
                throw std::invalid_argument("ChainSpec: custom matrix must be square");
            for (std::size_t c = 0; c < n; ++c)
                spec.custom_matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    detail::complex_from_json(rows[r][c]);
        }
    }
}

// ---------------------------------------------------------------------------
// schedules

inline void to_json(Json& j, const JitterSpec& jitter) {
    j = Json{{"distribution", jitter.distribution},
             {"width", jitter.width},
             {"seed", jitter.seed}};
}

inline void from_json(const Json& j, JitterSpec& jitter) {
    jitter.distribution = j.value("distribution", std::string("uniform"));
    jitter.width = j.at("width").get<double>();
    jitter.seed = j.value("seed", std::uint64_t{0});
}

inline void to_json(Json& j, const Schedule& schedule) {
    j = Json{{"intervals", schedule.intervals}, {"strategy", to_string(schedule.strategy)}};
    if (schedule.jitter) j["jitter"] = *schedule.jitter;
}

inline void from_json(const Json& j, Schedule& schedule) {
    schedule.intervals = j.at("intervals").get<std::vector<double>>();
    schedule.strategy =
        schedule_strategy_from_string(j.value("strategy", std::string("custom")));
    if (j.contains("jitter")) schedule.jitter = j.at("jitter").get<JitterSpec>();
}

// ---------------------------------------------------------------------------
// condition and convergence reports

inline void to_json(Json& j, const ConditionReport& report) {
    Json clusters = Json::array();
    for (const auto& [energy, size] : report.degenerate_clusters)
        clusters.push_back(Json{{"energy", energy}, {"size", size}});
    j = Json{{"min_overlap", report.min_overlap},
             {"holds", report.holds},
             {"degenerate_clusters", std::move(clusters)},
             {"witness", report.witness}};
}

inline void to_json(Json& j, const ResonanceReport& report) {
    Json pairs = Json::array();
    for (const auto& [a, b] : report.colliding_pairs) pairs.push_back(Json::array({a, b}));
    j = Json{{"tau", report.tau}, {"clean", report.clean}, {"colliding_pairs", std::move(pairs)}};
}

inline void to_json(Json& j, const ConvergenceCertificate& cert) {
    Json pairs = Json::array();
    for (const auto& [a, b] : cert.resonance.colliding_pairs) pairs.push_back(Json::array({a, b}));
    j = Json{{"tau", cert.tau},
             {"K", cert.excitations},
             {"rho", cert.rho},
             {"verdict", to_string(cert.verdict)},
             {"min_overlap", cert.condition.min_overlap},
             {"degenerate", !cert.condition.degenerate_clusters.empty()},
             {"resonant_pairs", std::move(pairs)}};
    if (cert.empirical_rate)
        j["empirical_rate"] = *cert.empirical_rate;
    else
        j["empirical_rate"] = nullptr;
}

// ---------------------------------------------------------------------------
// encoding

inline void to_json(Json& j, const Subset& subset) { j = subset.members; }

inline void from_json(const Json& j, Subset& subset) {
    subset.members = j.get<std::vector<int>>();
}

inline void to_json(Json& j, const RailCode& code) {
    j = Json{{"rails", code.rails},
             {"excitations", code.excitations},
             {"codewords", code.codewords.str()},  // decimal string; may exceed 64 bits
             {"qubits", code.qubits},
             {"rate", code.rate}};
}

// ---------------------------------------------------------------------------
// states

inline void to_json(Json& j, const DenseJointState& state) {
    Json amps = Json::array();
    for (Eigen::Index i = 0; i < state.amplitudes.size(); ++i)
        amps.push_back(detail::complex_to_json(state.amplitudes(i)));
    j = Json{{"representation", "dense"},
             {"sites", state.sites},
             {"excitations", state.excitations},
             {"amplitudes", std::move(amps)}};
}

inline void to_json(Json& j, const ProductSumState& state) {
    Json terms = Json::array();
    for (const auto& term : state.terms) {
        Json phi = Json::array();
        for (Eigen::Index i = 0; i < term.phi.size(); ++i)
            phi.push_back(detail::complex_to_json(term.phi(i)));
        terms.push_back(Json{{"coefficient", detail::complex_to_json(term.coefficient)},
                             {"phi", std::move(phi)}});
    }
    j = Json{{"representation", "product_sum"},
             {"sites", state.sites},
             {"excitations", state.excitations},
             {"terms", std::move(terms)}};
}

inline void to_json(Json& j, const JointState& state) {
    std::visit([&j](const auto& s) { to_json(j, s); }, state);
}

// ---------------------------------------------------------------------------
// traces and histograms

inline void to_json(Json& j, const ProtocolTrace& trace) {
    j = Json{{"metadata",
              Json{{"sites", trace.sites},
                   {"excitations", trace.excitations},
                   {"steps", trace.steps()},
                   {"truncated", trace.truncated}}},
             {"intervals", trace.intervals},
             {"p", trace.p},
             {"pi", trace.pi},
             {"P", trace.P},
             {"w", trace.w}};
}

// One row per step; the w column holds the residual weight after that step.
inline std::string trace_csv(const ProtocolTrace& trace) {
    std::string out = "step,t,p,pi,P,w\n";
    for (int j = 0; j < trace.steps(); ++j) {
        const auto idx = static_cast<std::size_t>(j);
        out += std::to_string(j + 1);
        out += ',';
        out += format_double(trace.intervals[idx]);
        out += ',';
        out += format_double(trace.p[idx]);
        out += ',';
        out += format_double(trace.pi[idx]);
        out += ',';
        out += format_double(trace.P[idx]);
        out += ',';
        out += format_double(trace.w[idx + 1]);
        out += '\n';
    }
    return out;
}

inline void to_json(Json& j, const SuccessHistogram& histogram) {
    j = Json{{"runs", histogram.runs},
             {"counts", histogram.counts},
             {"never", histogram.never},
             {"frequencies", histogram.frequencies()}};
}

inline std::string histogram_csv(const SuccessHistogram& histogram) {
    std::string out = "step,count,frequency\n";
    const auto freq = histogram.frequencies();
    for (std::size_t j = 0; j < histogram.counts.size(); ++j) {
        out += std::to_string(j + 1);
        out += ',';
        out += std::to_string(histogram.counts[j]);
        out += ',';
        out += format_double(freq[j]);
        out += '\n';
    }
    out += "never,";
    out += std::to_string(histogram.never);
    out += ',';
    out += format_double(static_cast<double>(histogram.never) /
                         static_cast<double>(histogram.runs));
    out += '\n';
    return out;
}

inline void to_json(Json& j, const GreedyResult& result) {
    j = Json{{"schedule", result.schedule},
             {"p", result.p},
             {"flagged", result.flagged},
             {"truncated", result.truncated}};
}

// ---------------------------------------------------------------------------
// files

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    Json j;
    in >> j;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace multirail
