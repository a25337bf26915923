// multirail: command-line front end for the chain-transfer library.
//
// Subcommands: chain, check, simulate, optimize, sweep, encode, mc.
// A JSON config file supplies structured inputs; individual flags override
// single fields. Exit codes: 0 success (and verdict "converges" for check),
// 1 negative verdict, 2 usage or config error, 3 numeric failure.

#include "multirail/multirail.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

using namespace multirail;

namespace {

int worker_count(std::size_t jobs) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("MULTIRAIL_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
            throw std::invalid_argument("MULTIRAIL_THREADS must be a positive integer");
        }
    }
    return static_cast<int>(std::min<std::size_t>(hw, std::max<std::size_t>(jobs, 1)));
}

// Options shared by every subcommand. Flag values land here; absent flags
// leave the config file's values in force.
struct Context {
    std::string config_path;
    std::string out_path;
    std::string format;  // "json" or "csv"; per-command default when empty
    std::optional<std::uint64_t> seed;
    Json config = Json::object();

    // chain flags
    std::optional<int> sites;
    std::optional<std::string> model;
    std::optional<double> coupling;
    std::optional<double> field;
    std::optional<bool> periodic;

    // protocol flags
    std::optional<int> excitations;
    bool auto_excitations = false;
    std::optional<int> rails;
    std::optional<double> tau;
    std::optional<int> steps;
    std::optional<std::string> representation;

    void load_config() {
        if (!config_path.empty()) config = read_json_file(config_path);
    }

    std::string resolved_format(const std::string& fallback) const {
        if (!format.empty()) return format;
        if (config.contains("format")) return config.at("format").get<std::string>();
        return fallback;
    }

    std::optional<std::uint64_t> resolved_seed() const {
        if (seed) return seed;
        if (config.contains("seed")) return config.at("seed").get<std::uint64_t>();
        return std::nullopt;
    }

    ChainSpec chain_spec() const {
        ChainSpec spec;
        if (config.contains("chain")) {
            spec = config.at("chain").get<ChainSpec>();
        } else {
            spec.model = ChainModel::xy;
            spec.sites = 0;  // caught by validate below when no flag either
        }
        if (sites) {
            spec.sites = *sites;
            // Flag-built chains get uniform arrays sized to the new length.
            const double j = coupling.value_or(spec.couplings.empty() ? 1.0 : spec.couplings[0]);
            const double b = field.value_or(spec.onsite.empty() ? 0.0 : spec.onsite[0]);
            const bool wrap = periodic.value_or(spec.periodic);
            spec = uniform_chain(*sites, spec.model, j, b, wrap);
        }
        if (model) spec.model = chain_model_from_string(*model);
        if (coupling)
            for (auto& j : spec.couplings) j = *coupling;
        if (field)
            for (auto& b : spec.onsite) b = *field;
        if (periodic && *periodic != spec.periodic && !sites)
            throw std::invalid_argument(
                "changing periodicity needs --sites to rebuild the coupling list");
        spec.validate();
        return spec;
    }

    // Uniform chain of a given length, taking model/coupling/field/periodic
    // from flags, then from a config chain, then from defaults. Used by the
    // length sweep, where --sites would be meaningless.
    ChainSpec chain_for_length(int n) const {
        ChainModel chosen = ChainModel::xy;
        double j = 1.0;
        double b = 0.0;
        bool wrap = false;
        if (config.contains("chain")) {
            const ChainSpec base = config.at("chain").get<ChainSpec>();
            chosen = base.model;
            if (!base.couplings.empty()) j = base.couplings[0];
            if (!base.onsite.empty()) b = base.onsite[0];
            wrap = base.periodic;
        }
        if (model) chosen = chain_model_from_string(*model);
        if (chosen == ChainModel::custom)
            throw std::invalid_argument("length sweeps need a uniform model, not custom");
        if (coupling) j = *coupling;
        if (field) b = *field;
        if (periodic) wrap = *periodic;
        return uniform_chain(n, chosen, j, b, wrap);
    }

    int resolved_rails() const {
        if (rails) return *rails;
        if (config.contains("rails")) return config.at("rails").get<int>();
        throw std::invalid_argument("rail count required (--rails or config \"rails\")");
    }

    int resolved_excitations() const {
        if (auto_excitations) return optimal_K(resolved_rails());
        if (excitations) return check_against_rails(*excitations);
        if (config.contains("excitations")) {
            const auto& k = config.at("excitations");
            if (k.is_string() && k.get<std::string>() == "auto")
                return optimal_K(resolved_rails());
            return check_against_rails(k.get<int>());
        }
        return 1;
    }

    int check_against_rails(int k) const {
        if (k < 1) throw std::invalid_argument("excitation count must be positive");
        if (rails || config.contains("rails")) {
            if (k > resolved_rails())
                throw std::invalid_argument("excitation count exceeds the rail count");
        }
        return k;
    }

    Representation resolved_representation() const {
        if (representation) return representation_from_string(*representation);
        if (config.contains("representation"))
            return representation_from_string(config.at("representation").get<std::string>());
        return Representation::automatic;
    }

    Schedule schedule() const {
        if (tau || steps) {
            if (!tau || !steps)
                throw std::invalid_argument("uniform schedules need both --tau and --steps");
            return uniform_schedule(*tau, *steps);
        }
        if (config.contains("schedule")) {
            Schedule s = config.at("schedule").get<Schedule>();
            if (s.jitter && seed) s.jitter->seed = *seed;
            s.validate();
            return s;
        }
        if (config.contains("tau") && config.contains("steps"))
            return uniform_schedule(config.at("tau").get<double>(),
                                    config.at("steps").get<int>());
        throw std::invalid_argument("no schedule: pass --tau/--steps or a config schedule");
    }

    double resolved_tau() const {
        if (tau) return *tau;
        if (config.contains("tau")) return config.at("tau").get<double>();
        throw std::invalid_argument("interval required (--tau or config \"tau\")");
    }

    void emit(const std::string& content) const {
        if (out_path.empty())
            std::cout << content;
        else
            write_text_file(out_path, content);
    }
};

void attach_common(CLI::App* cmd, Context& ctx) {
    cmd->add_option("--config", ctx.config_path, "JSON config file");
    cmd->add_option("--out", ctx.out_path, "output path (default: stdout)");
    cmd->add_option("--format", ctx.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", ctx.seed, "seed for sampling and jitter");
}

void attach_chain(CLI::App* cmd, Context& ctx) {
    cmd->add_option("--sites,-n", ctx.sites, "chain length");
    cmd->add_option("--model", ctx.model, "coupling model")
        ->check(CLI::IsMember({"heisenberg", "xy", "custom"}));
    cmd->add_option("--coupling,-j", ctx.coupling, "uniform coupling strength");
    cmd->add_option("--field,-b", ctx.field, "uniform onsite field");
    cmd->add_option("--periodic", ctx.periodic, "close the chain into a ring");
}

void attach_protocol(CLI::App* cmd, Context& ctx) {
    cmd->add_option("--excitations,-k", ctx.excitations, "excitations per codeword");
    cmd->add_flag("--auto-k", ctx.auto_excitations, "use the rate-optimal excitation count");
    cmd->add_option("--rails,-m", ctx.rails, "number of parallel chains");
    cmd->add_option("--tau,-t", ctx.tau, "uniform measurement interval");
    cmd->add_option("--steps,-q", ctx.steps, "number of protocol steps");
    cmd->add_option("--representation", ctx.representation, "joint state storage")
        ->check(CLI::IsMember({"dense", "product_sum", "auto"}));
}

// ---------------------------------------------------------------------------

int cmd_chain(Context& ctx, int grid, double t_max) {
    const ChainSpec spec = ctx.chain_spec();
    const auto s = spectrum(spec);
    const auto report = overlap_report(s);

    if (t_max <= 0.0) {
        double j_max = 0.0;
        if (spec.model == ChainModel::custom) {
            for (Eigen::Index i = 0; i < spec.custom_matrix.rows(); ++i)
                for (Eigen::Index c = i + 1; c < spec.custom_matrix.cols(); ++c)
                    j_max = std::max(j_max, std::abs(spec.custom_matrix(i, c)));
        } else {
            for (double j : spec.couplings) j_max = std::max(j_max, std::abs(j));
        }
        t_max = j_max > 0.0 ? 2.0 * spec.sites / j_max : 10.0;
    }

    std::vector<double> times;
    for (int i = 1; i <= grid; ++i)
        times.push_back(t_max * static_cast<double>(i) / static_cast<double>(grid));

    if (ctx.resolved_format("json") == "csv") {
        std::string csv = "t,re,im,prob\n";
        for (double t : times) {
            const Complex f = transfer_amplitude(s, t);
            csv += format_double(t) + ',' + format_double(f.real()) + ',' +
                   format_double(f.imag()) + ',' + format_double(std::norm(f)) + '\n';
        }
        ctx.emit(csv);
        return 0;
    }

    Json out;
    out["chain"] = spec;
    out["eigenvalues"] = std::vector<double>(s.eigenvalues.data(),
                                             s.eigenvalues.data() + s.eigenvalues.size());
    out["min_overlap"] = report.min_overlap;
    out["condition_holds"] = report.holds;
    Json samples = Json::array();
    for (double t : times) {
        const Complex f = transfer_amplitude(s, t);
        samples.push_back(Json{{"t", t}, {"amplitude", Json::array({f.real(), f.imag()})},
                               {"prob", std::norm(f)}});
    }
    out["transfer_samples"] = std::move(samples);
    ctx.emit(out.dump(2) + "\n");
    return 0;
}

int cmd_check(Context& ctx) {
    const ChainSpec spec = ctx.chain_spec();
    const auto s = spectrum(spec);
    const auto cert = certify(s, ctx.resolved_tau(), ctx.resolved_excitations());

    Json out;
    out["condition"] = overlap_report(s);
    out["nearest_neighbor"] = Json{
        {"applicable", open_nn_theorem_check(spec, s).applicable},
        {"all_hoppings_nonzero", open_nn_theorem_check(spec, s).all_hoppings_nonzero}};
    out["certificate"] = cert;
    ctx.emit(out.dump(2) + "\n");
    return cert.verdict == Verdict::converges ? 0 : 1;
}

std::uint64_t config_runs(const Context& ctx) {
    if (ctx.config.contains("runs")) return ctx.config.at("runs").get<std::uint64_t>();
    return 0;
}

int cmd_simulate(Context& ctx, std::uint64_t runs) {
    const ChainSpec spec = ctx.chain_spec();
    const auto s = spectrum(spec);
    const int k = ctx.resolved_excitations();
    const Schedule schedule = ctx.schedule();
    const Representation rep = ctx.resolved_representation();

    if (runs == 0 && config_runs(ctx) > 0) runs = config_runs(ctx);
    const std::optional<std::uint64_t> seed = ctx.resolved_seed();
    if (runs > 0 && !seed)
        throw std::invalid_argument(
            "sampling requires a seed (--seed or config \"seed\")");

    const ProtocolTrace trace = schedule.jitter ? jittered_run(s, k, schedule, rep)
                                                : run(s, k, schedule, rep);

    std::optional<SuccessHistogram> histogram;
    if (runs > 0)
        histogram = sample_success_steps(trace.p, runs, *seed,
                                         worker_count(runs / 4096 + 1));

    if (ctx.resolved_format("csv") == "json") {
        Json out = trace;
        if (histogram) out["monte_carlo"] = *histogram;
        ctx.emit(out.dump(2) + "\n");
    } else {
        std::string csv = trace_csv(trace);
        if (histogram) csv += "\n" + histogram_csv(*histogram);
        ctx.emit(csv);
    }
    return 0;
}

int cmd_optimize(Context& ctx, OptimizerConfig cfg, bool cfg_given) {
    const ChainSpec spec = ctx.chain_spec();
    const auto s = spectrum(spec);
    const int k = ctx.resolved_excitations();
    const int steps = ctx.steps ? *ctx.steps
                                : (ctx.config.contains("steps")
                                       ? ctx.config.at("steps").get<int>()
                                       : 5);

    OptimizerConfig resolved = default_optimizer_config(spec, steps);
    if (cfg_given) {
        if (cfg.t_min > 0.0) resolved.t_min = cfg.t_min;
        if (cfg.t_max > 0.0) resolved.t_max = cfg.t_max;
        if (cfg.grid_points > 0) resolved.grid_points = cfg.grid_points;
        if (cfg.refine_tolerance > 0.0) resolved.refine_tolerance = cfg.refine_tolerance;
    }
    resolved.steps = steps;
    resolved.validate();

    const GreedyResult result = greedy_optimize(s, k, resolved);
    if (ctx.resolved_format("json") == "csv") {
        std::string csv = "step,t,p,flagged\n";
        for (std::size_t j = 0; j < result.schedule.intervals.size(); ++j)
            csv += std::to_string(j + 1) + ',' + format_double(result.schedule.intervals[j]) +
                   ',' + format_double(result.p[j]) + ',' +
                   (result.flagged[j] ? "1" : "0") + '\n';
        ctx.emit(csv);
    } else {
        ctx.emit(Json(result).dump(2) + "\n");
    }
    return 0;
}

struct SweepRow {
    std::string value;
    std::string metric;
    std::string result;
};

int cmd_sweep(Context& ctx, const std::string& axis, double from, double to, int points) {
    if (points < 1) throw std::invalid_argument("sweep needs at least one point");
    if (to < from) throw std::invalid_argument("sweep range must not be inverted");

    std::vector<double> values;
    if (axis == "tau") {
        for (int i = 0; i < points; ++i)
            values.push_back(points == 1
                                 ? from
                                 : from + (to - from) * static_cast<double>(i) /
                                       static_cast<double>(points - 1));
    } else {
        for (int v = static_cast<int>(from); v <= static_cast<int>(to); ++v)
            values.push_back(static_cast<double>(v));
        if (values.empty()) throw std::invalid_argument("integer sweep range is empty");
    }

    std::vector<std::vector<SweepRow>> rows(values.size());
    auto eval_point = [&](std::size_t idx) {
        const double value = values[idx];
        std::vector<SweepRow>& out = rows[idx];
        const std::string vstr =
            axis == "tau" ? format_double(value) : std::to_string(static_cast<int>(value));

        if (axis == "tau") {
            const auto s = spectrum(ctx.chain_spec());
            const auto cert = certify(s, value, ctx.resolved_excitations());
            out.push_back({vstr, "rho", format_double(cert.rho)});
            out.push_back({vstr, "verdict", to_string(cert.verdict)});
        } else if (axis == "N") {
            const ChainSpec spec = ctx.chain_for_length(static_cast<int>(value));
            const auto cert =
                certify(spectrum(spec), ctx.resolved_tau(), ctx.resolved_excitations());
            out.push_back({vstr, "rho", format_double(cert.rho)});
            out.push_back({vstr, "verdict", to_string(cert.verdict)});
        } else if (axis == "K") {
            const int m = ctx.resolved_rails();
            const int k = static_cast<int>(value);
            out.push_back({vstr, "rate", format_double(rate(m, k))});
            out.push_back({vstr, "codewords", binomial(m, k).str()});
        } else if (axis == "M") {
            const int m = static_cast<int>(value);
            const int k = optimal_K(m);
            out.push_back({vstr, "optimal_K", std::to_string(k)});
            out.push_back({vstr, "rate", format_double(rate(m, k))});
            out.push_back({vstr, "qubits", std::to_string(qubits(m, k))});
        } else {
            throw std::invalid_argument("unknown sweep axis '" + axis + "'");
        }
    };

    // Points are independent; workers stride the index range and rows keep
    // the sorted-axis order regardless of completion order.
    const int workers = worker_count(values.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < values.size(); ++i) eval_point(i);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_lock;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = static_cast<std::size_t>(w); i < values.size();
                     i += static_cast<std::size_t>(workers)) {
                    try {
                        eval_point(i);
                    } catch (...) {
                        const std::lock_guard<std::mutex> hold(failure_lock);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    if (ctx.resolved_format("csv") == "json") {
        Json out = Json::array();
        for (const auto& point : rows)
            for (const auto& r : point)
                out.push_back(Json{{"axis", axis}, {"value", r.value},
                                   {"metric", r.metric}, {"result", r.result}});
        ctx.emit(out.dump(2) + "\n");
    } else {
        std::string csv = "axis,value,metric,result\n";
        for (const auto& point : rows)
            for (const auto& r : point)
                csv += axis + ',' + r.value + ',' + r.metric + ',' + r.result + '\n';
        ctx.emit(csv);
    }
    return 0;
}

int cmd_encode(Context& ctx, const std::string& bits) {
    const int m = ctx.resolved_rails();
    const int k = ctx.auto_excitations || !ctx.excitations ? optimal_K(m)
                                                           : ctx.resolved_excitations();
    const auto code = RailCode::make(m, k);
    const auto subsets = encode_bits(bits, m, k);

    if (ctx.resolved_format("json") == "csv") {
        std::string csv = "block,members\n";
        for (std::size_t i = 0; i < subsets.size(); ++i) {
            csv += std::to_string(i) + ',';
            for (std::size_t j = 0; j < subsets[i].members.size(); ++j) {
                if (j) csv += ' ';
                csv += std::to_string(subsets[i].members[j]);
            }
            csv += '\n';
        }
        ctx.emit(csv);
    } else {
        Json out;
        out["code"] = code;
        out["bits"] = bits;
        out["subsets"] = subsets;
        ctx.emit(out.dump(2) + "\n");
    }
    return 0;
}

int cmd_mc(Context& ctx, std::uint64_t runs) {
    if (runs == 0) runs = config_runs(ctx);
    if (runs == 0) throw std::invalid_argument("mc requires --runs");
    const auto seed = ctx.resolved_seed();
    if (!seed) throw std::invalid_argument("mc requires --seed");

    const auto s = spectrum(ctx.chain_spec());
    const auto histogram =
        monte_carlo(s, ctx.resolved_excitations(), ctx.schedule(), runs, *seed,
                    worker_count(runs / 4096 + 1), ctx.resolved_representation());

    if (ctx.resolved_format("csv") == "json")
        ctx.emit(Json(histogram).dump(2) + "\n");
    else
        ctx.emit(histogram_csv(histogram));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel-chain state transfer toolkit"};
    app.require_subcommand(1);

    Context ctx;
    std::function<int()> action;

    auto* chain = app.add_subcommand("chain", "spectrum and transfer-amplitude summary");
    attach_common(chain, ctx);
    attach_chain(chain, ctx);
    static int chain_grid = 50;
    static double chain_tmax = 0.0;
    chain->add_option("--grid", chain_grid, "number of sampled times");
    chain->add_option("--t-max", chain_tmax, "sampling horizon (default: 2N/J)");
    chain->callback([&] { action = [&] { return cmd_chain(ctx, chain_grid, chain_tmax); }; });

    auto* check = app.add_subcommand("check", "convergence certificate for one interval");
    attach_common(check, ctx);
    attach_chain(check, ctx);
    attach_protocol(check, ctx);
    check->callback([&] { action = [&] { return cmd_check(ctx); }; });

    auto* simulate = app.add_subcommand("simulate", "run the measurement protocol");
    attach_common(simulate, ctx);
    attach_chain(simulate, ctx);
    attach_protocol(simulate, ctx);
    static std::uint64_t sim_runs = 0;
    simulate->add_option("--runs", sim_runs, "Monte Carlo samples of the success step");
    simulate->callback([&] { action = [&] { return cmd_simulate(ctx, sim_runs); }; });

    auto* optimize = app.add_subcommand("optimize", "greedy per-step interval search");
    attach_common(optimize, ctx);
    attach_chain(optimize, ctx);
    attach_protocol(optimize, ctx);
    static OptimizerConfig opt_cfg{0.0, 0.0, 0, 0.0, 1};
    static bool opt_given = false;
    optimize->add_option("--t-min", opt_cfg.t_min, "window start")
        ->each([&](const std::string&) { opt_given = true; });
    optimize->add_option("--t-max", opt_cfg.t_max, "window end")
        ->each([&](const std::string&) { opt_given = true; });
    optimize->add_option("--grid", opt_cfg.grid_points, "grid points per step")
        ->each([&](const std::string&) { opt_given = true; });
    optimize->add_option("--tol", opt_cfg.refine_tolerance, "refinement tolerance")
        ->each([&](const std::string&) { opt_given = true; });
    optimize->callback(
        [&] { action = [&] { return cmd_optimize(ctx, opt_cfg, opt_given); }; });

    auto* sweep = app.add_subcommand("sweep", "scan one axis and emit long-format rows");
    attach_common(sweep, ctx);
    attach_chain(sweep, ctx);
    attach_protocol(sweep, ctx);
    static std::string sweep_axis;
    static double sweep_from = 0.0, sweep_to = 0.0;
    static int sweep_points = 0;
    sweep->add_option("--axis", sweep_axis, "tau, N, K, or M")
        ->required()
        ->check(CLI::IsMember({"tau", "N", "K", "M"}));
    sweep->add_option("--from", sweep_from, "first axis value")->required();
    sweep->add_option("--to", sweep_to, "last axis value")->required();
    sweep->add_option("--points", sweep_points, "sample count (tau axis only)");
    sweep->callback([&] {
        action = [&] {
            const int pts = sweep_axis == "tau"
                                ? (sweep_points > 0 ? sweep_points : 25)
                                : static_cast<int>(sweep_to - sweep_from) + 1;
            return cmd_sweep(ctx, sweep_axis, sweep_from, sweep_to, pts);
        };
    });

    auto* encode = app.add_subcommand("encode", "map a bit string onto chain subsets");
    attach_common(encode, ctx);
    attach_protocol(encode, ctx);
    static std::string encode_bits_arg;
    encode->add_option("--bits", encode_bits_arg, "binary string, blocks of floor(log2 C(M,K))")
        ->required();
    encode->callback([&] { action = [&] { return cmd_encode(ctx, encode_bits_arg); }; });

    auto* mc = app.add_subcommand("mc", "sample success-step histogram");
    attach_common(mc, ctx);
    attach_chain(mc, ctx);
    attach_protocol(mc, ctx);
    static std::uint64_t mc_runs = 0;
    mc->add_option("--runs", mc_runs, "number of sampled runs");
    mc->callback([&] { action = [&] { return cmd_mc(ctx, mc_runs); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        ctx.load_config();
        return action();
    } catch (const eigensolver_error& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const budget_exceeded& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    }
}
