#include "hfpath/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "hfpath/config.hpp"
#include "hfpath/error.hpp"
#include "hfpath/estimator.hpp"
#include "hfpath/io.hpp"

#ifndef HFPATH_VERSION
#define HFPATH_VERSION "0.0.0"
#endif
#ifndef HFPATH_GIT_DESCRIBE
#define HFPATH_GIT_DESCRIBE "unknown"
#endif

namespace hfpath {
namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out_dir = ".";
    std::vector<std::size_t> n;
    std::optional<std::size_t> m;
    std::vector<double> p;
    int family = 0;
    std::optional<std::size_t> reps;
    std::optional<double> level;
    std::optional<double> pmin, pmax, step;
    std::optional<double> target;
    bool grid_constant = false;
};

std::size_t pow2(int k) { return std::size_t{1} << k; }

RunConfig base_config(const Options& o) {
    RunConfig cfg = o.config_path.empty() ? parse_config("") : load_config(o.config_path);
    if (o.config_path.empty()) cfg.source_text.clear();
    if (o.seed) {
        cfg.experiment.seed = *o.seed;
        cfg.experiment.lambda_options.seed = *o.seed;
    }
    cfg.experiment.threads = o.threads;
    cfg.experiment.lambda_options.threads = o.threads;
    if (o.level) cfg.experiment.level = *o.level;
    if (o.reps) cfg.experiment.replications = *o.reps;
    return cfg;
}

std::string header_comment(const RunConfig& cfg) {
    return "hfpath " + version_string() + " seed=" + std::to_string(cfg.experiment.seed) +
           " config=" + hex64(cfg.hash());
}

fs::path out_file(const Options& o, const std::string& name) {
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec) throw ConfigError("out-dir", "cannot create output directory " + o.out_dir);
    return fs::path(o.out_dir) / name;
}

void write_sidecar(const Options& o, const std::string& name, const RunConfig& cfg, const ExperimentReport* report,
                   double runtime) {
    nlohmann::ordered_json j;
    j["tool"] = "hfpath";
    j["version"] = version_string();
    j["git_describe"] = HFPATH_GIT_DESCRIBE;
    j["seed"] = cfg.experiment.seed;
    j["config_hash"] = hex64(cfg.hash());
    j["config"] = cfg.source_text;
    j["threads"] = o.threads;
    if (report) {
        j["kind"] = to_string(report->kind);
        nlohmann::ordered_json constants = nlohmann::ordered_json::object();
        for (const auto& [k, v] : report->constants_used) constants[k] = v;
        j["constants_used"] = constants;
        nlohmann::ordered_json checks = nlohmann::ordered_json::object();
        for (const auto& [k, v] : report->checks) checks[k] = v;
        j["checks"] = checks;
    }
    j["runtime_seconds"] = runtime;
    std::ofstream out(out_file(o, name));
    out << j.dump(2) << '\n';
}

// --- subcommands ---------------------------------------------------------

int cmd_simulate(const Options& o) {
    RunConfig cfg = base_config(o);
    if (!o.n.empty()) cfg.grid.n_coarse = o.n.front();
    if (o.m) cfg.grid.m_fine = *o.m;
    const auto path = simulate_path(cfg.model, cfg.grid, SeedStream{cfg.experiment.seed, 0});
    write_path_csv(path, out_file(o, "path.csv").string(), out_file(o, "jumps.csv").string(), header_comment(cfg));
    std::cout << "wrote " << path.x.size() << " points and " << path.jumps.size() << " jumps to " << o.out_dir << '\n';
    return 0;
}

int cmd_estimate(const Options& o) {
    RunConfig cfg = base_config(o);
    if (!o.n.empty()) cfg.grid.n_coarse = o.n.front();
    if (o.m) cfg.grid.m_fine = *o.m;
    auto functionals = cfg.experiment.functionals;
    if (functionals.empty()) functionals = {FunctionalSpec::terminal_power(2.0), FunctionalSpec::range_power(2.0)};
    auto ranges = cfg.experiment.range_exponents;
    if (ranges.empty()) ranges = o.p.empty() ? std::vector<double>{2.0} : o.p;

    const auto path = simulate_path(cfg.model, cfg.grid, SeedStream{cfg.experiment.seed, 0});
    const auto& grid = cfg.grid;
    std::ofstream out(out_file(o, "estimates.csv"));
    out << "# " << header_comment(cfg) << '\n';
    out << "estimator,horizon,n_coarse,m_fine,value,avar,ci_lo,ci_hi,seed\n";
    auto row = [&](const std::string& name, const EstimateResult& r) {
        out << name << ',' << format_double(r.t) << ',' << grid.n_coarse << ',' << grid.m_fine << ','
            << format_double(r.value) << ',' << (r.avar ? format_double(*r.avar) : "") << ','
            << (r.ci ? format_double(r.ci->lo) : "") << ',' << (r.ci ? format_double(r.ci->hi) : "") << ','
            << cfg.experiment.seed << '\n';
        std::cout << name << " = " << format_display(r.value) << '\n';
    };

    if (!path.has_jumps()) {
        for (const auto& g : functionals) {
            auto v = v_statistic(path, g);
            if (g.is_even) {
                const auto b = bipower_variance(path, g);
                v = with_feasible_ci(v, b, cfg.experiment.level);
                row("bipower[" + g.name() + "]", b);
                if (o.target) {
                    std::cout << "studentized[" << g.name() << "] = " << format_display(studentize(v, *o.target, b)) << '\n';
                }
            }
            row("V[" + g.name() + "]", v);
        }
        if (grid.m_fine >= 2) row("local_average_qv", local_average_qv(path));
    } else {
        std::cerr << "path has jumps: continuous-case statistics skipped\n";
    }
    for (double p : ranges) row("R[" + format_display(p) + "]", realized_range(path, p));
    return 0;
}

int cmd_constants(const Options& o) {
    RunConfig cfg = base_config(o);
    std::vector<double> ps = o.p;
    if (ps.empty() && (o.pmin || o.pmax || o.step)) {
        const double lo = o.pmin.value_or(0.5), hi = o.pmax.value_or(4.0), step = o.step.value_or(0.25);
        if (!(lo > 0.0 && hi >= lo && step > 0.0)) throw ConfigError("step", "need 0 < pmin <= pmax and step > 0");
        for (std::size_t i = 0; lo + step * static_cast<double>(i) <= hi + 1e-9; ++i) ps.push_back(lo + step * static_cast<double>(i));
    }
    if (ps.empty()) ps = cfg.experiment.p_grid;
    if (ps.empty()) throw ConfigError("p", "constants needs --p or a p grid");
    for (double p : ps) {
        if (!(p > 0.0)) throw ConfigError("p", "exponent p must be positive");
    }
    const std::vector<int> families = o.family == 0 ? std::vector<int>{1, 2, 3} : std::vector<int>{o.family};
    for (int f : families) {
        if (f < 1 || f > 3) throw ConfigError("family", "family must be 1, 2 or 3");
    }

    LambdaOptions opts = cfg.experiment.lambda_options;
    if (o.m) opts.m = *o.m;
    if (o.reps) opts.reps = *o.reps;
    opts.method = LambdaMethod::mc;
    opts.extrapolate = !o.grid_constant;

    ConstantsTable table;
    for (int f : families) {
        if (f != 3) {
            for (double p : ps) {
                const double v = lambda_grid_closed(f, p, 0);
                table.add({f, p, v, 0.0, "closed_form", 0, 0, 0});
                std::cout << format_display(v) << '\n';
            }
            continue;
        }
        if (opts.extrapolate && opts.m % 16 != 0) throw ConfigError("m", "extrapolated range constants need m divisible by 16");
        const auto mt = family_moments_mc(3, ps, opts);
        for (double p : ps) {
            const auto est = mt.moment(p);
            table.add({3, p, est.value, est.std_error, mt.extrapolated ? "mc_richardson" : "mc", mt.m, mt.reps, opts.seed});
            std::cout << format_display(est.value) << '\n';
        }
    }
    table.save(out_file(o, "constants.csv").string(), header_comment(cfg));
    return 0;
}

void apply_ladder(const Options& o, ExperimentConfig& e, const std::vector<std::size_t>& fallback_n, std::size_t fallback_m,
                  bool config_has_ladder) {
    std::vector<std::size_t> ns = o.n;
    std::size_t m = o.m.value_or(config_has_ladder ? e.ladder.front().m_fine : fallback_m);
    if (ns.empty()) {
        if (config_has_ladder) {
            for (const auto& pt : e.ladder) ns.push_back(pt.n_coarse);
        } else {
            ns = fallback_n;
        }
    }
    e.ladder.clear();
    for (auto n : ns) e.ladder.push_back({n, m});
}

int run_and_write(const Options& o, RunConfig& cfg, const std::string& stem) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto report = run_experiment(cfg.experiment);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto comment = header_comment(cfg);
    if (report.kind == ExperimentKind::figure1) {
        write_figure1_csv(report, out_file(o, stem + ".csv").string(), comment);
        for (const auto& f : report.figure) {
            std::cout << "p=" << format_display(f.p) << " Lambda1=" << format_display(f.big_lambda_1)
                      << " Lambda3=" << format_display(f.big_lambda_3) << " ratio=" << format_display(f.ratio) << '\n';
        }
    } else {
        write_report_csv(report, out_file(o, stem + ".csv").string(), comment);
        if (!report.slopes.empty()) write_slopes_csv(report, out_file(o, stem + "_slopes.csv").string(), comment);
        for (const auto& r : report.rows) {
            std::cout << r.statistic << " n=" << r.n_coarse << " rmse=" << format_display(r.rmse);
            if (r.coverage) std::cout << " coverage=" << format_display(*r.coverage);
            if (r.ks) std::cout << " ks=" << format_display(*r.ks);
            if (r.degenerate) std::cout << " degenerate=" << r.degenerate;
            std::cout << '\n';
        }
        for (const auto& s : report.slopes) {
            std::cout << s.statistic << " slope=" << format_display(s.slope) << " se=" << format_display(s.slope_std_error)
                      << '\n';
        }
    }
    for (const auto& [name, ok] : report.checks) std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    write_sidecar(o, stem + ".json", cfg, &report, runtime);
    return 0;
}

bool config_has(const RunConfig& cfg, const std::string& needle) {
    return cfg.source_text.find(needle) != std::string::npos;
}

int cmd_experiment(const Options& o, ExperimentKind kind) {
    RunConfig cfg = base_config(o);
    auto& e = cfg.experiment;
    const bool has_ladder = config_has(cfg, "ladder");
    const bool has_reps = config_has(cfg, "replications") || o.reps;
    if (!(kind == ExperimentKind::lln && e.kind == ExperimentKind::jump_lln)) e.kind = kind;

    switch (e.kind) {
        case ExperimentKind::lln:
        case ExperimentKind::jump_lln:
        case ExperimentKind::rate:
            apply_ladder(o, e, {pow2(6), pow2(8), pow2(10), pow2(12)}, 50, has_ladder);
            if (!has_reps) e.replications = 1000;
            break;
        case ExperimentKind::clt_coverage:
            apply_ladder(o, e, {pow2(10)}, 50, has_ladder);
            if (!has_reps) e.replications = 2000;
            break;
        case ExperimentKind::jump_clt:
            apply_ladder(o, e, {pow2(8), pow2(10), pow2(12)}, 50, has_ladder);
            if (!has_reps) e.replications = 2000;
            if (e.jump_scenario.empty() && !config_has(cfg, "[scenario]")) e.jump_scenario.push_back({0.5, 1.0});
            break;
        default: break;
    }

    const bool range_kind = e.kind == ExperimentKind::jump_lln || e.kind == ExperimentKind::jump_clt;
    if (!o.p.empty()) {
        if (range_kind || e.functionals.empty()) {
            e.range_exponents = o.p;
            if (!range_kind) e.functionals.clear();
        } else {
            std::vector<FunctionalSpec> gs;
            for (const auto& g : e.functionals) {
                for (double p : o.p) {
                    gs.push_back(g.kind == FunctionalKind::terminal_power   ? FunctionalSpec::terminal_power(p)
                                 : g.kind == FunctionalKind::integral_power ? FunctionalSpec::integral_power(p)
                                                                            : FunctionalSpec::range_power(p));
                }
            }
            e.functionals = gs;
        }
    }
    if (e.functionals.empty() && e.range_exponents.empty()) {
        switch (e.kind) {
            case ExperimentKind::lln: e.functionals = {FunctionalSpec::range_power(2.0)}; break;
            case ExperimentKind::clt_coverage:
                e.functionals = {FunctionalSpec::terminal_power(2.0), FunctionalSpec::range_power(2.0)};
                break;
            case ExperimentKind::rate: e.functionals = {FunctionalSpec::terminal_power(2.0)}; break;
            case ExperimentKind::jump_lln: e.range_exponents = {3.0}; break;
            case ExperimentKind::jump_clt: e.range_exponents = {4.0}; break;
            default: break;
        }
    }

    if (e.kind == ExperimentKind::figure1) {
        if (o.pmin || o.pmax || o.step || e.p_grid.empty()) {
            const double lo = o.pmin.value_or(0.5), hi = o.pmax.value_or(4.0), step = o.step.value_or(0.25);
            if (!(lo > 0.0 && hi >= lo && step > 0.0)) throw ConfigError("step", "need 0 < pmin <= pmax and step > 0");
            e.p_grid.clear();
            for (std::size_t i = 0; lo + step * static_cast<double>(i) <= hi + 1e-9; ++i) {
                e.p_grid.push_back(lo + step * static_cast<double>(i));
            }
        }
        if (o.m) e.lambda_options.m = *o.m;
        if (o.reps) e.lambda_options.reps = *o.reps;
    }
    return run_and_write(o, cfg, to_string(e.kind));
}

void add_common(CLI::App* app, Options& o) {
    app->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "master seed (default 20150601)");
    app->add_option("--threads", o.threads, "worker threads, 0 = all cores")->capture_default_str();
    app->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
    app->add_option("--n", o.n, "coarse interval count(s)");
    app->add_option("--m", o.m, "fine substeps per coarse interval");
    app->add_option("--p", o.p, "exponent(s)");
    app->add_option("--family", o.family, "constant family 1, 2 or 3")->check(CLI::Range(1, 3));
    app->add_option("--reps", o.reps, "replications");
    app->add_option("--level", o.level, "confidence level");
    app->add_option("--pmin", o.pmin, "smallest p of the grid");
    app->add_option("--pmax", o.pmax, "largest p of the grid");
    app->add_option("--step", o.step, "p grid step");
}

}  // namespace

std::string version_string() { return HFPATH_VERSION; }

int parse_and_dispatch(const std::vector<std::string>& args) {
    CLI::App app{"hfpath: path-dependent high-frequency statistics and Monte Carlo checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(HFPATH_VERSION) + " (" + HFPATH_GIT_DESCRIBE + ")");
    Options o;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"simulate", "simulate one path and write path.csv / jumps.csv"},
        {"estimate", "simulate one path and write estimates.csv"},
        {"constants", "lambda constants (closed form or Monte Carlo)"},
        {"lln", "law of large numbers ladder"},
        {"clt", "studentized CI coverage and normality"},
        {"rate", "log-log RMSE slope"},
        {"jump-clt", "jump limit law matching"},
        {"figure1", "Lambda^1 vs Lambda^3 over a p grid"},
    };
    std::map<std::string, CLI::App*> apps;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        add_common(sub, o);
        if (std::string(s.name) == "estimate") sub->add_option("--target", o.target, "print the studentized statistic");
        if (std::string(s.name) == "constants") {
            sub->add_flag("--grid", o.grid_constant, "constant of the m-point discretized range (no extrapolation)");
        }
        apps[s.name] = sub;
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();  // program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (apps["simulate"]->parsed()) return cmd_simulate(o);
        if (apps["estimate"]->parsed()) return cmd_estimate(o);
        if (apps["constants"]->parsed()) return cmd_constants(o);
        if (apps["lln"]->parsed()) return cmd_experiment(o, ExperimentKind::lln);
        if (apps["clt"]->parsed()) return cmd_experiment(o, ExperimentKind::clt_coverage);
        if (apps["rate"]->parsed()) return cmd_experiment(o, ExperimentKind::rate);
        if (apps["jump-clt"]->parsed()) return cmd_experiment(o, ExperimentKind::jump_clt);
        if (apps["figure1"]->parsed()) return cmd_experiment(o, ExperimentKind::figure1);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const UnsupportedError& e) {
        std::cerr << "unsupported: " << e.what() << '\n';
        return 2;
    } catch (const MisuseError& e) {
        std::cerr << "misuse: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int parse_and_dispatch(int argc, const char* const* argv) {
    return parse_and_dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace hfpath
