#include "hfpath/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "hfpath/error.hpp"
#include "hfpath/estimator.hpp"
#include "hfpath/io.hpp"
#include "hfpath/numeric.hpp"
#include "hfpath/parallel.hpp"

namespace hfpath {
namespace {

constexpr std::uint64_t kLimitSalt = 0x4C494D4954ULL;
constexpr std::uint64_t kConstantSalt = 0xC0457A47ULL;

// One statistic tracked by an experiment: V(X,g)^n or R(X,p)^n.
struct StatSpec {
    std::string name;
    bool is_range = false;
    FunctionalSpec g;
    double p = 0.0;
};

std::vector<StatSpec> stat_specs(const std::vector<FunctionalSpec>& functionals, const std::vector<double>& ranges) {
    std::vector<StatSpec> out;
    for (const auto& g : functionals) out.push_back({"V[" + g.name() + "]", false, g, g.p});
    for (double p : ranges) {
        out.push_back({"R[" + format_display(p) + "]", true, FunctionalSpec::range_power(p), p});
    }
    return out;
}

// int_0^{n_used dn} |sigma_s|^p ds, left-point Riemann sum on the fine grid.
double integrated_abs_power(const FineGridPath& path, std::size_t n_used, double p) {
    const std::size_t N = n_used * path.grid.m_fine;
    std::vector<double> terms(N);
    for (std::size_t k = 0; k < N; ++k) terms[k] = std::pow(std::abs(path.sigma[k]), p);
    return pairwise_sum(terms) * path.grid.fine_step();
}

double jump_power_sum(const FineGridPath& path, std::size_t n_used, double p) {
    double s = 0.0;
    for (const auto& j : path.jumps) {
        if (j.coarse_index <= n_used) s += std::pow(std::abs(j.size), p);
    }
    return s;
}

struct Constants {
    double grid = 0.0;
    double continuum = 0.0;
};

// Memoized limit constants for the statistics of one experiment.
class ConstantCache {
public:
    explicit ConstantCache(const ExperimentConfig& c) : config_(c) {}

    Constants get(const FunctionalSpec& g, std::size_t m) {
        const auto key = std::make_tuple(static_cast<int>(g.kind), g.p, m);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        Constants k{grid_constant(config_, g, m), continuum_constant(config_, g)};
        cache_.emplace(key, k);
        return k;
    }

private:
    const ExperimentConfig& config_;
    std::map<std::tuple<int, double, std::size_t>, Constants> cache_;
};

struct Target {
    double grid = 0.0;
    double continuum = 0.0;
};

Target stat_target(const StatSpec& s, const FineGridPath& path, std::size_t n_used, ConstantCache& constants) {
    if (!s.is_range) {
        const auto k = constants.get(s.g, path.grid.m_fine);
        const double integral = integrated_abs_power(path, n_used, s.g.p);
        return {k.grid * integral, k.continuum * integral};
    }
    const double jumps = jump_power_sum(path, n_used, s.p);
    if (s.p > 2.0) return {jumps, jumps};
    if (s.p == 2.0) {
        const auto k = constants.get(s.g, path.grid.m_fine);
        const double integral = integrated_abs_power(path, n_used, 2.0);
        return {k.grid * integral + jumps, k.continuum * integral + jumps};
    }
    throw ConfigError("range_exponents", "realized range limits exist only for p >= 2");
}

double stat_value(const StatSpec& s, const FineGridPath& path) {
    if (s.is_range) return realized_range(path, s.p).value;
    return v_statistic(path, s.g).value;
}

TimeGrid grid_of(const ExperimentConfig& c, std::size_t l) {
    return TimeGrid{c.horizon, c.ladder[l].n_coarse, c.ladder[l].m_fine};
}

bool scenario_matches(const ExperimentConfig& c, const FineGridPath& path) {
    if (c.jump_scenario.empty()) return true;
    if (path.jumps.size() != c.jump_scenario.size()) return false;
    auto sorted = c.jump_scenario;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    const double dn = path.grid.delta_n();
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (path.jumps[i].size != sorted[i].size) return false;
        if (c.jitter_within_block) {
            const auto block = std::min(static_cast<std::size_t>(std::floor(sorted[i].time / dn)), path.grid.n_coarse - 1) + 1;
            if (path.jumps[i].coarse_index != block) return false;
        } else if (path.jumps[i].time != sorted[i].time) {
            return false;
        }
    }
    return true;
}

struct Aggregate {
    double mean_error = 0.0, mean_abs = 0.0, mean_rel = 0.0, rmse = 0.0, rmse_cont = 0.0;
};

Aggregate aggregate(const std::vector<double>& errors, const std::vector<double>& rel, const std::vector<double>& cont) {
    const auto n = static_cast<double>(errors.size());
    std::vector<double> abs(errors.size()), sq(errors.size()), sqc(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        abs[i] = std::abs(errors[i]);
        sq[i] = errors[i] * errors[i];
        sqc[i] = cont[i] * cont[i];
    }
    Aggregate a;
    a.mean_error = pairwise_sum(errors) / n;
    a.mean_abs = pairwise_sum(abs) / n;
    a.mean_rel = rel.empty() ? 0.0 : pairwise_sum(rel) / static_cast<double>(rel.size());
    a.rmse = std::sqrt(pairwise_sum(sq) / n);
    a.rmse_cont = std::sqrt(pairwise_sum(sqc) / n);
    return a;
}

// Shared driver for lln / jump_lln / rate: per ladder point error statistics.
ExperimentReport run_error_ladder(const ExperimentConfig& config, ExperimentKind kind) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    const auto stats = stat_specs(config.functionals, config.range_exponents);
    if (stats.empty()) throw ConfigError("functional", "experiment needs at least one statistic");
    ConstantCache constants(config);
    ExperimentReport report;
    report.kind = kind;
    report.seed = config.seed;

    for (std::size_t l = 0; l < config.ladder.size(); ++l) {
        const TimeGrid grid = grid_of(config, l);
        const std::size_t R = config.replications;
        const std::size_t S = stats.size();
        // Constants are resolved before the parallel section so workers only read the cache.
        for (const auto& s : stats) {
            if (!s.is_range || s.p == 2.0) {
                const auto k = constants.get(s.g, grid.m_fine);
                report.constants_used[s.name + "@m=" + std::to_string(grid.m_fine)] = k.grid;
                report.constants_used[s.name + "@continuum"] = k.continuum;
            }
        }
        std::vector<double> err(R * S), cont(R * S), target(R * S);
        std::vector<char> ok(R, 1);
        parallel_for(R, config.threads, [&](std::size_t r) {
            const std::uint64_t id = replication_id(l, r);
            const auto path = simulate_path(replication_model(config, grid, id), grid, SeedStream{config.seed, id});
            ok[r] = scenario_matches(config, path) ? 1 : 0;
            const std::size_t n_used = blocks_in_horizon(grid, config.horizon);
            for (std::size_t s = 0; s < S; ++s) {
                const double v = stat_value(stats[s], path);
                const auto tg = stat_target(stats[s], path, n_used, constants);
                err[r * S + s] = v - tg.grid;
                cont[r * S + s] = v - tg.continuum;
                target[r * S + s] = tg.grid;
            }
        });
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<double> e(R), c(R), rel;
            for (std::size_t r = 0; r < R; ++r) {
                e[r] = err[r * S + s];
                c[r] = cont[r * S + s];
                if (target[r * S + s] != 0.0) rel.push_back(std::abs(e[r] / target[r * S + s]));
            }
            const auto a = aggregate(e, rel, c);
            ReportRow row;
            row.statistic = stats[s].name;
            row.ladder_index = l;
            row.n_coarse = grid.n_coarse;
            row.m_fine = grid.m_fine;
            row.delta_n = grid.delta_n();
            row.replications = R;
            row.mean_error = a.mean_error;
            row.mean_abs_error = a.mean_abs;
            row.mean_rel_error = a.mean_rel;
            row.rmse = a.rmse;
            row.rmse_continuum = a.rmse_cont;
            row.seed = config.seed;
            row.samples = std::move(e);
            row.scenario_ok = std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
            if (!stats[s].is_range || stats[s].p == 2.0) row.target_constant = constants.get(stats[s].g, grid.m_fine).grid;
            report.rows.push_back(std::move(row));
        }
    }

    for (const auto& s : stats) {
        std::vector<const ReportRow*> rows;
        for (const auto& row : report.rows) {
            if (row.statistic == s.name) rows.push_back(&row);
        }
        bool decay = true;
        for (std::size_t i = 1; i < rows.size(); ++i) decay = decay && rows[i]->rmse < config.lln_slack * rows[i - 1]->rmse;
        report.checks["rmse_decay:" + s.name] = decay;
        report.checks["scenario:" + s.name] = std::all_of(rows.begin(), rows.end(), [](auto* r) { return r->scenario_ok; });
        if (kind == ExperimentKind::rate) {
            std::vector<double> x, y;
            for (auto* row : rows) {
                if (row->rmse > 0.0) {
                    x.push_back(std::log(row->delta_n));
                    y.push_back(std::log(row->rmse));
                }
            }
            if (x.size() >= 2) {
                const auto fit = ordinary_least_squares(x, y);
                report.slopes.push_back({s.name, fit.slope, fit.slope_std_error, fit.points});
            }
        }
    }
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::lln: return "lln";
        case ExperimentKind::clt_coverage: return "clt_coverage";
        case ExperimentKind::rate: return "rate";
        case ExperimentKind::jump_lln: return "jump_lln";
        case ExperimentKind::jump_clt: return "jump_clt";
        case ExperimentKind::constants: return "constants";
        case ExperimentKind::figure1: return "figure1";
    }
    return "lln";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
    for (auto k : {ExperimentKind::lln, ExperimentKind::clt_coverage, ExperimentKind::rate, ExperimentKind::jump_lln,
                   ExperimentKind::jump_clt, ExperimentKind::constants, ExperimentKind::figure1}) {
        if (to_string(k) == text) return k;
    }
    throw ConfigError("kind", "unknown experiment kind '" + text + "'");
}

void ExperimentConfig::validate() const {
    const bool statistical = kind != ExperimentKind::constants && kind != ExperimentKind::figure1;
    if (!statistical) return;
    if (ladder.empty()) throw ConfigError("ladder", "ladder must contain at least one (n_coarse, m_fine) point");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i].n_coarse < 1 || ladder[i].m_fine < 1) throw ConfigError("ladder", "n_coarse and m_fine must be >= 1");
        if (i > 0 && ladder[i].n_coarse <= ladder[i - 1].n_coarse) {
            throw ConfigError("ladder", "ladder must be strictly increasing in n_coarse");
        }
    }
    if (replications < 100) throw ConfigError("replications", "statistical experiments need at least 100 replications");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("level", "confidence level must lie in (0, 1)");
    if (!(horizon > 0.0)) throw ConfigError("horizon", "horizon must be positive");
    try {
        model.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError("model", e.what());
    }
}

bool ExperimentReport::all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

std::uint64_t replication_id(std::size_t ladder_index, std::size_t replication) {
    return (static_cast<std::uint64_t>(ladder_index) << 32) | static_cast<std::uint64_t>(replication);
}

ModelSpec replication_model(const ExperimentConfig& config, const TimeGrid& grid, std::uint64_t rep_id) {
    ModelSpec m = config.model;
    if (config.kind == ExperimentKind::jump_clt) m.jumps.reset();
    const double dn = grid.delta_n();
    for (std::size_t i = 0; i < config.jump_scenario.size(); ++i) {
        ScheduledJump j = config.jump_scenario[i];
        if (config.jitter_within_block) {
            const double block = std::min(std::floor(j.time / dn), static_cast<double>(grid.n_coarse - 1));
            ShockSource src(SeedStream{config.seed, rep_id}, 0xFFFF0000u + static_cast<std::uint32_t>(i), Channel::auxiliary);
            j.time = (block + src.uniform()) * dn;
        }
        m.scheduled_jumps.push_back(j);
    }
    return m;
}

double grid_constant(const ExperimentConfig& config, const FunctionalSpec& g, std::size_t m) {
    switch (g.kind) {
        case FunctionalKind::terminal_power: return lambda_grid_closed(1, g.p, m);
        case FunctionalKind::integral_power: return lambda_grid_closed(2, g.p, m);
        case FunctionalKind::range_power: {
            if (auto rec = config.constants.grid(3, g.p, m)) return rec->value;
            LambdaOptions opts{LambdaMethod::mc, m, config.constant_reps, kDefaultSeed ^ kConstantSalt ^ m, config.threads, false};
            const double ps[] = {g.p};
            return family_moments_mc(3, ps, opts).moment(g.p).value;
        }
        case FunctionalKind::custom: break;
    }
    throw ConfigError("functional", "no limit target is available for custom functional '" + g.name() + "'");
}

double continuum_constant(const ExperimentConfig& config, const FunctionalSpec& g) {
    switch (g.kind) {
        case FunctionalKind::terminal_power: return lambda_grid_closed(1, g.p, 0);
        case FunctionalKind::integral_power: return lambda_grid_closed(2, g.p, 0);
        case FunctionalKind::range_power: {
            if (auto rec = config.constants.continuum(3, g.p)) return rec->value;
            LambdaOptions opts = config.lambda_options;
            opts.method = LambdaMethod::mc;
            opts.extrapolate = true;
            return lambda_moment(3, g.p, opts).value;
        }
        case FunctionalKind::custom: break;
    }
    throw ConfigError("functional", "no limit target is available for custom functional '" + g.name() + "'");
}

ExperimentReport run_lln(const ExperimentConfig& config) {
    if (config.kind != ExperimentKind::lln && config.kind != ExperimentKind::jump_lln) {
        throw ConfigError("kind", "run_lln expects kind lln or jump_lln");
    }
    return run_error_ladder(config, config.kind);
}

ExperimentReport run_rate(const ExperimentConfig& config) {
    if (config.ladder.size() < 4) throw ConfigError("ladder", "rate regression needs at least 4 ladder points");
    return run_error_ladder(config, ExperimentKind::rate);
}

ExperimentReport run_clt_coverage(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    if (config.functionals.empty()) throw ConfigError("functional", "clt coverage needs at least one functional");
    for (const auto& g : config.functionals) {
        if (!g.is_even) throw ConfigError("functional", "clt coverage requires an even functional, got " + g.name());
    }
    const auto stats = stat_specs(config.functionals, {});
    ConstantCache constants(config);
    const double zcrit = normal_critical_value(config.level);
    ExperimentReport report;
    report.kind = ExperimentKind::clt_coverage;
    report.seed = config.seed;

    for (std::size_t l = 0; l < config.ladder.size(); ++l) {
        const TimeGrid grid = grid_of(config, l);
        const std::size_t R = config.replications;
        const std::size_t S = stats.size();
        for (const auto& s : stats) report.constants_used[s.name + "@m=" + std::to_string(grid.m_fine)] = constants.get(s.g, grid.m_fine).grid;
        std::vector<double> zs(R * S), err(R * S);
        std::vector<char> degenerate(R * S, 0), covered(R * S, 0);
        parallel_for(R, config.threads, [&](std::size_t r) {
            const std::uint64_t id = replication_id(l, r);
            const auto path = simulate_path(replication_model(config, grid, id), grid, SeedStream{config.seed, id});
            const std::size_t n_used = blocks_in_horizon(grid, config.horizon);
            for (std::size_t s = 0; s < S; ++s) {
                const auto v = v_statistic(path, stats[s].g);
                const auto b = bipower_variance(path, stats[s].g);
                const double target = stat_target(stats[s], path, n_used, constants).grid;
                err[r * S + s] = v.value - target;
                if (!(b.value > 0.0)) {
                    degenerate[r * S + s] = 1;
                    zs[r * S + s] = std::numeric_limits<double>::quiet_NaN();
                    continue;
                }
                const double z = studentize(v, target, b);
                zs[r * S + s] = z;
                covered[r * S + s] = std::abs(z) <= zcrit ? 1 : 0;
            }
        });
        for (std::size_t s = 0; s < S; ++s) {
            ReportRow row;
            row.statistic = stats[s].name;
            row.ladder_index = l;
            row.n_coarse = grid.n_coarse;
            row.m_fine = grid.m_fine;
            row.delta_n = grid.delta_n();
            row.replications = R;
            row.seed = config.seed;
            row.target_constant = constants.get(stats[s].g, grid.m_fine).grid;
            std::vector<double> valid, e(R);
            std::size_t hits = 0;
            for (std::size_t r = 0; r < R; ++r) {
                e[r] = err[r * S + s];
                if (degenerate[r * S + s]) {
                    ++row.degenerate;
                } else {
                    valid.push_back(zs[r * S + s]);
                    hits += covered[r * S + s];
                }
            }
            const auto a = aggregate(e, {}, e);
            row.mean_error = a.mean_error;
            row.mean_abs_error = a.mean_abs;
            row.rmse = a.rmse;
            row.rmse_continuum = std::numeric_limits<double>::quiet_NaN();
            if (!valid.empty()) {
                row.coverage = static_cast<double>(hits) / static_cast<double>(valid.size());
                row.ks = ks_distance_normal(valid);
            }
            row.samples = std::move(valid);
            report.rows.push_back(std::move(row));
        }
    }
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentReport run_jump_clt_match(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    config.validate();
    if (config.range_exponents.empty()) throw ConfigError("range_exponents", "jump clt needs at least one exponent p");
    for (double p : config.range_exponents) {
        if (p < 2.0) throw UnsupportedError("jump clt: p < 2 has no finite limit");
        if (p > 2.0 && p <= 3.0) throw UnsupportedError("jump clt: the central limit theorem is only available for p > 3 or p = 2");
    }
    ExperimentConfig cfg = config;
    cfg.kind = ExperimentKind::jump_clt;
    const auto stats = stat_specs({}, cfg.range_exponents);
    ConstantCache constants(cfg);
    ExperimentReport report;
    report.kind = ExperimentKind::jump_clt;
    report.seed = cfg.seed;

    for (std::size_t l = 0; l < cfg.ladder.size(); ++l) {
        const TimeGrid grid = grid_of(cfg, l);
        const std::size_t R = cfg.replications;
        const std::size_t S = stats.size();
        const std::size_t limit_m = cfg.limit_m != 0 ? cfg.limit_m : grid.m_fine;
        const double scale = 1.0 / std::sqrt(grid.delta_n());
        double lambda32 = 0.0, lambda34 = 0.0;
        const bool need_mixed = std::any_of(stats.begin(), stats.end(), [](const auto& s) { return s.p == 2.0; });
        if (need_mixed) {
            lambda32 = constants.get(FunctionalSpec::range_power(2.0), grid.m_fine).grid;
            lambda34 = constants.get(FunctionalSpec::range_power(4.0), grid.m_fine).grid;
            report.constants_used["lambda32@m=" + std::to_string(grid.m_fine)] = lambda32;
            report.constants_used["lambda34@m=" + std::to_string(grid.m_fine)] = lambda34;
        }

        std::vector<double> err(R * S);
        std::vector<std::vector<JumpRecord>> jumps(R);
        std::vector<double> sigma4(R);
        std::vector<char> ok(R, 1);
        parallel_for(R, cfg.threads, [&](std::size_t r) {
            const std::uint64_t id = replication_id(l, r);
            const auto path = simulate_path(replication_model(cfg, grid, id), grid, SeedStream{cfg.seed, id});
            ok[r] = scenario_matches(cfg, path) ? 1 : 0;
            const std::size_t n_used = blocks_in_horizon(grid, cfg.horizon);
            for (std::size_t s = 0; s < S; ++s) {
                const double v = stat_value(stats[s], path);
                err[r * S + s] = scale * (v - stat_target(stats[s], path, n_used, constants).grid);
            }
            jumps[r] = path.jumps;
            sigma4[r] = integrated_abs_power(path, n_used, 4.0);
        });

        const std::size_t L = cfg.limit_reps;
        for (std::size_t s = 0; s < S; ++s) {
            const double p = stats[s].p;
            std::vector<double> limit(L);
            parallel_for(L, cfg.threads, [&](std::size_t k) {
                const std::size_t r = k % R;
                std::vector<LimitJump> lj;
                for (const auto& j : jumps[r]) {
                    LimitJump x{j.size, j.sigma_left, j.sigma_right, std::nullopt};
                    if (!cfg.jitter_within_block) x.kappa = j.kappa;
                    lj.push_back(x);
                }
                const SeedStream stream{cfg.seed ^ kLimitSalt, replication_id(l, k)};
                double value = simulate_jump_limit_once(lj, p, limit_m, stream).value;
                if (p == 2.0) {
                    const double coefficient = lambda34 - lambda32 * lambda32;
                    if (coefficient < 0.0) throw InternalConstantError("lambda^{3,4} - (lambda^{3,2})^2 is negative");
                    ShockSource src(stream, 0xFFFFFFFFu, Channel::limit_law);
                    value += std::sqrt(coefficient * sigma4[r]) * src.normal();
                }
                limit[k] = value;
            });
            std::vector<double> e(R);
            for (std::size_t r = 0; r < R; ++r) e[r] = err[r * S + s];
            const auto mom = sample_moments(e);
            ReportRow row;
            row.statistic = stats[s].name;
            row.ladder_index = l;
            row.n_coarse = grid.n_coarse;
            row.m_fine = grid.m_fine;
            row.delta_n = grid.delta_n();
            row.replications = R;
            row.mean_error = mom.mean;
            row.rmse = std::sqrt(mom.variance + mom.mean * mom.mean);
            row.rmse_continuum = std::numeric_limits<double>::quiet_NaN();
            row.ks = ks_distance_two_sample(e, limit);
            row.seed = cfg.seed;
            row.target_constant = p == 2.0 ? lambda32 : 0.0;
            row.samples = std::move(e);
            row.scenario_ok = std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
            report.rows.push_back(std::move(row));
        }
    }

    // KS should shrink along the ladder; successive values may tie within the
    // two-sample 95% noise band 1.36 sqrt(1/R + 1/L).
    const double band = 1.36 * std::sqrt(1.0 / static_cast<double>(cfg.replications) + 1.0 / static_cast<double>(cfg.limit_reps));
    for (const auto& s : stats) {
        std::vector<const ReportRow*> rows;
        for (const auto& row : report.rows) {
            if (row.statistic == s.name) rows.push_back(&row);
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < rows.size(); ++i) decreasing = decreasing && *rows[i]->ks <= *rows[i - 1]->ks + band;
        report.checks["ks_decreasing:" + s.name] = decreasing;
        report.checks["scenario:" + s.name] = std::all_of(rows.begin(), rows.end(), [](auto* r) { return r->scenario_ok; });
    }
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

std::vector<double> resolved_p_grid(const ExperimentConfig& config) {
    if (!config.p_grid.empty()) return config.p_grid;
    std::vector<double> grid;
    for (int i = 0; i <= 14; ++i) grid.push_back(0.5 + 0.25 * i);
    return grid;
}

}  // namespace

ExperimentReport run_figure1(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = resolved_p_grid(config);
    std::vector<double> ps = grid;
    for (double p : grid) {
        if (std::none_of(ps.begin(), ps.end(), [&](double q) { return std::abs(q - 2.0 * p) < 1e-12; })) ps.push_back(2.0 * p);
    }
    LambdaOptions opts = config.lambda_options;
    opts.method = LambdaMethod::mc;
    opts.threads = config.threads;
    const auto table = family_moments_mc(3, ps, opts);

    ExperimentReport report;
    report.kind = ExperimentKind::figure1;
    report.seed = opts.seed;
    for (double p : grid) {
        const double l1 = lambda_efficiency(1, p).value;
        const auto l3 = table.efficiency(p);
        report.figure.push_back({p, l1, l3.value, l3.std_error, l1 / l3.value});
    }
    bool below = true, decreasing = true;
    for (std::size_t i = 0; i < report.figure.size(); ++i) {
        below = below && report.figure[i].big_lambda_3 < report.figure[i].big_lambda_1;
        if (i > 0) decreasing = decreasing && report.figure[i].ratio < report.figure[i - 1].ratio;
    }
    report.checks["lambda3_below_lambda1"] = below;
    report.checks["ratio_decreasing_in_p"] = decreasing;
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentReport run_constants(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = resolved_p_grid(config);
    ExperimentReport report;
    report.kind = ExperimentKind::constants;
    report.seed = config.lambda_options.seed;
    for (int family : {1, 2}) {
        for (double p : grid) {
            report.constants.push_back({family, p, lambda_grid_closed(family, p, 0), 0.0, "closed_form", 0, 0, 0});
        }
    }
    LambdaOptions opts = config.lambda_options;
    opts.method = LambdaMethod::mc;
    opts.threads = config.threads;
    const auto table = family_moments_mc(3, grid, opts);
    for (double p : grid) {
        const auto est = table.moment(p);
        report.constants.push_back({3, p, est.value, est.std_error, table.extrapolated ? "mc_richardson" : "mc", table.m,
                                    table.reps, opts.seed});
    }
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
        case ExperimentKind::lln:
        case ExperimentKind::jump_lln: return run_lln(config);
        case ExperimentKind::clt_coverage: return run_clt_coverage(config);
        case ExperimentKind::rate: return run_rate(config);
        case ExperimentKind::jump_clt: return run_jump_clt_match(config);
        case ExperimentKind::figure1: return run_figure1(config);
        case ExperimentKind::constants: return run_constants(config);
    }
    throw ConfigError("kind", "unknown experiment kind");
}

double recompute_replication(const ExperimentConfig& config, std::size_t ladder_index, std::size_t stat,
                             std::size_t replication) {
    if (ladder_index >= config.ladder.size()) throw ArgumentError("ladder index out of range");
    const auto stats = config.kind == ExperimentKind::jump_clt       ? stat_specs({}, config.range_exponents)
                       : config.kind == ExperimentKind::clt_coverage ? stat_specs(config.functionals, {})
                                                                     : stat_specs(config.functionals, config.range_exponents);
    if (stat >= stats.size()) throw ArgumentError("statistic index out of range");
    ExperimentConfig cfg = config;
    ConstantCache constants(cfg);
    const TimeGrid grid = grid_of(cfg, ladder_index);
    const std::uint64_t id = replication_id(ladder_index, replication);
    const auto path = simulate_path(replication_model(cfg, grid, id), grid, SeedStream{cfg.seed, id});
    const std::size_t n_used = blocks_in_horizon(grid, cfg.horizon);
    const auto& s = stats[stat];
    switch (cfg.kind) {
        case ExperimentKind::clt_coverage: {
            const auto v = v_statistic(path, s.g);
            return studentize(v, stat_target(s, path, n_used, constants).grid, bipower_variance(path, s.g));
        }
        case ExperimentKind::jump_clt:
            return (stat_value(s, path) - stat_target(s, path, n_used, constants).grid) / std::sqrt(grid.delta_n());
        default:
            return stat_value(s, path) - stat_target(s, path, n_used, constants).grid;
    }
}

namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string nan_cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

void write_report_csv(const ExperimentReport& report, const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    out << "# " << comment << '\n';
    out << "kind,statistic,ladder_index,n_coarse,m_fine,delta_n,replications,mean_error,mean_abs_error,"
           "mean_rel_error,rmse,rmse_continuum,coverage,ks,degenerate,target_constant,seed\n";
    for (const auto& r : report.rows) {
        out << to_string(report.kind) << ',' << r.statistic << ',' << r.ladder_index << ',' << r.n_coarse << ','
            << r.m_fine << ',' << format_double(r.delta_n) << ',' << r.replications << ','
            << format_double(r.mean_error) << ',' << format_double(r.mean_abs_error) << ','
            << format_double(r.mean_rel_error) << ',' << format_double(r.rmse) << ',' << nan_cell(r.rmse_continuum)
            << ',' << opt_cell(r.coverage) << ',' << opt_cell(r.ks) << ',' << r.degenerate << ','
            << format_double(r.target_constant) << ',' << r.seed << '\n';
    }
}

void write_slopes_csv(const ExperimentReport& report, const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    out << "# " << comment << '\n';
    out << "statistic,slope,slope_std_error,points\n";
    for (const auto& s : report.slopes) {
        out << s.statistic << ',' << format_double(s.slope) << ',' << format_double(s.slope_std_error) << ','
            << s.points << '\n';
    }
}

void write_figure1_csv(const ExperimentReport& report, const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    out << "# " << comment << '\n';
    out << "p,Lambda1,Lambda2,Lambda3,Lambda3_std_error,ratio\n";
    for (const auto& f : report.figure) {
        out << format_double(f.p) << ',' << format_double(f.big_lambda_1) << ',' << format_double(f.big_lambda_1)
            << ',' << format_double(f.big_lambda_3) << ',' << format_double(f.big_lambda_3_se) << ','
            << format_double(f.ratio) << '\n';
    }
}

}  // namespace hfpath
