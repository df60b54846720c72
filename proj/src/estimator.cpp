#include "hfpath/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hfpath/error.hpp"
#include "hfpath/numeric.hpp"

namespace hfpath {
namespace {

double resolve_t(const TimeGrid& grid, const EstimatorOptions& opts) {
    if (std::isnan(opts.t)) return grid.horizon;
    if (!(opts.t > 0.0) || opts.t > grid.horizon * (1.0 + 1e-12)) throw ArgumentError("estimator horizon t must lie in (0, horizon]");
    return opts.t;
}

// g(dn^{-1/2} d_i^n(X)) for i = 1..n_blocks.
std::vector<double> block_functionals(const FineGridPath& path, const FunctionalSpec& g, std::size_t n_blocks) {
    const double scale = 1.0 / std::sqrt(path.grid.delta_n());
    std::vector<double> seg(path.grid.m_fine + 1);
    std::vector<double> out(n_blocks);
    for (std::size_t i = 1; i <= n_blocks; ++i) {
        segment_extract_into(path, i, scale, seg);
        out[i - 1] = eval(g, seg);
    }
    return out;
}

EstimateResult base_result(const FineGridPath& path, double t, std::size_t n_used) {
    EstimateResult r;
    r.t = t;
    r.delta_n = path.grid.delta_n();
    r.n_used = n_used;
    return r;
}

}  // namespace

std::size_t blocks_in_horizon(const TimeGrid& grid, double t) {
    const double ratio = t / grid.delta_n();
    const auto n = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    return std::min(n, grid.n_coarse);
}

EstimateResult v_statistic(const FineGridPath& path, const FunctionalSpec& g, const EstimatorOptions& opts) {
    if (path.has_jumps() && !opts.allow_jumps) {
        throw MisuseError("v_statistic: path has jumps; the continuous-case statistic does not apply (set allow_jumps)");
    }
    const double t = resolve_t(path.grid, opts);
    const std::size_t n = blocks_in_horizon(path.grid, t);
    EstimateResult r = base_result(path, t, n);
    const auto gs = block_functionals(path, g, n);
    r.value = r.delta_n * pairwise_sum(gs);
    return r;
}

EstimateResult bipower_variance(const FineGridPath& path, const FunctionalSpec& g, const EstimatorOptions& opts) {
    if (!g.is_even) throw MisuseError("bipower_variance: studentization requires an even functional");
    if (path.has_jumps() && !opts.allow_jumps) {
        throw MisuseError("bipower_variance: path has jumps; the continuous-case statistic does not apply");
    }
    const double t = resolve_t(path.grid, opts);
    const std::size_t n = blocks_in_horizon(path.grid, t);
    if (n < 2) throw ArgumentError("bipower_variance needs at least two coarse intervals");
    EstimateResult r = base_result(path, t, n - 1);
    const auto gs = block_functionals(path, g, n);
    std::vector<double> terms(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) terms[i] = gs[i] * gs[i] - gs[i] * gs[i + 1];
    r.value = r.delta_n * pairwise_sum(terms);
    if (r.value < 0.0) {
        r.value = 0.0;
        r.floored = true;
    }
    return r;
}

double studentize(const EstimateResult& stat, double target, const EstimateResult& variance_stat) {
    if (!(variance_stat.value > 0.0)) throw DegenerateVariance("studentize: variance estimate is not positive");
    return (stat.value - target) / std::sqrt(stat.delta_n) / std::sqrt(variance_stat.value);
}

EstimateResult with_feasible_ci(EstimateResult stat, const EstimateResult& variance_stat, double level) {
    if (!(variance_stat.value > 0.0)) throw DegenerateVariance("confidence interval: variance estimate is not positive");
    const double half = normal_critical_value(level) * std::sqrt(stat.delta_n * variance_stat.value);
    stat.avar = variance_stat.value;
    stat.ci = ConfidenceInterval{stat.value - half, stat.value + half, level};
    return stat;
}

EstimateResult realized_range(const FineGridPath& path, double p, const EstimatorOptions& opts) {
    if (!(p > 0.0)) throw ArgumentError("realized_range: p must be positive");
    const double t = resolve_t(path.grid, opts);
    const std::size_t n = blocks_in_horizon(path.grid, t);
    EstimateResult r = base_result(path, t, n);
    const std::size_t m = path.grid.m_fine;
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto first = path.x.begin() + static_cast<std::ptrdiff_t>(i * m);
        const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(m + 1));
        terms[i] = std::pow(*hi - *lo, p);
    }
    r.value = pairwise_sum(terms);
    return r;
}

EstimateResult local_average_qv(const FineGridPath& path, const EstimatorOptions& opts) {
    if (path.grid.m_fine < 2) throw ArgumentError("local_average_qv needs m_fine >= 2");
    if (path.has_jumps() && !opts.allow_jumps) throw MisuseError("local_average_qv: path has jumps");
    const double t = resolve_t(path.grid, opts);
    const std::size_t n = blocks_in_horizon(path.grid, t);
    EstimateResult r = base_result(path, t, n >= 1 ? n - 1 : 0);
    const std::size_t m = path.grid.m_fine;
    std::vector<double> averages(n);
    for (std::size_t i = 0; i < n; ++i) {
        averages[i] = trapezoid_mean(std::span<const double>(path.x).subspan(i * m, m + 1));
    }
    std::vector<double> terms(n > 0 ? n - 1 : 0);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = averages[i] - averages[i - 1];
        terms[i - 1] = d * d;
    }
    r.value = pairwise_sum(terms);
    return r;
}

}  // namespace hfpath
