#include "hfpath/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>

#include <boost/math/special_functions/zeta.hpp>

#include "hfpath/error.hpp"
#include "hfpath/io.hpp"
#include "hfpath/numeric.hpp"
#include "hfpath/parallel.hpp"

#ifndef HFPATH_DATA_DIR
#define HFPATH_DATA_DIR "data"
#endif

namespace hfpath {
namespace {

// Replications are grouped into fixed-size chunks; chunk partial sums are
// combined pairwise, so reductions do not depend on the worker count.
constexpr std::size_t kChunk = 1024;

std::size_t chunk_count(std::size_t reps) { return (reps + kChunk - 1) / kChunk; }

RhoEstimate estimate_from(std::span<const double> samples, std::size_t m) {
    const auto mom = sample_moments(samples);
    return RhoEstimate{mom.mean, mom.std_error(), samples.size(), m};
}

void require_family(int family) {
    if (family < 1 || family > 3) throw ArgumentError("lambda family must be 1, 2 or 3");
}

void require_mc_shape(std::size_t m, std::size_t reps) {
    if (m < 1) throw ArgumentError("Brownian segment resolution m must be at least 1");
    if (reps < 2) throw ArgumentError("Monte Carlo needs at least two replications");
}

// sup over s of sigma * d_s where d holds (W_kappa - W_s) values (0 included).
double signed_sup(double sigma, double max_d, double min_d) { return sigma >= 0.0 ? sigma * max_d : sigma * min_d; }

struct SidedExtremes {
    double pre_max = 0.0;   // max_{s<=kappa} (W_kappa - W_s)
    double pre_min = 0.0;   // min_{s<=kappa} (W_kappa - W_s)
    double post_max = 0.0;  // max_{u>=kappa} (W_u - W_kappa)
    double post_min = 0.0;  // min_{u>=kappa} (W_u - W_kappa)
};

// Brownian motion on {k/m} with kappa inserted, walked outwards from kappa.
SidedExtremes simulate_around_kappa(ShockSource& src, double kappa, std::size_t m) {
    const double md = static_cast<double>(m);
    const double step = 1.0 / md;
    const double sqrt_step = std::sqrt(step);
    // First grid index at or after kappa.
    const auto j = static_cast<std::size_t>(std::ceil(kappa * md));
    SidedExtremes e;
    // Backwards: grid points (j-1)/m, ..., 0.
    double d = 0.0;
    if (j >= 1) {
        const double gap = kappa - static_cast<double>(j - 1) * step;
        d += std::sqrt(std::max(gap, 0.0)) * src.normal();
        e.pre_max = std::max(e.pre_max, d);
        e.pre_min = std::min(e.pre_min, d);
        for (std::size_t k = j - 1; k >= 1; --k) {
            d += sqrt_step * src.normal();
            e.pre_max = std::max(e.pre_max, d);
            e.pre_min = std::min(e.pre_min, d);
        }
    }
    // Forwards: grid points j/m, ..., 1.
    double w = 0.0;
    if (j <= m) {
        const double gap = static_cast<double>(j) * step - kappa;
        w += std::sqrt(std::max(gap, 0.0)) * src.normal();
        e.post_max = std::max(e.post_max, w);
        e.post_min = std::min(e.post_min, w);
        for (std::size_t k = j + 1; k <= m; ++k) {
            w += sqrt_step * src.normal();
            e.post_max = std::max(e.post_max, w);
            e.post_min = std::min(e.post_min, w);
        }
    }
    // pre values are W_kappa - W_s = -(walk of W_s - W_kappa)
    return SidedExtremes{-e.pre_min, -e.pre_max, e.post_max, e.post_min};
}

double jump_term(const LimitJump& jump, double p, double kappa, ShockSource& src, std::size_t m) {
    const auto e = simulate_around_kappa(src, kappa, m);
    double bracket = 0.0;
    if (jump.size > 0.0) {
        bracket = signed_sup(jump.sigma_left, e.pre_max, e.pre_min) + signed_sup(jump.sigma_right, e.post_max, e.post_min);
    } else if (jump.size < 0.0) {
        bracket = signed_sup(-jump.sigma_left, e.pre_max, e.pre_min) + signed_sup(-jump.sigma_right, e.post_max, e.post_min);
    }
    return p * std::pow(std::abs(jump.size), p - 1.0) * bracket;
}

// The scalar whose powers define family i on a standard Brownian segment.
double family_base(int family, std::span<const double> w) {
    switch (family) {
        case 1: return std::abs(w.back());
        case 2: return std::abs(trapezoid_mean(w));
        default: {
            const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
            return *hi - *lo;
        }
    }
}

double coarse_range(std::span<const double> w, std::size_t stride) {
    double lo = w[0], hi = w[0];
    for (std::size_t k = stride; k < w.size(); k += stride) {
        lo = std::min(lo, w[k]);
        hi = std::max(hi, w[k]);
    }
    return hi - lo;
}

double power_of(double base, double p) { return base > 0.0 ? std::exp(p * std::log(base)) : 0.0; }

}  // namespace

void brownian_segment(ShockSource& source, std::span<double> out) {
    if (out.size() < 2) throw ArgumentError("Brownian segment needs at least two points");
    const double sd = 1.0 / std::sqrt(static_cast<double>(out.size() - 1));
    out[0] = 0.0;
    for (std::size_t k = 1; k < out.size(); ++k) out[k] = out[k - 1] + sd * source.normal();
}

RhoEstimate rho_mc(double z, const FunctionalSpec& g, std::size_t m, std::size_t reps, std::uint64_t seed,
                   unsigned threads) {
    require_mc_shape(m, reps);
    std::vector<double> samples(reps);
    parallel_for(chunk_count(reps), threads, [&](std::size_t c) {
        std::vector<double> w(m + 1);
        const std::size_t end = std::min(reps, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) {
            ShockSource src(SeedStream{seed, r}, 0, Channel::auxiliary);
            brownian_segment(src, w);
            for (double& v : w) v *= z;
            try {
                samples[r] = eval(g, w);
            } catch (const Error& e) {
                throw Error("rho_mc: replication " + std::to_string(r) + ": " + e.what());
            }
        }
    });
    return estimate_from(samples, m);
}

Rho123Estimate rho123_mc(double z, const FunctionalSpec& g, std::size_t reps, std::size_t m, std::uint64_t seed,
                         Rho3Variant variant, unsigned threads) {
    require_mc_shape(m, reps);
    const bool with_derivative = g.has_derivative();
    std::vector<double> s1(reps), s2(with_derivative ? reps : 0), s3(with_derivative ? reps : 0),
        s3p(with_derivative ? reps : 0);
    parallel_for(chunk_count(reps), threads, [&](std::size_t c) {
        std::vector<double> w(m + 1), x(m + 1), dir_s(m + 1), dir_w2(m + 1), dir_w2s(m + 1);
        for (std::size_t k = 0; k <= m; ++k) dir_s[k] = static_cast<double>(k) / static_cast<double>(m);
        const std::size_t end = std::min(reps, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) {
            ShockSource src(SeedStream{seed, r}, 0, Channel::auxiliary);
            brownian_segment(src, w);
            for (std::size_t k = 0; k <= m; ++k) x[k] = z * w[k];
            s1[r] = eval(g, x) * w.back();
            if (with_derivative) {
                for (std::size_t k = 0; k <= m; ++k) {
                    dir_w2[k] = w[k] * w[k];
                    dir_w2s[k] = dir_w2[k] - dir_s[k];
                }
                s2[r] = directional_derivative(g, x, dir_s);
                s3[r] = directional_derivative(g, x, dir_w2);
                s3p[r] = directional_derivative(g, x, dir_w2s);
            }
        }
    });
    Rho123Estimate out;
    out.variant = variant;
    out.rho1 = estimate_from(s1, m);
    if (with_derivative) {
        out.rho2 = estimate_from(s2, m);
        const auto stated = estimate_from(s3, m);
        const auto proof = estimate_from(s3p, m);
        out.rho3 = variant == Rho3Variant::as_stated ? stated : proof;
        out.rho3_alternate = variant == Rho3Variant::as_stated ? proof : stated;
    } else {
        out.derivative_error = "functional '" + g.name() + "' has no directional derivative";
    }
    return out;
}

double lambda_grid_closed(int family, double p, std::size_t m) {
    require_family(family);
    if (!(p > 0.0)) throw ArgumentError("lambda exponent p must be positive");
    if (family == 3) throw UnsupportedError("no closed form for the range family");
    const double l1 = gaussian_abs_moment(p);
    if (family == 1) return l1;
    const double md = static_cast<double>(m);
    const double var = m == 0 ? 1.0 / 3.0 : 1.0 / 3.0 - 1.0 / (12.0 * md * md);
    return l1 * std::pow(var, 0.5 * p);
}

double range_moment_feller(double p) {
    if (!(p > 0.0)) throw ArgumentError("range moment exponent p must be positive");
    const double s = p - 1.0;
    // Dirichlet eta(s) = (1 - 2^{1-s}) zeta(s); removable singularity at s = 1
    const double eta = std::abs(s - 1.0) < 1e-9 ? std::numbers::ln2 : (1.0 - std::pow(2.0, 1.0 - s)) * boost::math::zeta(s);
    return 4.0 * gaussian_abs_moment(p) * eta;
}

std::size_t MomentTable::index_of(double p) const {
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (std::abs(ps[i] - p) < 1e-12) return i;
    }
    throw ArgumentError("moment table has no exponent " + format_display(p));
}

RhoEstimate MomentTable::moment(double p) const {
    const auto i = index_of(p);
    return RhoEstimate{mean[i], std::sqrt(std::max(cov[i][i], 0.0)), reps, m};
}

RhoEstimate MomentTable::efficiency(double p) const {
    const auto i = index_of(p);
    const auto j = index_of(2.0 * p);
    const double a = mean[i];
    const double b = mean[j];
    if (!(a > 0.0)) throw InternalConstantError("efficiency: non-positive moment");
    const double value = (b - a * a) / (a * a);
    // gradient of b / a^2 - 1
    const double ga = -2.0 * b / (a * a * a);
    const double gb = 1.0 / (a * a);
    const double var = ga * ga * cov[i][i] + 2.0 * ga * gb * cov[i][j] + gb * gb * cov[j][j];
    return RhoEstimate{value, std::sqrt(std::max(var, 0.0)), reps, m};
}

MomentTable family_moments_mc(int family, std::span<const double> ps, const LambdaOptions& opts) {
    require_family(family);
    require_mc_shape(opts.m, opts.reps);
    if (ps.empty()) throw ArgumentError("family_moments_mc: no exponents");
    for (double p : ps) {
        if (!(p > 0.0)) throw ArgumentError("lambda exponent p must be positive");
    }
    const bool extrapolate = family == 3 && opts.extrapolate;
    if (extrapolate && opts.m % 16 != 0) throw ArgumentError("range extrapolation needs m divisible by 16");
    const std::size_t np = ps.size();
    const std::size_t m = opts.m;
    const std::size_t chunks = chunk_count(opts.reps);
    // per chunk: np sums followed by np*np cross sums
    std::vector<std::vector<double>> partial(chunks);
    parallel_for(chunks, opts.threads, [&](std::size_t c) {
        std::vector<double> acc(np + np * np, 0.0), w(m + 1), y(np);
        const std::size_t end = std::min(opts.reps, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) {
            ShockSource src(SeedStream{opts.seed, r}, 0, Channel::auxiliary);
            brownian_segment(src, w);
            const double base = family_base(family, w);
            const double r4 = extrapolate ? coarse_range(w, 4) : 0.0;
            const double r16 = extrapolate ? coarse_range(w, 16) : 0.0;
            for (std::size_t a = 0; a < np; ++a) {
                y[a] = power_of(base, ps[a]);
                // bias expands in powers of m^{-1/2}; cancel the first two terms
                if (extrapolate) y[a] = (8.0 * y[a] - 6.0 * power_of(r4, ps[a]) + power_of(r16, ps[a])) / 3.0;
            }
            for (std::size_t a = 0; a < np; ++a) {
                acc[a] += y[a];
                for (std::size_t b = a; b < np; ++b) acc[np + a * np + b] += y[a] * y[b];
            }
        }
        partial[c] = std::move(acc);
    });
    std::vector<double> total(np + np * np), column(chunks);
    for (std::size_t e = 0; e < total.size(); ++e) {
        for (std::size_t c = 0; c < chunks; ++c) column[c] = partial[c][e];
        total[e] = pairwise_sum(column);
    }
    const double n = static_cast<double>(opts.reps);
    MomentTable t;
    t.family = family;
    t.ps.assign(ps.begin(), ps.end());
    t.reps = opts.reps;
    t.m = m;
    t.extrapolated = extrapolate;
    t.mean.resize(np);
    for (std::size_t a = 0; a < np; ++a) t.mean[a] = total[a] / n;
    t.cov.assign(np, std::vector<double>(np, 0.0));
    for (std::size_t a = 0; a < np; ++a) {
        for (std::size_t b = a; b < np; ++b) {
            const double sample_cov = (total[np + a * np + b] / n - t.mean[a] * t.mean[b]) * n / (n - 1.0);
            t.cov[a][b] = t.cov[b][a] = sample_cov / n;
        }
    }
    return t;
}

RhoEstimate lambda_moment(int family, double p, const LambdaOptions& opts) {
    require_family(family);
    if (!(p > 0.0)) throw ArgumentError("lambda exponent p must be positive");
    if (opts.method == LambdaMethod::closed_form) {
        if (family == 3) throw UnsupportedError("closed form is not available for lambda^{3,p}; use the mc method");
        return RhoEstimate{lambda_grid_closed(family, p, 0), 0.0, 0, 0};
    }
    const double ps[] = {p};
    return family_moments_mc(family, ps, opts).moment(p);
}

RhoEstimate lambda_efficiency(int family, double p, const LambdaOptions& opts) {
    require_family(family);
    if (!(p > 0.0)) throw ArgumentError("lambda exponent p must be positive");
    if (opts.method == LambdaMethod::closed_form) {
        if (family == 3) throw UnsupportedError("closed form is not available for Lambda^{3,p}; use the mc method");
        // family 2 is a rescaled family 1, so the ratio is the same; using the
        // unscaled moments keeps integer cases exact
        const double a = gaussian_abs_moment(p);
        const double b = gaussian_abs_moment(2.0 * p);
        return RhoEstimate{(b - a * a) / (a * a), 0.0, 0, 0};
    }
    const double ps[] = {p, 2.0 * p};
    return family_moments_mc(family, ps, opts).efficiency(p);
}

namespace {

void validate_limit_inputs(std::span<const LimitJump> jumps, double p, std::size_t m) {
    if (!(p > 0.0)) throw ArgumentError("limit law exponent p must be positive");
    if (m < 1) throw ArgumentError("limit law resolution m must be at least 1");
    for (const auto& j : jumps) {
        if (!std::isfinite(j.size) || !std::isfinite(j.sigma_left) || !std::isfinite(j.sigma_right)) {
            throw ArgumentError("limit law jump inputs must be finite");
        }
        if (j.kappa && !(*j.kappa >= 0.0 && *j.kappa <= 1.0)) throw ArgumentError("kappa must lie in [0, 1]");
    }
}

LimitLawSample jump_limit_sample(std::span<const LimitJump> jumps, double p, std::size_t m, const SeedStream& seed) {
    LimitLawSample sample;
    sample.per_jump_terms.resize(jumps.size());
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        ShockSource src(seed, static_cast<std::uint32_t>(i), Channel::limit_law);
        const double kappa = jumps[i].kappa ? *jumps[i].kappa : src.uniform();
        sample.per_jump_terms[i] = jump_term(jumps[i], p, kappa, src, m);
    }
    sample.value = pairwise_sum(sample.per_jump_terms);
    return sample;
}

}  // namespace

LimitLawSample simulate_jump_limit_once(std::span<const LimitJump> jumps, double p, std::size_t m,
                                        const SeedStream& seed) {
    validate_limit_inputs(jumps, p, m);
    return jump_limit_sample(jumps, p, m, seed);
}

std::vector<LimitLawSample> simulate_jump_limit(std::span<const LimitJump> jumps, double p, const LimitSimOptions& opts) {
    validate_limit_inputs(jumps, p, opts.m);
    std::vector<LimitLawSample> out(opts.reps);
    parallel_for(chunk_count(opts.reps), opts.threads, [&](std::size_t c) {
        const std::size_t end = std::min(opts.reps, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) out[r] = jump_limit_sample(jumps, p, opts.m, SeedStream{opts.seed, r});
    });
    return out;
}

std::vector<LimitLawSample> simulate_mixed_limit(std::span<const LimitJump> jumps,
                                                 std::span<const double> sigma_left_points, double dt,
                                                 double lambda32, double lambda34, const LimitSimOptions& opts) {
    const double coefficient = lambda34 - lambda32 * lambda32;
    if (!(coefficient >= 0.0) || !std::isfinite(coefficient)) {
        throw InternalConstantError("lambda^{3,4} - (lambda^{3,2})^2 is negative; the range constants are inconsistent");
    }
    if (!(dt >= 0.0)) throw ArgumentError("mixed limit: dt must be non-negative");
    std::vector<double> sigma4(sigma_left_points.size());
    for (std::size_t k = 0; k < sigma4.size(); ++k) {
        if (!std::isfinite(sigma_left_points[k])) throw ArgumentError("mixed limit: sigma path must be finite");
        sigma4[k] = std::pow(sigma_left_points[k], 4);
    }
    const double sd = std::sqrt(coefficient * pairwise_sum(sigma4) * dt);
    auto out = simulate_jump_limit(jumps, 2.0, opts);
    for (std::size_t r = 0; r < out.size(); ++r) {
        ShockSource src(SeedStream{opts.seed, r}, 0xFFFFFFFFu, Channel::limit_law);
        out[r].mixed_gaussian_part = sd * src.normal();
        out[r].value += out[r].mixed_gaussian_part;
    }
    return out;
}

std::vector<LimitLawSample> simulate_continuous_limit(const FunctionalSpec& g, const ContinuousLimitInputs& in,
                                                      const LimitSimOptions& opts) {
    const std::size_t K = in.sigma.size();
    if (!(in.dt >= 0.0)) throw ArgumentError("continuous limit: dt must be non-negative");
    if (!in.drift.empty() && in.drift.size() != K) throw ArgumentError("continuous limit: drift path length mismatch");
    if (!in.vol_of_vol.empty() && in.vol_of_vol.size() != K) throw ArgumentError("continuous limit: vol-of-vol path length mismatch");
    if (!in.w_increments.empty() && in.w_increments.size() != K) throw ArgumentError("continuous limit: W increments length mismatch");
    if (!g.is_even && !g.has_derivative()) {
        throw UnsupportedDerivative("continuous limit for a non-even functional needs its directional derivative");
    }

    // rho-constants per distinct sigma value.
    struct Coefficients {
        double u1_mu = 0.0;     // multiplies mu_s
        double u1_vov = 0.0;    // multiplies sigma~_s
        double u2 = 0.0;
        double u3_sq = 0.0;
    };
    const FunctionalSpec g_squared = g.is_builtin()
                                         ? FunctionalSpec{g.kind, 2.0 * g.p, true, {}, {}, {}}
                                         : FunctionalSpec::custom(g.name() + "^2",
                                                                  [f = g.evaluator](std::span<const double> x) {
                                                                      const double v = f(x);
                                                                      return v * v;
                                                                  },
                                                                  true);
    // Built-ins are homogeneous of degree p, so one unit-scale constant per functional suffices.
    auto unit_rho = [&](const FunctionalSpec& f) -> double {
        switch (f.kind) {
            case FunctionalKind::terminal_power: return lambda_grid_closed(1, f.p, 0);
            case FunctionalKind::integral_power: return lambda_grid_closed(2, f.p, opts.m);
            default: return rho_mc(1.0, f, opts.m, in.rho_reps, opts.seed ^ 0x5EEDULL, opts.threads).value;
        }
    };
    std::map<double, Coefficients> cache;
    double builtin_rho = 0.0, builtin_rho_sq = 0.0;
    if (g.is_builtin()) {
        builtin_rho = unit_rho(g);
        builtin_rho_sq = unit_rho(g_squared);
    }
    auto coefficients_for = [&](double sigma) -> const Coefficients& {
        auto it = cache.find(sigma);
        if (it != cache.end()) return it->second;
        Coefficients c;
        if (g.is_builtin()) {
            const double a = std::abs(sigma);
            const double r = std::pow(a, g.p) * builtin_rho;
            c.u3_sq = std::pow(a, 2.0 * g.p) * builtin_rho_sq - r * r;
        } else {
            const double r = rho_mc(sigma, g, opts.m, in.rho_reps, opts.seed ^ 0x5EEDULL, opts.threads).value;
            const double r2 = rho_mc(sigma, g_squared, opts.m, in.rho_reps, opts.seed ^ 0x5EEDULL, opts.threads).value;
            c.u3_sq = r2 - r * r;
            if (!g.is_even) {
                const auto r123 = rho123_mc(sigma, g, in.rho_reps, opts.m, opts.seed ^ 0x5EEDULL,
                                            Rho3Variant::as_stated, opts.threads);
                c.u2 = r123.rho1.value;
                c.u1_mu = r123.rho2->value;
                c.u1_vov = 0.5 * (r123.rho3->value - r123.rho2->value);
                c.u3_sq -= c.u2 * c.u2;
            }
        }
        c.u3_sq = std::max(c.u3_sq, 0.0);
        return cache.emplace(sigma, c).first->second;
    };

    // Deterministic parts: int u1 ds and, when W is supplied, int u2 dW.
    double drift_part = 0.0, w_part = 0.0, var_part = 0.0;
    std::vector<double> u2(K), u3(K);
    for (std::size_t k = 0; k < K; ++k) {
        if (!std::isfinite(in.sigma[k])) throw ArgumentError("continuous limit: sigma path must be finite");
        const auto& c = coefficients_for(in.sigma[k]);
        const double mu = in.drift.empty() ? 0.0 : in.drift[k];
        const double vov = in.vol_of_vol.empty() ? 0.0 : in.vol_of_vol[k];
        drift_part += (mu * c.u1_mu + vov * c.u1_vov) * in.dt;
        u2[k] = c.u2;
        u3[k] = std::sqrt(c.u3_sq);
        var_part += c.u3_sq * in.dt;
        if (!in.w_increments.empty()) w_part += c.u2 * in.w_increments[k];
    }
    const bool gaussian_only = g.is_even;
    const bool fresh_w = in.w_increments.empty() && !gaussian_only;
    const double sqrt_dt = std::sqrt(in.dt);

    std::vector<LimitLawSample> out(opts.reps);
    parallel_for(chunk_count(opts.reps), opts.threads, [&](std::size_t ch) {
        const std::size_t end = std::min(opts.reps, (ch + 1) * kChunk);
        for (std::size_t r = ch * kChunk; r < end; ++r) {
            ShockSource wprime(SeedStream{opts.seed, r}, 0xFFFFFFFEu, Channel::limit_law);
            double value = 0.0;
            if (gaussian_only) {
                value = std::sqrt(var_part) * wprime.normal();
            } else {
                ShockSource wsrc(SeedStream{opts.seed, r}, 0xFFFFFFFDu, Channel::limit_law);
                value = drift_part + w_part;
                for (std::size_t k = 0; k < K; ++k) {
                    value += u3[k] * sqrt_dt * wprime.normal();
                    if (fresh_w) value += u2[k] * sqrt_dt * wsrc.normal();
                }
            }
            out[r].value = value;
            out[r].mixed_gaussian_part = 0.0;
        }
    });
    return out;
}

std::string to_string(LambdaMethod method) { return method == LambdaMethod::closed_form ? "closed_form" : "mc"; }

ConstantsTable ConstantsTable::load(const std::string& path) {
    std::vector<ConstantRecord> records;
    for (const auto& r : read_csv_rows(path, "family,p,value,std_error,method,m,reps,seed")) {
        if (r.size() != 8) throw ArgumentError(path + ": expected 8 columns");
        ConstantRecord c;
        c.family = static_cast<int>(parse_u64(r[0], "family"));
        c.p = parse_double(r[1], "p");
        c.value = parse_double(r[2], "value");
        c.std_error = parse_double(r[3], "std_error");
        c.method = r[4];
        c.m = parse_u64(r[5], "m");
        c.reps = parse_u64(r[6], "reps");
        c.seed = parse_u64(r[7], "seed");
        records.push_back(std::move(c));
    }
    return ConstantsTable(std::move(records));
}

void ConstantsTable::save(const std::string& path, const std::string& comment) const {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path);
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "family,p,value,std_error,method,m,reps,seed\n";
    for (const auto& c : records_) {
        out << c.family << ',' << format_double(c.p) << ',' << format_double(c.value) << ','
            << format_double(c.std_error) << ',' << c.method << ',' << c.m << ',' << c.reps << ',' << c.seed << '\n';
    }
}

std::optional<ConstantRecord> ConstantsTable::continuum(int family, double p) const {
    for (const auto& c : records_) {
        if (c.family == family && std::abs(c.p - p) < 1e-12 && (c.method == "closed_form" || c.method == "mc_richardson")) {
            return c;
        }
    }
    return std::nullopt;
}

std::optional<ConstantRecord> ConstantsTable::grid(int family, double p, std::size_t m) const {
    for (const auto& c : records_) {
        if (c.family == family && std::abs(c.p - p) < 1e-12 && c.method == "mc" && c.m == m) return c;
    }
    return std::nullopt;
}

std::string default_constants_path() {
    if (const char* env = std::getenv("HFPATH_CONSTANTS")) return env;
    return std::string(HFPATH_DATA_DIR) + "/constants.csv";
}

}  // namespace hfpath
