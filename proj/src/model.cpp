#include "hfpath/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/random/poisson_distribution.hpp>

#include "hfpath/error.hpp"

namespace hfpath {
namespace {

double eval_or_zero(const CoefficientFn& f, double t, double state) { return f ? f(t, state) : 0.0; }

struct PendingJump {
    double time;
    double u;  // exact within-block fraction
    double size;
    std::size_t fine_index;
};

}  // namespace

void TimeGrid::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ArgumentError("grid horizon must be positive and finite");
    if (n_coarse < 1) throw ArgumentError("grid n_coarse must be at least 1");
    if (m_fine < 1) throw ArgumentError("grid m_fine must be at least 1");
}

double JumpSpec::min_abs_size() const {
    return std::visit(
        [](const auto& law) -> double {
            using Law = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<Law, TwoPointLaw>) {
                return std::min(std::abs(law.a), std::abs(law.b));
            } else if constexpr (std::is_same_v<Law, TruncatedGaussianLaw>) {
                return law.floor;
            } else {
                return law.lo;
            }
        },
        size_law);
}

void JumpSpec::validate() const {
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) throw ArgumentError("jump intensity must be >= 0");
    std::visit(
        [](const auto& law) {
            using Law = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<Law, TwoPointLaw>) {
                if (law.a == 0.0 || law.b == 0.0) throw ArgumentError("two_point jump sizes must be non-zero");
                if (!(law.prob_a >= 0.0 && law.prob_a <= 1.0)) throw ArgumentError("two_point prob_a must lie in [0, 1]");
            } else if constexpr (std::is_same_v<Law, TruncatedGaussianLaw>) {
                if (!(law.sd > 0.0)) throw ArgumentError("gaussian_truncated sd must be positive");
                if (!(law.floor > 0.0)) throw ArgumentError("gaussian_truncated floor must be positive");
                // Rejection sampling needs non-negligible acceptance.
                const double z = (law.floor - std::abs(law.mean)) / law.sd;
                if (z > 6.0) throw ArgumentError("gaussian_truncated floor is too far in the tail of the size law");
            } else {
                if (!(law.lo > 0.0 && law.hi >= law.lo)) throw ArgumentError("uniform_signed needs 0 < lo <= hi");
            }
        },
        size_law);
}

double JumpSpec::draw_size(ShockSource& source) const {
    return std::visit(
        [&](const auto& law) -> double {
            using Law = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<Law, TwoPointLaw>) {
                return source.uniform() < law.prob_a ? law.a : law.b;
            } else if constexpr (std::is_same_v<Law, TruncatedGaussianLaw>) {
                for (;;) {
                    const double j = law.mean + law.sd * source.normal();
                    if (std::abs(j) >= law.floor) return j;
                }
            } else {
                const double mag = law.lo + (law.hi - law.lo) * source.uniform();
                return source.uniform() < 0.5 ? -mag : mag;
            }
        },
        size_law);
}

double VolSpec::floor() const { return positivity_floor >= 0.0 ? positivity_floor : 1e-6 * std::abs(sigma0); }

bool VolSpec::is_constant() const {
    return !mu_tilde && !sigma_tilde && !v_tilde && !vol_jumps.has_value();
}

void ModelSpec::validate() const {
    if (!std::isfinite(x0)) throw ArgumentError("x0 must be finite");
    if (!std::isfinite(vol.sigma0)) throw ArgumentError("sigma0 must be finite");
    if (!(rho_wv >= -1.0 && rho_wv <= 1.0)) throw ArgumentError("rho_wv must lie in [-1, 1]");
    if (!(vol.co_jump_probability >= 0.0 && vol.co_jump_probability <= 1.0))
        throw ArgumentError("co_jump_probability must lie in [0, 1]");
    if (vol.co_jump_probability > 0.0 && !vol.vol_jumps) throw ArgumentError("co-jumps need a vol_jumps size law");
    if (jumps) jumps->validate();
    if (vol.vol_jumps) vol.vol_jumps->validate();
    for (const auto& sj : scheduled_jumps) {
        if (!std::isfinite(sj.time) || !std::isfinite(sj.size)) throw ArgumentError("scheduled jump must be finite");
        if (sj.size == 0.0) throw ArgumentError("scheduled jump size must be non-zero");
    }
}

FineGridPath simulate_path(const ModelSpec& model, const TimeGrid& grid, const SeedStream& seed) {
    grid.validate();
    model.validate();
    for (const auto& sj : model.scheduled_jumps) {
        if (!(sj.time >= 0.0 && sj.time < grid.horizon)) throw ArgumentError("scheduled jump time outside [0, horizon)");
    }

    const std::size_t m = grid.m_fine;
    const double dn = grid.delta_n();
    const double dt = grid.fine_step();
    const double sqrt_dt = std::sqrt(dt);
    const bool const_vol = model.vol.is_constant();
    const bool has_drift = static_cast<bool>(model.drift);
    const double sigma_floor = model.vol.floor();
    const double rho = model.rho_wv;
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    FineGridPath path;
    path.grid = grid;
    path.x.assign(grid.fine_points(), 0.0);
    path.sigma.assign(grid.fine_points(), model.vol.sigma0);
    path.x[0] = model.x0;
    if (!const_vol) path.sigma[0] = std::max(model.vol.sigma0, sigma_floor);

    // Scheduled jumps sorted by time so each block can pick up its own.
    std::vector<ScheduledJump> scheduled = model.scheduled_jumps;
    std::sort(scheduled.begin(), scheduled.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    auto next_scheduled = scheduled.begin();

    std::vector<PendingJump> pending;
    std::vector<double> vol_jump_at;  // sigma jump size per fine step of the current block
    std::vector<double> dw(m), dv(m);

    for (std::size_t block = 0; block < grid.n_coarse; ++block) {
        const auto interval = static_cast<std::uint32_t>(block);
        const std::size_t base = block * m;
        const double block_start = static_cast<double>(block) * dn;

        ShockSource w_src(seed, interval, Channel::brownian);
        for (std::size_t k = 0; k < m; ++k) dw[k] = sqrt_dt * w_src.normal();
        if (!const_vol) {
            ShockSource v_src(seed, interval, Channel::vol_brownian);
            for (std::size_t k = 0; k < m; ++k) dv[k] = rho * dw[k] + rho_perp * sqrt_dt * v_src.normal();
        }

        auto snap = [&](double u) {
            const auto cell = static_cast<std::size_t>(std::ceil(u * static_cast<double>(m)));
            return base + std::clamp<std::size_t>(cell, 1, m);
        };

        pending.clear();
        if (model.jumps && model.jumps->intensity > 0.0) {
            ShockSource j_src(seed, interval, Channel::jumps);
            boost::random::poisson_distribution<int, double> count_law(model.jumps->intensity * dn);
            const int count = count_law(j_src.engine());
            for (int c = 0; c < count; ++c) {
                const double u = j_src.uniform();
                const double size = model.jumps->draw_size(j_src);
                pending.push_back({block_start + u * dn, u, size, snap(u)});
            }
        }
        const double block_end = static_cast<double>(block + 1) * dn;
        while (next_scheduled != scheduled.end() && (next_scheduled->time < block_end || block + 1 == grid.n_coarse)) {
            const double u = std::clamp((next_scheduled->time - block_start) / dn, 0.0, std::nextafter(1.0, 0.0));
            pending.push_back({next_scheduled->time, u, next_scheduled->size, snap(u)});
            ++next_scheduled;
        }
        std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

        vol_jump_at.assign(m + 1, 0.0);
        if (!const_vol && model.vol.vol_jumps) {
            ShockSource vj_src(seed, interval, Channel::vol_jumps);
            const auto& spec = *model.vol.vol_jumps;
            if (spec.intensity > 0.0) {
                boost::random::poisson_distribution<int, double> count_law(spec.intensity * dn);
                const int count = count_law(vj_src.engine());
                for (int c = 0; c < count; ++c) {
                    const double u = vj_src.uniform();
                    vol_jump_at[snap(u) - base] += spec.draw_size(vj_src);
                }
            }
            for (const auto& pj : pending) {
                if (vj_src.uniform() < model.vol.co_jump_probability) vol_jump_at[pj.fine_index - base] += spec.draw_size(vj_src);
            }
        }

        auto next_jump = pending.begin();
        for (std::size_t k = 1; k <= m; ++k) {
            const std::size_t g = base + k;
            const double t_left = static_cast<double>(g - 1) * dt;
            const double sigma_left = path.sigma[g - 1];
            if (!const_vol) {
                double s = sigma_left + eval_or_zero(model.vol.mu_tilde, t_left, sigma_left) * dt +
                           eval_or_zero(model.vol.sigma_tilde, t_left, sigma_left) * dw[k - 1] +
                           eval_or_zero(model.vol.v_tilde, t_left, sigma_left) * dv[k - 1] + vol_jump_at[k];
                s = std::max(s, sigma_floor);
                if (!std::isfinite(s)) throw IntegrationDiverged(g, "sigma is not finite");
                path.sigma[g] = s;
            }
            const double x_left = path.x[g - 1];
            double x = x_left + sigma_left * dw[k - 1];
            if (has_drift) x += model.drift(t_left, x_left) * dt;
            for (; next_jump != pending.end() && next_jump->fine_index == g; ++next_jump) {
                x += next_jump->size;
                path.jumps.push_back(JumpRecord{next_jump->time, next_jump->size, block + 1, next_jump->u, g, sigma_left,
                                                path.sigma[g]});
            }
            if (!std::isfinite(x)) throw IntegrationDiverged(g, "x is not finite");
            path.x[g] = x;
        }
    }
    return path;
}

void segment_extract_into(const FineGridPath& path, std::size_t i, double scale, std::span<double> out) {
    const auto& grid = path.grid;
    if (i < 1 || i > grid.n_coarse) {
        throw ArgumentError("segment index " + std::to_string(i) + " outside [1, " + std::to_string(grid.n_coarse) + "]");
    }
    if (out.size() != grid.m_fine + 1) throw ArgumentError("segment buffer must hold m_fine + 1 values");
    const std::size_t base = grid.coarse_to_fine(i - 1);
    const double anchor = path.x[base];
    out[0] = 0.0;
    for (std::size_t k = 1; k <= grid.m_fine; ++k) out[k] = scale * (path.x[base + k] - anchor);
}

Segment segment_extract(const FineGridPath& path, std::size_t i, double scale) {
    Segment seg;
    seg.values.resize(path.grid.m_fine + 1);
    segment_extract_into(path, i, scale, seg.values);
    return seg;
}

FineGridPath subsample_fine(const FineGridPath& path, std::size_t factor) {
    if (factor == 0 || path.grid.m_fine % factor != 0) throw ArgumentError("subsample factor must divide m_fine");
    FineGridPath out;
    out.grid = path.grid;
    out.grid.m_fine = path.grid.m_fine / factor;
    out.x.reserve(out.grid.fine_points());
    out.sigma.reserve(out.grid.fine_points());
    for (std::size_t k = 0; k < path.x.size(); k += factor) {
        out.x.push_back(path.x[k]);
        out.sigma.push_back(path.sigma[k]);
    }
    out.jumps = path.jumps;
    for (auto& j : out.jumps) j.fine_index = (j.fine_index + factor - 1) / factor;
    return out;
}

FineGridPath scale_path(const FineGridPath& path, double c) {
    FineGridPath out = path;
    for (double& v : out.x) v *= c;
    for (double& s : out.sigma) s *= std::abs(c);
    for (auto& j : out.jumps) {
        j.size *= c;
        j.sigma_left *= std::abs(c);
        j.sigma_right *= std::abs(c);
    }
    return out;
}

}  // namespace hfpath
