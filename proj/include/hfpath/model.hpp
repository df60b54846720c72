#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "hfpath/functional.hpp"
#include "hfpath/rng.hpp"

namespace hfpath {

// Coarse observation grid with m_fine Euler substeps per coarse interval.
// Coarse point i sits at fine index i * m_fine.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t n_coarse = 1;
    std::size_t m_fine = 1;

    double delta_n() const { return horizon / static_cast<double>(n_coarse); }
    double fine_step() const { return delta_n() / static_cast<double>(m_fine); }
    std::size_t fine_points() const { return n_coarse * m_fine + 1; }
    std::size_t coarse_to_fine(std::size_t i) const { return i * m_fine; }
    double time_at(std::size_t fine_index) const { return static_cast<double>(fine_index) * fine_step(); }

    // Throws ArgumentError unless horizon > 0, n_coarse >= 1, m_fine >= 1.
    void validate() const;
};

// Coefficient a(t, state). An empty function means identically zero.
using CoefficientFn = std::function<double(double t, double state)>;

struct TwoPointLaw {
    double a = 1.0;
    double b = -1.0;
    double prob_a = 0.5;
};

// N(mean, sd) conditioned on |J| >= floor (rejection sampling).
struct TruncatedGaussianLaw {
    double mean = 0.0;
    double sd = 1.0;
    double floor = 0.1;
};

// |J| ~ U[lo, hi] with an independent fair sign.
struct UniformSignedLaw {
    double lo = 0.5;
    double hi = 1.0;
};

using JumpSizeLaw = std::variant<TwoPointLaw, TruncatedGaussianLaw, UniformSignedLaw>;

struct JumpSpec {
    double intensity = 0.0;  // Poisson rate per unit time
    JumpSizeLaw size_law = TwoPointLaw{};

    // Lower bound eps_J on |J| implied by the size law.
    double min_abs_size() const;
    double draw_size(ShockSource& source) const;
    void validate() const;
};

struct VolSpec {
    double sigma0 = 1.0;
    CoefficientFn mu_tilde;     // drift of sigma
    CoefficientFn sigma_tilde;  // loading on W
    CoefficientFn v_tilde;      // loading on V
    std::optional<JumpSpec> vol_jumps;
    // Probability that a jump of X carries a simultaneous sigma jump drawn from vol_jumps.
    double co_jump_probability = 0.0;
    // Clamp level; negative means "use 1e-6 * |sigma0|".
    double positivity_floor = -1.0;

    double floor() const;
    bool is_constant() const;
};

// A jump imposed deterministically at a given time (used to condition on a jump scenario).
struct ScheduledJump {
    double time = 0.0;
    double size = 0.0;
};

struct ModelSpec {
    double x0 = 0.0;
    CoefficientFn drift;  // mu(t, x)
    VolSpec vol;
    std::optional<JumpSpec> jumps;
    std::vector<ScheduledJump> scheduled_jumps;
    double rho_wv = 0.0;  // correlation of W and V

    void validate() const;
};

struct JumpRecord {
    double time = 0.0;            // exact (pre-snap) jump time
    double size = 0.0;
    std::size_t coarse_index = 0;  // 1-based block containing the jump
    double kappa = 0.0;            // exact within-block fraction, in [0, 1)
    std::size_t fine_index = 0;    // first fine point carrying the jump
    double sigma_left = 0.0;
    double sigma_right = 0.0;
};

// Simulated trajectory; immutable once returned by simulate_path.
struct FineGridPath {
    TimeGrid grid;
    std::vector<double> x;
    std::vector<double> sigma;
    std::vector<JumpRecord> jumps;  // sorted by time

    bool has_jumps() const { return !jumps.empty(); }
    double coarse_value(std::size_t i) const { return x[grid.coarse_to_fine(i)]; }
};

// Euler-Maruyama on the fine grid: sigma is advanced first (W, V increments),
// then X with the left-point sigma; jumps are snapped to the first fine point
// at or after their exact time (never onto the block's left endpoint).
// Pure function of (model, grid, seed).
FineGridPath simulate_path(const ModelSpec& model, const TimeGrid& grid, const SeedStream& seed);

// scale * (X_{(i-1+k/m) dn} - X_{(i-1) dn}), k = 0..m, for 1-based block i.
Segment segment_extract(const FineGridPath& path, std::size_t i, double scale);

// Allocation-free variant writing m_fine + 1 values into `out`.
void segment_extract_into(const FineGridPath& path, std::size_t i, double scale, std::span<double> out);

// Keeps every `factor`-th fine point (m_fine must be divisible by factor).
FineGridPath subsample_fine(const FineGridPath& path, std::size_t factor);

// Path with x replaced by c * x (sigma scaled by |c|); jumps scaled accordingly.
FineGridPath scale_path(const FineGridPath& path, double c);

}  // namespace hfpath
