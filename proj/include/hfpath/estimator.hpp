#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "hfpath/functional.hpp"
#include "hfpath/model.hpp"

namespace hfpath {

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
};

struct EstimateResult {
    double value = 0.0;
    double t = 0.0;        // horizon used
    double delta_n = 0.0;  // coarse step
    std::size_t n_used = 0;
    std::optional<double> avar;
    std::optional<ConfidenceInterval> ci;
    bool floored = false;  // bipower value was negative and clamped to 0
};

struct EstimatorOptions {
    // Horizon t <= grid horizon; NaN means the whole grid.
    double t = std::numeric_limits<double>::quiet_NaN();
    // Allow continuous-case statistics on paths with jumps.
    bool allow_jumps = false;
};

// floor(t / dn) with a small tolerance for t landing on a grid point.
std::size_t blocks_in_horizon(const TimeGrid& grid, double t);

// dn * sum_{i=1}^{floor(t/dn)} g(dn^{-1/2} d_i^n(X))
EstimateResult v_statistic(const FineGridPath& path, const FunctionalSpec& g, const EstimatorOptions& opts = {});

// dn * sum_{i=1}^{floor(t/dn)-1} { g_i^2 - g_i g_{i+1} }; negative values are floored at 0 and flagged.
EstimateResult bipower_variance(const FineGridPath& path, const FunctionalSpec& g, const EstimatorOptions& opts = {});

// dn^{-1/2} (stat - target) / sqrt(variance_stat)
double studentize(const EstimateResult& stat, double target, const EstimateResult& variance_stat);

// Attaches avar = variance_stat.value and the level-CI stat +- z * dn^{1/2} sqrt(avar).
// Throws DegenerateVariance when the variance estimate is not positive.
EstimateResult with_feasible_ci(EstimateResult stat, const EstimateResult& variance_stat, double level);

// sum over blocks of (max - min of the fine samples)^p, no dn prefactor.
EstimateResult realized_range(const FineGridPath& path, double p, const EstimatorOptions& opts = {});

// sum_{i=2}^{floor(t/dn)} (Xbar_i - Xbar_{i-1})^2 with trapezoid block averages.
EstimateResult local_average_qv(const FineGridPath& path, const EstimatorOptions& opts = {});

}  // namespace hfpath
