#pragma once

#include <cstdint>
#include <string>

#include "hfpath/experiment.hpp"
#include "hfpath/model.hpp"

namespace hfpath {

// A parsed INI config. Sections and keys:
//
//   [model]       x0, drift_a, drift_b (mu = a + b x), rho_wv
//   [vol]         sigma0, mu_a, mu_b, sigma_a, sigma_b, v_a, v_b (each coefficient a + b sigma),
//                 floor, co_jump_probability
//   [jumps]       intensity, law = two_point | gaussian_truncated | uniform_signed,
//   [vol_jumps]   a, b, prob_a | mean, sd, floor | lo, hi
//   [scenario]    jumps = time:size, time:size ... ; jitter = true | false
//   [grid]        horizon, n, m
//   [functional]  kind, p           (or list = kind:p, kind:p ...)
//   [experiment]  kind, ladder = 64, 256, ..., m, replications, seed, level, threads,
//                 ranges = p, p ..., limit_reps, limit_m, constant_reps, lln_slack,
//                 pmin, pmax, step, lambda_m, lambda_reps, constants
//
// Unknown sections or keys raise ConfigError naming the key.
struct RunConfig {
    ModelSpec model;
    TimeGrid grid;
    ExperimentConfig experiment;
    std::string source_text;  // raw file contents (empty when built from defaults)

    std::uint64_t hash() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

}  // namespace hfpath
