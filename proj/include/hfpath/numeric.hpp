#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hfpath {

// Deterministic pairwise summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased (n - 1 denominator), 0 when n < 2
    std::size_t count = 0;

    double std_error() const;
};

SampleMoments sample_moments(std::span<const double> values);

double sample_covariance(std::span<const double> a, std::span<const double> b);

double normal_cdf(double x);
double normal_quantile(double prob);

// Two-sided standard normal critical value for a confidence level, e.g. 0.95 -> 1.95996.
double normal_critical_value(double level);

// sup_x |F_n(x) - Phi(x)|.
double ks_distance_normal(std::vector<double> sample);

// sup_x |F_a(x) - F_b(x)| between two empirical CDFs.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_std_error = 0.0;
    std::size_t points = 0;
};

// Ordinary least squares of y on x with the classical slope standard error.
LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y);

// E|N(0,1)|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi).
double gaussian_abs_moment(double p);

}  // namespace hfpath
