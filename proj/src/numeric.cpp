#include "hfpath/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "hfpath/error.hpp"

namespace hfpath {

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kLeaf = 32;
    if (values.size() <= kLeaf) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double SampleMoments::std_error() const {
    return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
}

SampleMoments sample_moments(std::span<const double> values) {
    SampleMoments m;
    m.count = values.size();
    if (values.empty()) return m;
    m.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() < 2) return m;
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [&](double v) {
        const double d = v - m.mean;
        return d * d;
    });
    m.variance = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    return m;
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArgumentError("sample_covariance: length mismatch");
    if (a.size() < 2) return 0.0;
    const double ma = pairwise_sum(a) / static_cast<double>(a.size());
    const double mb = pairwise_sum(b) / static_cast<double>(b.size());
    std::vector<double> prod(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
    return pairwise_sum(prod) / static_cast<double>(a.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw ArgumentError("normal_quantile: probability must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>{}, prob);
}

double normal_critical_value(double level) {
    if (!(level > 0.0 && level < 1.0)) throw ArgumentError("confidence level must lie in (0, 1)");
    return normal_quantile(0.5 + 0.5 * level);
}

double ks_distance_normal(std::vector<double> sample) {
    if (sample.empty()) throw ArgumentError("ks_distance_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = normal_cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("ks_distance_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("ordinary_least_squares: length mismatch");
    if (x.size() < 2) throw ArgumentError("ordinary_least_squares: need at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = pairwise_sum(x) / n;
    const double my = pairwise_sum(y) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw ArgumentError("ordinary_least_squares: x values are all equal");
    LinearFit fit;
    fit.points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_std_error = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

double gaussian_abs_moment(double p) {
    if (!(p > -1.0)) throw ArgumentError("gaussian_abs_moment: p must exceed -1");
    // integer orders: (p-1)!!, times sqrt(2/pi) when p is odd
    if (p == std::floor(p) && p <= 40.0) {
        double v = 1.0;
        for (int k = static_cast<int>(p) - 1; k > 1; k -= 2) v *= k;
        return static_cast<int>(p) % 2 == 0 ? v : v * std::sqrt(2.0 / std::numbers::pi);
    }
    return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0))) / std::sqrt(std::numbers::pi);
}

}  // namespace hfpath
