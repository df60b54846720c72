#include "hfpath/functional.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hfpath/error.hpp"
#include "hfpath/rng.hpp"

namespace hfpath {
namespace {

void require_exponent(double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ArgumentError("functional exponent p must be positive, got " + std::to_string(p));
}

void require_finite(std::span<const double> x) {
    if (x.empty()) throw ArgumentError("segment is empty");
    for (double v : x) {
        if (!std::isfinite(v)) throw ArgumentError("segment contains a non-finite value");
    }
}

// d/du |u|^p = p |u|^{p-1} sign(u)
double abs_power_derivative(double u, double p) {
    if (u == 0.0) return 0.0;
    return p * std::pow(std::abs(u), p - 1.0) * (u > 0.0 ? 1.0 : -1.0);
}

}  // namespace

FunctionalSpec FunctionalSpec::terminal_power(double p) {
    require_exponent(p);
    return FunctionalSpec{FunctionalKind::terminal_power, p, true, {}, {}, {}};
}

FunctionalSpec FunctionalSpec::integral_power(double p) {
    require_exponent(p);
    return FunctionalSpec{FunctionalKind::integral_power, p, true, {}, {}, {}};
}

FunctionalSpec FunctionalSpec::range_power(double p) {
    require_exponent(p);
    return FunctionalSpec{FunctionalKind::range_power, p, true, {}, {}, {}};
}

FunctionalSpec FunctionalSpec::custom(std::string label, SegmentFn evaluator, bool is_even, DirectionalFn derivative) {
    if (!evaluator) throw ArgumentError("custom functional needs an evaluator");
    return FunctionalSpec{FunctionalKind::custom, 0.0, is_even, std::move(evaluator), std::move(derivative),
                          std::move(label)};
}

bool FunctionalSpec::has_derivative() const {
    if (kind == FunctionalKind::custom) return static_cast<bool>(derivative);
    return p > 1.0;
}

std::string FunctionalSpec::name() const {
    if (kind == FunctionalKind::custom) return label.empty() ? "custom" : label;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(%g)", to_string(kind).c_str(), p);
    return buf;
}

FunctionalKind parse_functional_kind(const std::string& text) {
    if (text == "terminal_power") return FunctionalKind::terminal_power;
    if (text == "integral_power") return FunctionalKind::integral_power;
    if (text == "range_power") return FunctionalKind::range_power;
    throw ArgumentError("unknown functional kind '" + text + "'");
}

std::string to_string(FunctionalKind kind) {
    switch (kind) {
        case FunctionalKind::terminal_power: return "terminal_power";
        case FunctionalKind::integral_power: return "integral_power";
        case FunctionalKind::range_power: return "range_power";
        case FunctionalKind::custom: return "custom";
    }
    return "custom";
}

double trapezoid_mean(std::span<const double> x) {
    if (x.size() < 2) throw ArgumentError("trapezoid rule needs at least two samples");
    const std::size_t m = x.size() - 1;
    double inner = 0.0;
    for (std::size_t k = 1; k < m; ++k) inner += x[k];
    return (inner + 0.5 * (x.front() + x.back())) / static_cast<double>(m);
}

double eval(const FunctionalSpec& g, std::span<const double> x) {
    require_finite(x);
    switch (g.kind) {
        case FunctionalKind::terminal_power:
            require_exponent(g.p);
            return std::pow(std::abs(x.back()), g.p);
        case FunctionalKind::integral_power:
            require_exponent(g.p);
            return std::pow(std::abs(trapezoid_mean(x)), g.p);
        case FunctionalKind::range_power: {
            require_exponent(g.p);
            const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
            return std::pow(*hi - *lo, g.p);
        }
        case FunctionalKind::custom:
            return g.evaluator(x);
    }
    return 0.0;
}

double directional_derivative(const FunctionalSpec& g, std::span<const double> x, std::span<const double> y) {
    require_finite(x);
    require_finite(y);
    if (x.size() != y.size()) throw ArgumentError("directional_derivative: x and y must have equal length");
    switch (g.kind) {
        case FunctionalKind::terminal_power:
            if (g.p <= 1.0) throw UnsupportedDerivative("terminal_power derivative needs p > 1");
            return abs_power_derivative(x.back(), g.p) * y.back();
        case FunctionalKind::integral_power:
            if (g.p <= 1.0) throw UnsupportedDerivative("integral_power derivative needs p > 1");
            return abs_power_derivative(trapezoid_mean(x), g.p) * trapezoid_mean(y);
        case FunctionalKind::range_power: {
            if (g.p <= 1.0) throw UnsupportedDerivative("range_power derivative needs p > 1");
            // first argmax / argmin
            const auto hi = std::max_element(x.begin(), x.end());
            const auto lo = std::min_element(x.begin(), x.end());
            const double range = *hi - *lo;
            const auto i_max = static_cast<std::size_t>(hi - x.begin());
            const auto i_min = static_cast<std::size_t>(lo - x.begin());
            return g.p * std::pow(range, g.p - 1.0) * (y[i_max] - y[i_min]);
        }
        case FunctionalKind::custom:
            if (!g.derivative) throw UnsupportedDerivative("custom functional '" + g.name() + "' has no derivative");
            return g.derivative(x, y);
    }
    return 0.0;
}

ParityReport check_even(const FunctionalSpec& g, std::size_t trials, std::uint64_t seed, std::size_t m, double tol) {
    if (trials == 0) throw ArgumentError("check_even: trials must be at least 1");
    if (m == 0) throw ArgumentError("check_even: m must be at least 1");
    ParityReport report;
    report.trials = trials;
    std::vector<double> x(m + 1), neg(m + 1);
    const double step = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t t = 0; t < trials; ++t) {
        ShockSource src(SeedStream{seed, t}, 0, Channel::auxiliary);
        x[0] = 0.0;
        for (std::size_t k = 1; k <= m; ++k) x[k] = x[k - 1] + step * src.normal();
        std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
        const double gx = eval(g, x);
        const double violation = std::abs(gx - eval(g, neg));
        report.worst_violation = std::max(report.worst_violation, violation);
        if (violation > tol * (1.0 + std::abs(gx))) report.passed = false;
    }
    return report;
}

}  // namespace hfpath
