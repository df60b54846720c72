#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hfpath {

// A function on [0, 1] sampled at s = k/m, k = 0..m.
struct Segment {
    std::vector<double> values;

    std::size_t m() const { return values.empty() ? 0 : values.size() - 1; }
    std::span<const double> view() const { return values; }
};

enum class FunctionalKind { terminal_power, integral_power, range_power, custom };

using SegmentFn = std::function<double(std::span<const double> x)>;
using DirectionalFn = std::function<double(std::span<const double> x, std::span<const double> y)>;

// A path functional g on discretized C([0,1]).
//
// Built-ins are |x(1)|^p, |int_0^1 x|^p (trapezoid) and (max x - min x)^p;
// all three are even and homogeneous of degree p.
struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::terminal_power;
    double p = 2.0;
    bool is_even = true;
    SegmentFn evaluator;      // custom only
    DirectionalFn derivative;  // custom only; g'_y(x)
    std::string label;

    static FunctionalSpec terminal_power(double p);
    static FunctionalSpec integral_power(double p);
    static FunctionalSpec range_power(double p);
    static FunctionalSpec custom(std::string label, SegmentFn evaluator, bool is_even,
                                 DirectionalFn derivative = {});

    bool is_builtin() const { return kind != FunctionalKind::custom; }
    bool has_derivative() const;
    std::string name() const;
};

// Parses "terminal_power" / "integral_power" / "range_power".
FunctionalKind parse_functional_kind(const std::string& text);
std::string to_string(FunctionalKind kind);

double eval(const FunctionalSpec& g, std::span<const double> x);
inline double eval(const FunctionalSpec& g, const Segment& x) { return eval(g, x.view()); }

// Gateaux derivative g'_y(x). Range uses the first argmax/argmin sample.
double directional_derivative(const FunctionalSpec& g, std::span<const double> x, std::span<const double> y);
inline double directional_derivative(const FunctionalSpec& g, const Segment& x, const Segment& y) {
    return directional_derivative(g, x.view(), y.view());
}

struct ParityReport {
    bool passed = true;
    double worst_violation = 0.0;
    std::size_t trials = 0;
};

// Samples random-walk segments and checks |g(x) - g(-x)| <= tol (1 + |g(x)|).
ParityReport check_even(const FunctionalSpec& g, std::size_t trials, std::uint64_t seed, std::size_t m = 32,
                        double tol = 1e-12);

// Trapezoid rule for int_0^1 x(s) ds on equally spaced samples.
double trapezoid_mean(std::span<const double> x);

}  // namespace hfpath
