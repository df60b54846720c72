#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hfpath/asymptotics.hpp"
#include "hfpath/error.hpp"
#include "hfpath/estimator.hpp"
#include "hfpath/io.hpp"
#include "hfpath/numeric.hpp"
#include "hfpath/parallel.hpp"

using namespace hfpath;

namespace {

FineGridPath fixture() {
    return read_path_csv(HFPATH_FIXTURE_DIR "/five_block.csv", HFPATH_FIXTURE_DIR "/five_block_jumps.csv", 5);
}

ModelSpec unit_vol() {
    ModelSpec m;
    m.vol.sigma0 = 1.0;
    return m;
}

const ConstantsTable& table() {
    static const ConstantsTable t = ConstantsTable::load(default_constants_path());
    return t;
}

// Sample mean of f(path) over `reps` unit-vol paths.
template <class F>
SampleMoments mc_mean(const TimeGrid& grid, std::size_t reps, std::uint64_t seed, F f) {
    std::vector<double> v(reps);
    parallel_for(reps, 0, [&](std::size_t r) { v[r] = f(simulate_path(unit_vol(), grid, {seed, r})); });
    return sample_moments(v);
}

// --- plain-loop oracles over the raw arrays -----------------------------

double oracle_block(const std::vector<double>& x, std::size_t i, std::size_t m, double scale, int kind, double p) {
    const std::size_t a = (i - 1) * m;
    if (kind == 0) return std::pow(std::abs(scale * (x[a + m] - x[a])), p);
    if (kind == 1) {
        double s = 0.0;
        for (std::size_t k = 0; k <= m; ++k) {
            const double w = (k == 0 || k == m) ? 0.5 : 1.0;
            s += w * scale * (x[a + k] - x[a]);
        }
        return std::pow(std::abs(s / static_cast<double>(m)), p);
    }
    double hi = x[a], lo = x[a];
    for (std::size_t k = 0; k <= m; ++k) {
        hi = std::max(hi, x[a + k]);
        lo = std::min(lo, x[a + k]);
    }
    return std::pow(scale * (hi - lo), p);
}

}  // namespace

TEST_CASE("fixture statistics equal direct summation") {
    const auto path = fixture();
    const auto& x = path.x;
    const double dn = 0.2;
    const double scale = 1.0 / std::sqrt(dn);
    const std::size_t n = 5, m = 4;
    const std::vector<FunctionalSpec> gs{FunctionalSpec::terminal_power(2.0), FunctionalSpec::integral_power(1.5),
                                         FunctionalSpec::range_power(2.0)};
    for (int kind = 0; kind < 3; ++kind) {
        const auto& g = gs[static_cast<std::size_t>(kind)];
        double v = 0.0, bv = 0.0;
        for (std::size_t i = 1; i <= n; ++i) v += oracle_block(x, i, m, scale, kind, g.p);
        for (std::size_t i = 1; i < n; ++i) {
            const double a = oracle_block(x, i, m, scale, kind, g.p);
            const double b = oracle_block(x, i + 1, m, scale, kind, g.p);
            bv += a * a - a * b;
        }
        CHECK(v_statistic(path, g).value == doctest::Approx(dn * v).epsilon(1e-12));
        CHECK(bipower_variance(path, g).value == doctest::Approx(std::max(0.0, dn * bv)).epsilon(1e-12));
    }
    for (double p : {0.5, 2.0, 3.0}) {
        double r = 0.0;
        for (std::size_t i = 1; i <= n; ++i) r += oracle_block(x, i, m, 1.0, 2, p);
        CHECK(realized_range(path, p).value == doctest::Approx(r).epsilon(1e-12));
    }
    std::vector<double> avg;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= m; ++k) s += ((k == 0 || k == m) ? 0.5 : 1.0) * x[i * m + k];
        avg.push_back(s / m);
    }
    double q = 0.0;
    for (std::size_t i = 1; i < n; ++i) q += (avg[i] - avg[i - 1]) * (avg[i] - avg[i - 1]);
    CHECK(local_average_qv(path).value == doctest::Approx(q).epsilon(1e-12));
    CHECK(bipower_variance(path, gs[0]).n_used == 4);
    CHECK(v_statistic(path, gs[0]).n_used == 5);
}

TEST_CASE("terminal power equals scaled power variation") {
    const auto path = simulate_path(unit_vol(), TimeGrid{1.0, 64, 8}, {1, 0});
    const double dn = 1.0 / 64.0;
    for (double p : {1.0, 2.0, 3.0, 4.5}) {
        std::vector<double> terms;
        for (std::size_t i = 1; i <= 64; ++i) terms.push_back(std::pow(std::abs(path.coarse_value(i) - path.coarse_value(i - 1)), p));
        const double expected = std::pow(dn, 1.0 - p / 2.0) * pairwise_sum(terms);
        CHECK(v_statistic(path, FunctionalSpec::terminal_power(p)).value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("zero and deterministic paths") {
    ModelSpec zero;
    zero.x0 = 3.0;
    zero.vol.sigma0 = 0.0;
    const TimeGrid g{1.0, 50, 4};
    const auto flat = simulate_path(zero, g, {1, 0});
    for (const auto& gs : {FunctionalSpec::terminal_power(2), FunctionalSpec::integral_power(2), FunctionalSpec::range_power(2)}) {
        CHECK(v_statistic(flat, gs).value == 0.0);
        CHECK(bipower_variance(flat, gs).value == 0.0);
    }
    CHECK(local_average_qv(flat).value == 0.0);

    ModelSpec line = zero;
    line.x0 = 0.0;
    line.drift = [](double, double) { return 1.0; };
    const auto lin = simulate_path(line, g, {1, 0});
    const double dn = g.delta_n();
    CHECK(realized_range(lin, 2.0).value == doctest::Approx(1.0 * dn).epsilon(1e-10));
    CHECK(local_average_qv(lin).value == doctest::Approx(49.0 * dn * dn).epsilon(1e-10));
}

TEST_CASE("pure-jump realized range is the sum of jump powers") {
    ModelSpec m;
    m.vol.sigma0 = 0.0;
    m.scheduled_jumps = {{0.31, 1.0}, {0.72, -2.0}};
    const auto path = simulate_path(m, TimeGrid{1.0, 100, 5}, {1, 0});
    CHECK(realized_range(path, 3.0).value == doctest::Approx(9.0).epsilon(1e-14));
    CHECK(realized_range(path, 2.0).value == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("misuse and argument errors") {
    ModelSpec m = unit_vol();
    m.scheduled_jumps = {{0.5, 1.0}};
    const auto jumpy = simulate_path(m, TimeGrid{1.0, 10, 4}, {1, 0});
    CHECK_THROWS_AS(v_statistic(jumpy, FunctionalSpec::range_power(2)), MisuseError);
    CHECK_NOTHROW(v_statistic(jumpy, FunctionalSpec::range_power(2), EstimatorOptions{NAN, true}));
    const auto path = simulate_path(unit_vol(), TimeGrid{1.0, 10, 4}, {1, 0});
    const auto odd = FunctionalSpec::custom("x1", [](std::span<const double> s) { return s.back(); }, false);
    CHECK_THROWS_AS(bipower_variance(path, odd), MisuseError);
    CHECK_THROWS_AS(bipower_variance(simulate_path(unit_vol(), TimeGrid{1.0, 1, 4}, {1, 0}), FunctionalSpec::range_power(2)),
                    ArgumentError);
    CHECK_THROWS_AS(realized_range(path, 0.0), ArgumentError);
    CHECK_THROWS_AS(local_average_qv(simulate_path(unit_vol(), TimeGrid{1.0, 10, 1}, {1, 0})), ArgumentError);
    EstimateResult zero_var;
    CHECK_THROWS_AS(studentize(v_statistic(path, FunctionalSpec::range_power(2)), 1.0, zero_var), DegenerateVariance);
}

TEST_CASE("studentize arithmetic") {
    EstimateResult stat;
    stat.value = 1.02;
    stat.delta_n = 0.01;
    EstimateResult var;
    var.value = 4.0;
    CHECK(studentize(stat, 1.0, var) == doctest::Approx(0.1));
    CHECK(studentize(stat, 1.02, var) == 0.0);
    const auto ci = with_feasible_ci(stat, var, 0.95);
    REQUIRE(ci.ci);
    CHECK(ci.ci->hi - ci.ci->lo == doctest::Approx(2.0 * 1.959963984540054 * 0.2));
    CHECK(*ci.avar == 4.0);
}

TEST_CASE("horizon truncation drops the partial block") {
    const auto path = simulate_path(unit_vol(), TimeGrid{1.0, 10, 4}, {1, 0});
    const auto full = v_statistic(path, FunctionalSpec::terminal_power(2));
    const auto part = v_statistic(path, FunctionalSpec::terminal_power(2), EstimatorOptions{0.55, false});
    CHECK(part.n_used == 5);
    CHECK(full.n_used == 10);
    CHECK(bipower_variance(path, FunctionalSpec::terminal_power(2), EstimatorOptions{0.55, false}).n_used == 4);
    CHECK(v_statistic(path, FunctionalSpec::terminal_power(2), EstimatorOptions{0.5, false}).n_used == 5);
}

TEST_CASE("scaling and range dominance hold pathwise") {
    ModelSpec m = unit_vol();
    m.vol.sigma_tilde = [](double, double) { return 0.3; };
    m.drift = [](double, double x) { return -x; };
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto path = simulate_path(m, TimeGrid{1.0, 40, 6}, {7, r});
        for (double p : {0.5, 1.0, 2.0, 3.0}) {
            for (double c : {0.5, 3.0}) {
                const auto scaled = scale_path(path, c);
                for (const auto& g :
                     {FunctionalSpec::terminal_power(p), FunctionalSpec::integral_power(p), FunctionalSpec::range_power(p)}) {
                    CHECK(v_statistic(scaled, g).value == doctest::Approx(std::pow(c, p) * v_statistic(path, g).value).epsilon(1e-12));
                }
            }
            double pv = 0.0;
            for (std::size_t i = 1; i <= 40; ++i) pv += std::pow(std::abs(path.coarse_value(i) - path.coarse_value(i - 1)), p);
            CHECK(realized_range(path, p).value >= pv);
        }
    }
}

TEST_CASE("beta approximation: exact without drift, shrinking with drift") {
    const double sigma = 0.8;
    auto model = [&](double mu) {
        ModelSpec m;
        m.vol.sigma0 = sigma;
        if (mu != 0.0) m.drift = [mu](double, double) { return mu; };
        return m;
    };
    const auto g = FunctionalSpec::range_power(2);
    // beta_i = dn^{-1/2} sigma d_i(W) comes from the unit-vol path on the same shocks
    for (std::size_t n : {64, 256}) {
        const TimeGrid grid{1.0, n, 8};
        const auto x = simulate_path(model(0.0), grid, {3, 0});
        const auto w = simulate_path(unit_vol(), grid, {3, 0});
        CHECK(v_statistic(x, g).value == doctest::Approx(v_statistic(scale_path(w, sigma), g).value).epsilon(1e-12));
    }
    std::vector<double> rms;
    for (std::size_t n : {64, 256, 1024}) {
        const TimeGrid grid{1.0, n, 8};
        std::vector<double> sq;
        for (std::uint64_t r = 0; r < 200; ++r) {
            const double a = v_statistic(simulate_path(model(2.0), grid, {4, r}), g).value;
            const double b = v_statistic(scale_path(simulate_path(unit_vol(), grid, {4, r}), sigma), g).value;
            sq.push_back((a - b) * (a - b));
        }
        rms.push_back(std::sqrt(pairwise_sum(sq) / sq.size()));
    }
    CHECK(rms[1] < rms[0]);
    CHECK(rms[2] < rms[1]);
    // O(dn^{1/2}): quadrupling n roughly halves the difference
    CHECK(rms[2] / rms[0] == doctest::Approx(0.25).epsilon(0.3));
}

TEST_CASE("Monte Carlo means of the statistics") {
    const std::size_t reps = 10000;
    SUBCASE("terminal power two has mean one") {
        const auto s = mc_mean(TimeGrid{1.0, 100, 4}, reps, 31,
                               [](const FineGridPath& p) { return v_statistic(p, FunctionalSpec::terminal_power(2)).value; });
        CHECK(std::abs(s.mean - 1.0) < 3.0 * s.std_error());
    }
    SUBCASE("range power two matches the grid constant") {
        const auto c = table().grid(3, 2.0, 50);
        REQUIRE(c);
        const auto s = mc_mean(TimeGrid{1.0, 100, 50}, reps, 32,
                               [](const FineGridPath& p) { return realized_range(p, 2.0).value; });
        CHECK(std::abs(s.mean - c->value) < 3.0 * std::hypot(s.std_error(), c->std_error));
        // the discrete sup sits below the continuum constant 4 ln 2
        CHECK(s.mean < 4.0 * std::log(2.0));
    }
    SUBCASE("bipower of terminal power two has mean two") {
        const auto s = mc_mean(TimeGrid{1.0, 100, 4}, reps, 33,
                               [](const FineGridPath& p) { return bipower_variance(p, FunctionalSpec::terminal_power(2)).value; });
        CHECK(std::abs(s.mean - 2.0 * 99.0 / 100.0) < 3.0 * s.std_error());
    }
    SUBCASE("bipower of range power two matches lambda34 - lambda32^2") {
        const auto l2 = table().grid(3, 2.0, 50), l4 = table().grid(3, 4.0, 50);
        REQUIRE(l2);
        REQUIRE(l4);
        const auto s = mc_mean(TimeGrid{1.0, 100, 50}, reps, 34,
                               [](const FineGridPath& p) { return bipower_variance(p, FunctionalSpec::range_power(2)).value; });
        const double target = (l4->value - l2->value * l2->value) * 99.0 / 100.0;
        CHECK(std::abs(s.mean - target) < 3.0 * s.std_error() + 0.01 * target);
        CHECK(target / (l2->value * l2->value) == doctest::Approx(0.4).epsilon(0.15));
    }
    SUBCASE("local averages estimate two thirds of the quadratic variation") {
        const auto s = mc_mean(TimeGrid{1.0, 1000, 10}, reps, 35,
                               [](const FineGridPath& p) { return local_average_qv(p).value; });
        CHECK(std::abs(s.mean - 2.0 / 3.0) < 0.01 * 2.0 / 3.0);
    }
}

TEST_CASE("studentized range statistic is close to standard normal") {
    const TimeGrid grid{1.0, 1000, 50};
    const auto c = table().grid(3, 2.0, 50);
    REQUIRE(c);
    const auto g = FunctionalSpec::range_power(2);
    std::vector<double> z(2000);
    parallel_for(z.size(), 0, [&](std::size_t r) {
        const auto path = simulate_path(unit_vol(), grid, {41, r});
        z[r] = studentize(v_statistic(path, g), c->value, bipower_variance(path, g));
    });
    CHECK(ks_distance_normal(z) < 0.05);
}
