#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "hfpath/asymptotics.hpp"
#include "hfpath/error.hpp"
#include "hfpath/numeric.hpp"

using namespace hfpath;

namespace {

const ConstantsTable& table() {
    static const ConstantsTable t = ConstantsTable::load(default_constants_path());
    return t;
}

std::vector<double> values(const std::vector<LimitLawSample>& s) {
    std::vector<double> v;
    for (const auto& x : s) v.push_back(x.value);
    return v;
}

bool within(const RhoEstimate& e, double target, double k = 3.0) { return std::abs(e.value - target) <= k * e.std_error; }

}  // namespace

TEST_CASE("closed-form constants") {
    CHECK(lambda_moment(1, 2.0).value == 1.0);
    CHECK(lambda_moment(1, 4.0).value == 3.0);
    CHECK(lambda_moment(2, 2.0).value == 1.0 / 3.0);
    CHECK(lambda_efficiency(1, 2.0).value == 2.0);
    CHECK(lambda_efficiency(2, 2.0).value == 2.0);
    for (double p : {1.0, 2.0, 3.0, 4.0}) {
        CHECK(lambda_moment(1, p).value == doctest::Approx(std::pow(3.0, p / 2.0) * lambda_moment(2, p).value).epsilon(1e-14));
    }
    CHECK_THROWS_AS(lambda_moment(3, 2.0), UnsupportedError);
    CHECK_THROWS_AS(lambda_moment(4, 2.0), ArgumentError);
    CHECK_THROWS_AS(lambda_moment(1, 0.0), ArgumentError);
    // the m-point trapezoid of W has variance 1/3 - 1/(12 m^2)
    CHECK(lambda_grid_closed(2, 2.0, 4) == doctest::Approx(1.0 / 3.0 - 1.0 / 192.0).epsilon(1e-14));
}

TEST_CASE("Feller's range moments") {
    CHECK(range_moment_feller(1.0) == doctest::Approx(2.0 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-12));
    CHECK(range_moment_feller(2.0) == doctest::Approx(4.0 * std::numbers::ln2).epsilon(1e-12));
    // 12 * eta(3) = 9 zeta(3)
    CHECK(range_moment_feller(4.0) == doctest::Approx(9.0 * 1.2020569031595942).epsilon(1e-12));
}

TEST_CASE("checked-in range constants agree with Feller's range law") {
    const auto& t = table();
    std::size_t checked = 0;
    for (const auto& r : t.records()) {
        if (r.family != 3 || r.method != "mc_richardson") continue;
        CHECK(r.m == 2000);
        CHECK(r.reps == 1000000);
        CHECK(std::abs(r.value - range_moment_feller(r.p)) < 3.0 * r.std_error);
        ++checked;
    }
    CHECK(checked >= 15);
    const auto c = t.continuum(3, 2.0);
    REQUIRE(c);
    CHECK(c->value == doctest::Approx(2.7726).epsilon(0.002));
    const auto closed = t.continuum(1, 2.0);
    REQUIRE(closed);
    CHECK(closed->value == 1.0);
}

TEST_CASE("rho_mc examples") {
    CHECK(within(rho_mc(1.0, FunctionalSpec::terminal_power(2), 16, 40000, 1), 1.0));
    CHECK(within(rho_mc(2.0, FunctionalSpec::terminal_power(2), 16, 40000, 2), 4.0));
    // range of W: Feller's E R = 2 sqrt(2/pi), minus the grid bias of the 400-step sup
    const auto e = rho_mc(1.0, FunctionalSpec::range_power(1), 400, 40000, 3);
    const auto grid = table().grid(3, 1.0, 50);
    CHECK(e.value < range_moment_feller(1.0));
    CHECK(e.value == doctest::Approx(range_moment_feller(1.0)).epsilon(0.05));
    if (grid) CHECK(e.value > grid->value);
    CHECK_THROWS_AS(rho_mc(1.0, FunctionalSpec::terminal_power(2), 16, 1, 1), ArgumentError);
}

TEST_CASE("rho_mc scaling under common random numbers") {
    for (const auto& g : {FunctionalSpec::terminal_power(1.5), FunctionalSpec::range_power(2), FunctionalSpec::integral_power(3)}) {
        const auto base = rho_mc(1.0, g, 32, 5000, 9);
        for (double z : {0.5, 2.0}) {
            CHECK(rho_mc(z, g, 32, 5000, 9).value == doctest::Approx(std::pow(z, g.p) * base.value).epsilon(1e-12));
        }
    }
}

TEST_CASE("even functionals annihilate rho1, rho2, rho3") {
    for (const auto& g : {FunctionalSpec::terminal_power(2), FunctionalSpec::integral_power(2), FunctionalSpec::range_power(2)}) {
        for (double z : {0.5, 1.0, 2.0}) {
            const auto r = rho123_mc(z, g, 20000, 32, 5);
            CHECK(within(r.rho1, 0.0, 4.0));
            REQUIRE(r.rho2);
            REQUIRE(r.rho3);
            REQUIRE(r.rho3_alternate);
            CHECK(within(*r.rho2, 0.0, 4.0));
            CHECK(within(*r.rho3, 0.0, 4.0));
            CHECK(within(*r.rho3_alternate, 0.0, 4.0));
        }
    }
}

TEST_CASE("rho1 of odd custom functionals") {
    const auto cube = FunctionalSpec::custom("x1^3", [](std::span<const double> s) { return std::pow(s.back(), 3); }, false);
    const auto r = rho123_mc(1.0, cube, 40000, 8, 6);
    CHECK(within(r.rho1, 3.0));
    CHECK_FALSE(r.rho2);
    CHECK_FALSE(r.derivative_error.empty());
    const auto square = FunctionalSpec::custom("x1^2", [](std::span<const double> s) { return s.back() * s.back(); }, true);
    CHECK(within(rho123_mc(1.0, square, 40000, 8, 7).rho1, 0.0));
}

TEST_CASE("rho3 readings differ by rho2") {
    const auto g = FunctionalSpec::custom(
        "x1^3", [](std::span<const double> s) { return std::pow(s.back(), 3); }, false,
        [](std::span<const double> x, std::span<const double> y) { return 3.0 * x.back() * x.back() * y.back(); });
    const auto stated = rho123_mc(1.0, g, 20000, 16, 8, Rho3Variant::as_stated);
    const auto proof = rho123_mc(1.0, g, 20000, 16, 8, Rho3Variant::as_proof);
    REQUIRE(stated.rho2);
    // direction W^2 - s differs from W^2 by -s, so rho3 moves by -rho2 (linear in the direction)
    CHECK(proof.rho3->value == doctest::Approx(stated.rho3->value - stated.rho2->value).epsilon(1e-9));
    CHECK(proof.rho3_alternate->value == doctest::Approx(stated.rho3->value).epsilon(1e-12));
    // E[3 W1^2 * 1] = 3 and E[3 W1^2 W1^2] = 9
    CHECK(within(*stated.rho2, 3.0));
    CHECK(within(*stated.rho3, 9.0, 4.0));
}

TEST_CASE("range efficiency near 0.4") {
    LambdaOptions o{LambdaMethod::mc, 400, 100000, 12, 1, true};
    const auto l = lambda_efficiency(3, 2.0, o);
    CHECK(l.value > 0.35);
    CHECK(l.value < 0.45);
    CHECK(l.std_error > 0.0);
    o.m = 96;
    CHECK_NOTHROW(lambda_moment(3, 2.0, o));
    o.m = 24;
    CHECK_THROWS_AS(lambda_moment(3, 2.0, o), ArgumentError);
}

TEST_CASE("jump limit law examples") {
    LimitSimOptions o{2000, 100, 3, 1};
    for (const auto& s : simulate_jump_limit({}, 4.0, o)) CHECK(s.value == 0.0);
    const std::vector<LimitJump> flat{{1.0, 0.0, 0.0, std::nullopt}};
    for (const auto& s : simulate_jump_limit(flat, 4.0, o)) CHECK(s.value == 0.0);
    const std::vector<LimitJump> two{{1.0, 1.0, 1.0, std::nullopt}, {-2.0, 0.5, 1.5, std::nullopt}};
    for (const auto& s : simulate_jump_limit(two, 3.0, o)) {
        CHECK(s.per_jump_terms.size() == 2);
        CHECK(s.value == doctest::Approx(s.per_jump_terms[0] + s.per_jump_terms[1]));
        CHECK(s.mixed_gaussian_part == 0.0);
    }
    CHECK_THROWS_AS(simulate_jump_limit(two, 0.0, o), ArgumentError);
}

TEST_CASE("jump limit mean matches a brute-force bracket expectation") {
    // 2 E[max_{u>=kappa} W_u - min_{s<=kappa} W_s], kappa ~ U(0,1), by direct
    // simulation of W on 2000 steps with an independent generator and seed
    const std::size_t n = 20000, m = 2000;
    std::vector<double> brute(n), w(m + 1);
    for (std::size_t r = 0; r < n; ++r) {
        ShockSource src(SeedStream{777, r}, 9, Channel::auxiliary);
        const double kappa = src.uniform();
        const std::size_t split = static_cast<std::size_t>(std::round(kappa * m));
        brownian_segment(src, w);
        double hi = w[split], lo = w[split];
        for (std::size_t k = split; k <= m; ++k) hi = std::max(hi, w[k]);
        for (std::size_t k = 0; k <= split; ++k) lo = std::min(lo, w[k]);
        brute[r] = 2.0 * (hi - lo);
    }
    const auto b = sample_moments(brute);
    const std::vector<LimitJump> one{{1.0, 1.0, 1.0, std::nullopt}};
    const auto sim = sample_moments(values(simulate_jump_limit(one, 2.0, LimitSimOptions{100000, 2000, 5, 0})));
    // continuum value: 2 * 2 E[sqrt(kappa)] sqrt(2/pi) = (8/3) sqrt(2/pi)
    const double exact = 8.0 / 3.0 * std::sqrt(2.0 / std::numbers::pi);
    CHECK(std::abs(sim.mean - b.mean) < 3.0 * std::hypot(sim.std_error(), b.std_error()) + 0.01);
    CHECK(sim.mean == doctest::Approx(exact).epsilon(0.03));
}

TEST_CASE("mixed limit") {
    const double l32 = 4.0 * std::numbers::ln2, l34 = 9.0 * 1.2020569031595942;
    LimitSimOptions o{20000, 100, 4, 0};
    const std::vector<double> zero_sigma(100, 0.0), one_sigma(100, 1.0);
    for (const auto& s : simulate_mixed_limit({}, zero_sigma, 0.01, l32, l34, o)) CHECK(s.value == 0.0);
    const auto gauss = sample_moments(values(simulate_mixed_limit({}, one_sigma, 0.01, l32, l34, o)));
    CHECK(gauss.variance == doctest::Approx(l34 - l32 * l32).epsilon(0.05));
    const std::vector<LimitJump> one{{1.0, 1.0, 1.0, std::nullopt}};
    const auto mixed = simulate_mixed_limit(one, one_sigma, 0.01, l32, l34, o);
    const auto jump_only = simulate_jump_limit(one, 2.0, o);
    std::vector<double> gaussian_part;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        CHECK(mixed[i].value == doctest::Approx(jump_only[i].value + mixed[i].mixed_gaussian_part).epsilon(1e-12));
        gaussian_part.push_back(mixed[i].mixed_gaussian_part);
    }
    const auto total = sample_moments(values(mixed));
    const auto jv = sample_moments(values(jump_only));
    const auto gv = sample_moments(gaussian_part);
    CHECK(total.variance == doctest::Approx(jv.variance + gv.variance).epsilon(0.05));
    CHECK_THROWS_AS(simulate_mixed_limit({}, one_sigma, 0.01, 3.0, 1.0, o), InternalConstantError);
}

TEST_CASE("continuous limit law") {
    LimitSimOptions o{20000, 50, 8, 0};
    const std::vector<double> one(100, 1.0), zero(100, 0.0);
    ContinuousLimitInputs in;
    in.sigma = one;
    in.dt = 0.01;
    const auto t = sample_moments(values(simulate_continuous_limit(FunctionalSpec::terminal_power(2), in, o)));
    CHECK(t.variance == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::abs(t.mean) < 4.0 * t.std_error());
    in.sigma = zero;
    for (const auto& s : simulate_continuous_limit(FunctionalSpec::terminal_power(2), in, o)) CHECK(s.value == 0.0);
    in.sigma = one;
    in.rho_reps = 100000;
    const auto r = sample_moments(values(simulate_continuous_limit(FunctionalSpec::range_power(2), in, o)));
    const auto l2 = table().grid(3, 2.0, 50), l4 = table().grid(3, 4.0, 50);
    REQUIRE(l2);
    REQUIRE(l4);
    CHECK(r.variance == doctest::Approx(l4->value - l2->value * l2->value).epsilon(0.06));
    const auto odd = FunctionalSpec::custom("x1", [](std::span<const double> s) { return s.back(); }, false);
    CHECK_THROWS_AS(simulate_continuous_limit(odd, in, o), UnsupportedDerivative);
}

TEST_CASE("constants table round trip and lookup") {
    ConstantsTable t;
    t.add({1, 2.0, 1.0, 0.0, "closed_form", 0, 0, 0});
    t.add({3, 2.0, 2.7731, 0.003, "mc_richardson", 2000, 1000000, 1});
    t.add({3, 2.0, 2.30, 0.001, "mc", 50, 2000000, 2});
    const std::string path = (std::filesystem::temp_directory_path() / "constants_roundtrip.csv").string();
    t.save(path, "test");
    const auto back = ConstantsTable::load(path);
    REQUIRE(back.records().size() == 3);
    CHECK(back.continuum(3, 2.0)->value == 2.7731);
    CHECK(back.grid(3, 2.0, 50)->value == 2.30);
    CHECK_FALSE(back.grid(3, 2.0, 100));
    CHECK(back.continuum(1, 2.0)->method == "closed_form");
}

TEST_CASE("deterministic across thread counts") {
    LambdaOptions a{LambdaMethod::mc, 64, 5000, 3, 1, true};
    LambdaOptions b = a;
    b.threads = 4;
    CHECK(lambda_moment(3, 2.0, a).value == lambda_moment(3, 2.0, b).value);
    CHECK(rho_mc(1.0, FunctionalSpec::range_power(2), 16, 5000, 2, 1).value ==
          rho_mc(1.0, FunctionalSpec::range_power(2), 16, 5000, 2, 3).value);
    const std::vector<LimitJump> one{{1.0, 1.0, 2.0, std::nullopt}};
    CHECK(values(simulate_jump_limit(one, 4.0, {3000, 50, 1, 1})) == values(simulate_jump_limit(one, 4.0, {3000, 50, 1, 4})));
}
