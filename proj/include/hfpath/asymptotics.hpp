#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfpath/functional.hpp"
#include "hfpath/rng.hpp"

namespace hfpath {

inline constexpr std::uint64_t kDefaultSeed = 20150601ULL;

struct RhoEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t reps = 0;
    std::size_t m = 0;  // 0 for closed forms
};

// Standard Brownian motion at s = k/m, k = 0..m (out[0] = 0).
void brownian_segment(ShockSource& source, std::span<double> out);

// E[g({z W_s})] over Brownian segments on m steps; std_error = sd / sqrt(reps).
RhoEstimate rho_mc(double z, const FunctionalSpec& g, std::size_t m, std::size_t reps, std::uint64_t seed,
                   unsigned threads = 1);

// Direction used for rho^(3): {W_s^2} as written in the limit theorem, or
// {W_s^2 - s} as it appears in the proof. They differ by rho^(2).
enum class Rho3Variant { as_stated, as_proof };

struct Rho123Estimate {
    RhoEstimate rho1;
    std::optional<RhoEstimate> rho2;
    std::optional<RhoEstimate> rho3;            // per the requested variant
    std::optional<RhoEstimate> rho3_alternate;  // the other reading
    Rho3Variant variant = Rho3Variant::as_stated;
    std::string derivative_error;  // non-empty when rho2/rho3 are unavailable
};

// rho^(1) = E[g(zW) W_1], rho^(2) = E[g'_{s}(zW)], rho^(3) = E[g'_{W^2}(zW)] (or W^2 - s).
// When g has no derivative rho^(1) is still returned and derivative_error is set.
Rho123Estimate rho123_mc(double z, const FunctionalSpec& g, std::size_t reps, std::size_t m, std::uint64_t seed,
                         Rho3Variant variant = Rho3Variant::as_stated, unsigned threads = 1);

enum class LambdaMethod { closed_form, mc };

struct LambdaOptions {
    LambdaMethod method = LambdaMethod::closed_form;
    std::size_t m = 2000;
    std::size_t reps = 1'000'000;
    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 1;
    // Range family only: cancel the O(m^{-1/2}) and O(1/m) grid bias of the discrete
    // sup by combining resolutions m, m/4 and m/16 on the same path
    // ((8 R_m^p - 6 R_{m/4}^p + R_{m/16}^p) / 3). Needs m divisible by 16.
    // When false the result is the constant of the m-point discretized functional.
    bool extrapolate = true;
};

// lambda^{1,p} = E|W_1|^p, lambda^{2,p} = E|int_0^1 W|^p, lambda^{3,p} = E[(sup W - inf W)^p].
RhoEstimate lambda_moment(int family, double p, const LambdaOptions& opts = {});

// Lambda^{i,p} = (lambda^{i,2p} - (lambda^{i,p})^2) / (lambda^{i,p})^2; MC errors by the delta method.
RhoEstimate lambda_efficiency(int family, double p, const LambdaOptions& opts = {});

// Exact constants of the m-point discretized functionals for families 1 and 2
// (family 2 uses Var(trapezoid int W) = 1/3 - 1/(12 m^2)).
double lambda_grid_closed(int family, double p, std::size_t m);

// E[R^p] for the range R of W on [0,1], integrated from Feller's range density:
// 4 E|N|^p eta(p - 1). Independent analytic cross-check for the MC range constants.
double range_moment_feller(double p);

// Joint MC moments E[q^p] for several exponents on one set of Brownian paths, where q is
// |W_1| (family 1), |trapezoid int W| (family 2) or the range sup W - inf W (family 3).
struct MomentTable {
    int family = 3;
    std::vector<double> ps;
    std::vector<double> mean;
    std::vector<std::vector<double>> cov;  // covariance of the sample means
    std::size_t reps = 0;
    std::size_t m = 0;
    bool extrapolated = false;

    std::size_t index_of(double p) const;
    RhoEstimate moment(double p) const;
    RhoEstimate efficiency(double p) const;  // needs p and 2p in ps
};

MomentTable family_moments_mc(int family, std::span<const double> ps, const LambdaOptions& opts);

// --- limit laws -----------------------------------------------------------

struct LimitLawSample {
    double value = 0.0;
    std::vector<double> per_jump_terms;
    double mixed_gaussian_part = 0.0;
};

struct LimitJump {
    double size = 0.0;
    double sigma_left = 0.0;
    double sigma_right = 0.0;
    std::optional<double> kappa;  // fresh U(0,1) per replication when empty
};

struct LimitSimOptions {
    std::size_t reps = 10000;
    std::size_t m = 500;  // Brownian-segment resolution
    std::uint64_t seed = kDefaultSeed;
    unsigned threads = 1;
};

// One replication of U(X,p)_t on its own seed stream.
LimitLawSample simulate_jump_limit_once(std::span<const LimitJump> jumps, double p, std::size_t m,
                                        const SeedStream& seed);

// U(X,p)_t: per jump p|J|^{p-1} sup_{s<=kappa<=u} (+-)[(W~_kappa - W~_s) sigma_- + (W~_u - W~_kappa) sigma_+],
// W~ simulated on the grid k/m with kappa inserted exactly.
std::vector<LimitLawSample> simulate_jump_limit(std::span<const LimitJump> jumps, double p, const LimitSimOptions& opts);

// U(X,2)_t + sqrt(lambda34 - lambda32^2) int sigma^2 dW'. sigma_left_points holds left-point
// values on a step-dt grid; the Gaussian part has variance (lambda34 - lambda32^2) sum sigma^4 dt.
std::vector<LimitLawSample> simulate_mixed_limit(std::span<const LimitJump> jumps,
                                                 std::span<const double> sigma_left_points, double dt,
                                                 double lambda32, double lambda34, const LimitSimOptions& opts);

struct ContinuousLimitInputs {
    std::span<const double> sigma;          // left-point sigma values
    double dt = 0.0;
    std::span<const double> drift;          // mu_s, empty = 0
    std::span<const double> vol_of_vol;     // sigma~_s, empty = 0
    std::span<const double> w_increments;   // increments of W on the same grid; empty = simulate fresh
    std::size_t rho_reps = 20000;           // MC size for rho-constants that lack closed forms
};

// U(X,g)_t = int u1 ds + int u2 dW + int u3 dW' with left-point Riemann sums.
// For even g only u3 survives and the result is N(0, sum (rho(g^2) - rho(g)^2) dt).
std::vector<LimitLawSample> simulate_continuous_limit(const FunctionalSpec& g, const ContinuousLimitInputs& inputs,
                                                      const LimitSimOptions& opts);

// --- constants table ------------------------------------------------------

struct ConstantRecord {
    int family = 1;
    double p = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    std::string method;  // closed_form | mc | mc_richardson
    std::size_t m = 0;   // discretization (0 = continuum closed form)
    std::size_t reps = 0;
    std::uint64_t seed = 0;
};

class ConstantsTable {
public:
    ConstantsTable() = default;
    explicit ConstantsTable(std::vector<ConstantRecord> records) : records_(std::move(records)) {}

    static ConstantsTable load(const std::string& path);
    // Header: family,p,value,std_error,method,m,reps,seed
    void save(const std::string& path, const std::string& comment = {}) const;

    // Continuum constant (closed_form or mc_richardson).
    std::optional<ConstantRecord> continuum(int family, double p) const;
    // Constant of the m-point discretized functional (method mc).
    std::optional<ConstantRecord> grid(int family, double p, std::size_t m) const;

    const std::vector<ConstantRecord>& records() const { return records_; }
    void add(ConstantRecord r) { records_.push_back(std::move(r)); }

private:
    std::vector<ConstantRecord> records_;
};

// Location of the checked-in constants.csv (compile-time default, overridable by HFPATH_CONSTANTS).
std::string default_constants_path();

std::string to_string(LambdaMethod method);

}  // namespace hfpath
