#include "hfpath/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hfpath/error.hpp"
#include "hfpath/io.hpp"

namespace hfpath {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"model", {"x0", "drift_a", "drift_b", "rho_wv"}},
        {"vol", {"sigma0", "mu_a", "mu_b", "sigma_a", "sigma_b", "v_a", "v_b", "floor", "co_jump_probability"}},
        {"jumps", {"intensity", "law", "a", "b", "prob_a", "mean", "sd", "floor", "lo", "hi"}},
        {"vol_jumps", {"intensity", "law", "a", "b", "prob_a", "mean", "sd", "floor", "lo", "hi"}},
        {"scenario", {"jumps", "jitter"}},
        {"grid", {"horizon", "n", "m"}},
        {"functional", {"kind", "p", "list"}},
        {"experiment",
         {"kind", "ladder", "m", "replications", "seed", "level", "threads", "ranges", "limit_reps", "limit_m",
          "constant_reps", "lln_slack", "pmin", "pmax", "step", "lambda_m", "lambda_reps", "constants"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    bool has(const std::string& section, const std::string& key) const {
        const auto s = tree_.get_child_optional(section);
        return s && s->get_child_optional(key);
    }

    bool has_section(const std::string& section) const { return static_cast<bool>(tree_.get_child_optional(section)); }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        if (!has(section, key)) return fallback;
        return boost::algorithm::trim_copy(tree_.get_child(section).get<std::string>(key));
    }

    double real(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return to_real(text(section, key, ""), section + "." + key);
    }

    std::uint64_t count(const std::string& section, const std::string& key, std::uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        const std::string name = section + "." + key;
        try {
            return parse_u64(text(section, key, ""), name);
        } catch (const ArgumentError& e) {
            throw ConfigError(name, e.what());
        }
    }

    bool flag(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const auto v = boost::algorithm::to_lower_copy(text(section, key, ""));
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(section + "." + key, "expected true or false, got '" + v + "'");
    }

    std::vector<std::string> list(const std::string& section, const std::string& key) const {
        std::vector<std::string> parts;
        const auto raw = text(section, key, "");
        boost::algorithm::split(parts, raw, boost::is_any_of(", "), boost::token_compress_on);
        parts.erase(std::remove_if(parts.begin(), parts.end(), [](const auto& s) { return s.empty(); }), parts.end());
        return parts;
    }

    static double to_real(const std::string& v, const std::string& name) {
        try {
            return parse_double(v, name);
        } catch (const ArgumentError& e) {
            throw ConfigError(name, e.what());
        }
    }

private:
    const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
    const auto& allowed = allowed_keys();
    for (const auto& [section, body] : tree) {
        const auto it = allowed.find(section);
        if (it == allowed.end()) throw ConfigError(section, "unknown config section");
        if (!body.data().empty() && body.empty()) throw ConfigError(section, "key outside of a section");
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) throw ConfigError(section + "." + key, "unknown config key");
        }
    }
}

CoefficientFn affine(double a, double b) {
    if (a == 0.0 && b == 0.0) return {};
    return [a, b](double, double state) { return a + b * state; };
}

JumpSpec read_jumps(const Reader& r, const std::string& section) {
    JumpSpec spec;
    spec.intensity = r.real(section, "intensity", 0.0);
    const auto law = r.text(section, "law", "two_point");
    if (law == "two_point") {
        spec.size_law = TwoPointLaw{r.real(section, "a", 1.0), r.real(section, "b", -1.0), r.real(section, "prob_a", 0.5)};
    } else if (law == "gaussian_truncated") {
        spec.size_law = TruncatedGaussianLaw{r.real(section, "mean", 0.0), r.real(section, "sd", 1.0),
                                             r.real(section, "floor", 0.1)};
    } else if (law == "uniform_signed") {
        spec.size_law = UniformSignedLaw{r.real(section, "lo", 0.5), r.real(section, "hi", 1.0)};
    } else {
        throw ConfigError(section + ".law", "unknown jump size law '" + law + "'");
    }
    try {
        spec.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(section, e.what());
    }
    return spec;
}

FunctionalSpec make_functional(const std::string& kind_text, double p, const std::string& key) {
    FunctionalKind kind;
    try {
        kind = parse_functional_kind(kind_text);
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
    if (!(p > 0.0)) throw ConfigError(key, "exponent p must be positive");
    switch (kind) {
        case FunctionalKind::terminal_power: return FunctionalSpec::terminal_power(p);
        case FunctionalKind::integral_power: return FunctionalSpec::integral_power(p);
        case FunctionalKind::range_power: return FunctionalSpec::range_power(p);
        case FunctionalKind::custom: break;
    }
    throw ConfigError(key, "custom functionals cannot be declared in a config file");
}

}  // namespace

std::uint64_t RunConfig::hash() const { return fnv1a64(source_text); }

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    check_keys(tree);
    const Reader r(tree);

    RunConfig cfg;
    cfg.source_text = text;

    ModelSpec& m = cfg.model;
    m.x0 = r.real("model", "x0", 0.0);
    m.drift = affine(r.real("model", "drift_a", 0.0), r.real("model", "drift_b", 0.0));
    m.rho_wv = r.real("model", "rho_wv", 0.0);
    m.vol.sigma0 = r.real("vol", "sigma0", 1.0);
    m.vol.mu_tilde = affine(r.real("vol", "mu_a", 0.0), r.real("vol", "mu_b", 0.0));
    m.vol.sigma_tilde = affine(r.real("vol", "sigma_a", 0.0), r.real("vol", "sigma_b", 0.0));
    m.vol.v_tilde = affine(r.real("vol", "v_a", 0.0), r.real("vol", "v_b", 0.0));
    m.vol.positivity_floor = r.real("vol", "floor", -1.0);
    m.vol.co_jump_probability = r.real("vol", "co_jump_probability", 0.0);
    if (r.has_section("jumps")) m.jumps = read_jumps(r, "jumps");
    if (r.has_section("vol_jumps")) m.vol.vol_jumps = read_jumps(r, "vol_jumps");
    try {
        m.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError("model", e.what());
    }

    cfg.grid.horizon = r.real("grid", "horizon", 1.0);
    cfg.grid.n_coarse = r.count("grid", "n", 1000);
    cfg.grid.m_fine = r.count("grid", "m", 50);
    try {
        cfg.grid.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError("grid", e.what());
    }

    ExperimentConfig& e = cfg.experiment;
    e.model = m;
    e.horizon = cfg.grid.horizon;
    if (r.has("experiment", "kind")) e.kind = parse_experiment_kind(r.text("experiment", "kind", ""));
    const std::size_t ladder_m = r.count("experiment", "m", cfg.grid.m_fine);
    if (r.has("experiment", "ladder")) {
        for (const auto& n : r.list("experiment", "ladder")) {
            try {
                e.ladder.push_back({parse_u64(n, "experiment.ladder"), ladder_m});
            } catch (const ArgumentError& err) {
                throw ConfigError("experiment.ladder", err.what());
            }
        }
    } else {
        e.ladder.push_back({cfg.grid.n_coarse, ladder_m});
    }
    e.replications = r.count("experiment", "replications", e.replications);
    e.seed = r.count("experiment", "seed", e.seed);
    e.level = r.real("experiment", "level", e.level);
    e.threads = static_cast<unsigned>(r.count("experiment", "threads", e.threads));
    for (const auto& p : r.list("experiment", "ranges")) e.range_exponents.push_back(Reader::to_real(p, "experiment.ranges"));
    e.limit_reps = r.count("experiment", "limit_reps", e.limit_reps);
    e.limit_m = r.count("experiment", "limit_m", e.limit_m);
    e.constant_reps = r.count("experiment", "constant_reps", e.constant_reps);
    e.lln_slack = r.real("experiment", "lln_slack", e.lln_slack);
    e.lambda_options.m = r.count("experiment", "lambda_m", e.lambda_options.m);
    e.lambda_options.reps = r.count("experiment", "lambda_reps", e.lambda_options.reps);
    e.lambda_options.seed = e.seed;
    if (r.has("experiment", "pmin") || r.has("experiment", "pmax") || r.has("experiment", "step")) {
        const double lo = r.real("experiment", "pmin", 0.5);
        const double hi = r.real("experiment", "pmax", 4.0);
        const double step = r.real("experiment", "step", 0.25);
        if (!(lo > 0.0 && hi >= lo && step > 0.0)) throw ConfigError("experiment.step", "need 0 < pmin <= pmax and step > 0");
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) e.p_grid.push_back(lo + step * static_cast<double>(i));
    }
    const std::string constants = r.text("experiment", "constants", "");
    try {
        e.constants = ConstantsTable::load(constants.empty() ? default_constants_path() : constants);
    } catch (const Error&) {
        if (!constants.empty()) throw ConfigError("experiment.constants", "cannot load constants table " + constants);
    }

    if (r.has("functional", "list")) {
        for (const auto& item : r.list("functional", "list")) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("functional.list", "expected kind:p, got '" + item + "'");
            e.functionals.push_back(make_functional(item.substr(0, colon),
                                                    Reader::to_real(item.substr(colon + 1), "functional.list"),
                                                    "functional.list"));
        }
    } else if (r.has("functional", "kind")) {
        e.functionals.push_back(make_functional(r.text("functional", "kind", ""), r.real("functional", "p", 2.0),
                                                "functional.kind"));
    }

    if (r.has("scenario", "jumps")) {
        for (const auto& item : r.list("scenario", "jumps")) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("scenario.jumps", "expected time:size, got '" + item + "'");
            const double t = Reader::to_real(item.substr(0, colon), "scenario.jumps");
            const double size = Reader::to_real(item.substr(colon + 1), "scenario.jumps");
            if (!(t > 0.0 && t < cfg.grid.horizon)) throw ConfigError("scenario.jumps", "jump time outside (0, horizon)");
            if (size == 0.0) throw ConfigError("scenario.jumps", "jump size must be non-zero");
            e.jump_scenario.push_back({t, size});
        }
    }
    e.jitter_within_block = r.flag("scenario", "jitter", e.jitter_within_block);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config", "cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace hfpath
