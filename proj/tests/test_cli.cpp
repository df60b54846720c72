#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hfpath/cli.hpp"
#include "hfpath/config.hpp"
#include "hfpath/error.hpp"

using namespace hfpath;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "hfpath");
    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    Run r;
    r.code = parse_and_dispatch(args);
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hfpath_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> v;
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("constants for the terminal family") {
    const auto dir = scratch("constants");
    const auto r = run({"constants", "--family", "1", "--p", "2", "--out-dir", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out == "1.0\n");
    const auto l = lines(dir / "constants.csv");
    REQUIRE(l.size() == 3);
    CHECK(l[0].rfind("# hfpath ", 0) == 0);
    CHECK(l[1] == "family,p,value,std_error,method,m,reps,seed");
    CHECK(l[2].rfind("1,2", 0) == 0);
}

TEST_CASE("estimate is byte-identical across runs") {
    const auto dir = scratch("estimate");
    write(dir / "run.ini",
          "[vol]\nsigma0 = 0.8\nsigma_a = 0.2\n\n[grid]\nhorizon = 1\nn = 200\nm = 20\n\n"
          "[functional]\nlist = terminal_power:2, integral_power:2\n\n[experiment]\nseed = 5\n");
    const auto a_dir = dir / "a", b_dir = dir / "b";
    fs::create_directories(a_dir);
    fs::create_directories(b_dir);
    const auto ra = run({"estimate", "--config", (dir / "run.ini").string(), "--out-dir", a_dir.string()});
    const auto rb = run({"estimate", "--config", (dir / "run.ini").string(), "--out-dir", b_dir.string(), "--threads", "3"});
    CHECK(ra.code == 0);
    CHECK(rb.code == 0);
    CHECK(slurp(a_dir / "estimates.csv") == slurp(b_dir / "estimates.csv"));
    CHECK(ra.out == rb.out);
    const auto l = lines(a_dir / "estimates.csv");
    CHECK(l[1] == "estimator,horizon,n_coarse,m_fine,value,avar,ci_lo,ci_hi,seed");
    CHECK(l.size() == 2 + 4 + 1 + 1);
    CHECK(l[0].find("seed=5") != std::string::npos);
}

TEST_CASE("figure1 over the default grid") {
    const auto dir = scratch("figure1");
    const auto r = run({"figure1", "--pmin", "0.5", "--pmax", "4", "--step", "0.25", "--m", "64", "--reps", "20000",
                        "--out-dir", dir.string()});
    CHECK(r.code == 0);
    const auto l = lines(dir / "figure1.csv");
    REQUIRE(l.size() == 2 + 15);
    CHECK(l[1] == "p,Lambda1,Lambda2,Lambda3,Lambda3_std_error,ratio");
    CHECK(fs::exists(dir / "figure1.json"));
    CHECK(r.out.find("PASS lambda3_below_lambda1") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
    const auto dir = scratch("errors");
    write(dir / "bad.ini", "[grid]\nn = 100\nwidth = 3\n");
    const auto bad = run({"estimate", "--config", (dir / "bad.ini").string(), "--out-dir", dir.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("grid.width") != std::string::npos);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"constants", "--family", "7", "--p", "2", "--out-dir", dir.string()}).code == 2);
    CHECK(run({"jump-clt", "--p", "2.5", "--reps", "100", "--out-dir", dir.string()}).code == 2);
    CHECK(run({"estimate", "--config", (dir / "missing.ini").string()}).code == 2);
}

TEST_CASE("simulate writes path and jump files") {
    const auto dir = scratch("simulate");
    write(dir / "jumps.ini", "[grid]\nn = 50\nm = 4\n\n[jumps]\nintensity = 3\nlaw = uniform_signed\nlo = 0.5\nhi = 1\n");
    const auto r = run({"simulate", "--config", (dir / "jumps.ini").string(), "--out-dir", dir.string(), "--seed", "8"});
    CHECK(r.code == 0);
    CHECK(lines(dir / "path.csv").size() == 2 + 201);
    CHECK(lines(dir / "jumps.csv")[0].find("seed=8") != std::string::npos);
}

TEST_CASE("config parsing") {
    const auto c = parse_config(
        "[model]\nx0 = 1.5\ndrift_a = 0.1\n\n[vol]\nsigma0 = 0.4\nv_a = 0.3\nfloor = 0.01\n\n"
        "[jumps]\nintensity = 2\nlaw = two_point\na = 1\nb = -0.5\nprob_a = 0.3\n\n"
        "[scenario]\njumps = 0.25:1, 0.75:-2\njitter = false\n\n"
        "[grid]\nhorizon = 2\nn = 64\nm = 10\n\n"
        "[experiment]\nkind = jump_clt\nladder = 64, 256\nranges = 4\nreplications = 300\nseed = 3\n");
    CHECK(c.model.x0 == 1.5);
    CHECK(c.model.drift);
    CHECK(c.model.drift(0.0, 0.0) == 0.1);
    CHECK(c.model.vol.sigma0 == 0.4);
    CHECK(c.model.vol.floor() == 0.01);
    CHECK_FALSE(c.model.vol.is_constant());
    REQUIRE(c.model.jumps);
    CHECK(c.model.jumps->intensity == 2.0);
    CHECK(c.grid.horizon == 2.0);
    CHECK(c.experiment.kind == ExperimentKind::jump_clt);
    REQUIRE(c.experiment.ladder.size() == 2);
    CHECK(c.experiment.ladder[1].n_coarse == 256);
    CHECK(c.experiment.ladder[1].m_fine == 10);
    REQUIRE(c.experiment.jump_scenario.size() == 2);
    CHECK(c.experiment.jump_scenario[1].size == -2.0);
    CHECK_FALSE(c.experiment.jitter_within_block);
    CHECK(c.experiment.range_exponents == std::vector<double>{4.0});
    CHECK(c.experiment.replications == 300);
    CHECK(c.hash() == parse_config(c.source_text).hash());
    CHECK(c.hash() != parse_config("[grid]\nn = 64\n").hash());

    CHECK_THROWS_AS(parse_config("[nonsense]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[jumps]\nlaw = cauchy\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[scenario]\njumps = 3:1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[functional]\nlist = range_power\n"), ConfigError);
    try {
        parse_config("[vol]\nsigma = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "vol.sigma");
    }
}
