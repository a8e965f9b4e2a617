#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "semitrans/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("semitrans_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content = "") const {
    auto p = (path / name).string();
    if (!content.empty()) std::ofstream(p) << content;
    return p;
  }
};

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream o, e;
  int c = semitrans::cli::run(args, o, e);
  return {c, o.str(), e.str()};
}

const char* kConfig = R"({
  "model": {"family": "odds_ratio", "eta": 1, "dim_theta": 1},
  "simulation": {"theta0": [1], "gamma0": "identity",
                 "covariates": {"law": "uniform", "lo": [-1], "hi": [1]},
                 "censoring": {"kind": "independent_with_atom", "tau0": 4, "atom": 0.5},
                 "n": 400, "seed": 3},
  "theta0_hat": [0.9],
  "orthogonality": {"replicates": 2, "g": [{"type": "constant"}, {"type": "indicator_upto", "cut": "median"}]}
})";

const char* kPhConfig = R"({
  "model": {"family": "proportional_hazards", "dim_theta": 1},
  "simulation": {"theta0": [0], "covariates": {"law": "uniform", "lo": [-1], "hi": [1]}, "n": 2000, "seed": 5},
  "gamma": "true"
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes n rows and a sidecar") {
  TempDir d;
  auto cfg = d.file("c.json", kConfig);
  auto out = d.file("s.csv");
  auto r = run({"simulate", "--config", cfg, "--out", out});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(out));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 400);
  auto meta = slurp(d.file("s.json"));
  CHECK(meta.find("\"rng\": \"splitmix64-counter\"") != std::string::npos);
  auto out2 = d.file("t.csv");
  run({"simulate", "--config", cfg, "--out", out2});
  CHECK(slurp(out) == slurp(out2));
  auto out3 = d.file("u.csv");
  run({"simulate", "--config", cfg, "--out", out3, "--seed", "4"});
  CHECK(slurp(out) != slurp(out3));
}

TEST_CASE("fit, onestep, bound and diagnose") {
  TempDir d;
  auto cfg = d.file("c.json", kConfig);
  auto data = d.file("s.csv");
  REQUIRE(run({"simulate", "--config", cfg, "--out", data}).code == 0);
  for (const char* cmd : {"fit", "onestep", "bound", "diagnose"}) {
    auto out = d.file(std::string(cmd) + ".json");
    auto r = run({cmd, "--config", cfg, "--data", data, "--out", out, "--jobs", "2"});
    CHECK_MESSAGE(r.code == 0, cmd << ": " << r.err);
    auto text = slurp(out);
    CHECK(text.find("\"status\": \"ok\"") != std::string::npos);
  }
  CHECK(slurp(d.file("fit.json")).find("\"theta_hat\"") != std::string::npos);
  CHECK(slurp(d.file("bound.csv")).rfind("t,gamma,C,B,logP0,c,b,kappa,psi1_from0,psi0_to_end", 0) == 0);
  CHECK(slurp(d.file("diagnose.json")).find("\"orthogonality\"") != std::string::npos);
}

TEST_CASE("proportional hazards bound") {
  TempDir d;
  auto cfg = d.file("c.json", kPhConfig);
  auto out = d.file("b.json");
  REQUIRE(run({"bound", "--config", cfg, "--out", out}).code == 0);
  auto text = slurp(out);
  CHECK(text.find("\"bound_finite\": true") != std::string::npos);
  CHECK(text.find("\"kappa\": 0") != std::string::npos);
}

TEST_CASE("configuration errors exit 2") {
  TempDir d;
  auto bad = d.file("bad.json", "{\n  \"model\": {\"family\": \"odds_ratio\",,}\n}\n");
  auto r = run({"fit", "--config", bad, "--out", d.file("o.json")});
  CHECK(r.code == 2);
  CHECK(r.err.find(":2:") != std::string::npos);
  auto fam = d.file("fam.json", R"({"model": {"family": "weibull", "dim_theta": 1}})");
  CHECK(run({"fit", "--config", fam, "--out", d.file("o.json")}).code == 2);
  CHECK(run({"fit", "--config", d.file("missing.json"), "--out", d.file("o.json")}).code == 2);
  CHECK(run({"nosuch"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("non-convergence exits 3 and still writes diagnostics") {
  TempDir d;
  auto cfg = d.file("c.json", kConfig);
  auto out = d.file("f.json");
  auto r = run({"fit", "--config", cfg, "--out", out, "--max-iter", "0"});
  CHECK(r.code == 3);
  auto text = slurp(out);
  CHECK(text.find("\"status\": \"non_convergence\"") != std::string::npos);
  CHECK(text.find("\"theta_hat\"") != std::string::npos);
}

TEST_CASE("repeated runs are byte identical") {
  TempDir d;
  auto cfg = d.file("c.json", kConfig);
  for (const char* cmd : {"fit", "onestep", "bound", "diagnose"}) {
    auto a = d.file(std::string(cmd) + "_a.json"), b = d.file(std::string(cmd) + "_b.json");
    run({cmd, "--config", cfg, "--out", a, "--jobs", "3"});
    run({cmd, "--config", cfg, "--out", b, "--jobs", "1"});
    CHECK(slurp(a) == slurp(b));
  }
}

}
