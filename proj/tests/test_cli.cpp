#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  explicit Workspace(const std::string& name) : dir_(fs::temp_directory_path() / "ldp_cli_tests" / name) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  fs::path file(const std::string& name, const std::string& body) const {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << body;
    return p;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Run run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(LDP_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

 private:
  fs::path dir_;
};

const char* kFrozen =
    R"({"model":{"kind":"affine","dim":1,"drift":{"kind":"linear","A":[[-1]]},"sigma":{"kind":"scalar","value":0}},"x":[1],"n":4,"seed":7})";

}  // namespace

TEST_CASE("simulate writes the Euler polygon of a deterministic model") {
  Workspace ws("simulate");
  const auto cfg = ws.file("c.json", kFrozen);
  const Run r = ws.run("simulate --config " + cfg.string() + " --out " + ws.path("o").string());
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(ws.path("o") / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,x1");
  int rows = 0;
  while (std::getline(csv, line)) {
    const double v = std::stod(line.substr(line.find(',') + 1));
    CHECK(v == doctest::Approx(std::pow(0.75, rows)).epsilon(1e-15));
    ++rows;
  }
  CHECK(rows == 5);
  const auto echo = nlohmann::json::parse(slurp(ws.path("o") / "config.json"));
  CHECK(echo.at("a") == 0.0);
  CHECK(echo.at("replicas") == 1);
}

TEST_CASE("missing n is a config error naming the field") {
  Workspace ws("missing");
  const auto cfg = ws.file("c.json", R"({"model":{"preset":"gaussian"},"x":[0],"seed":1})");
  const Run r = ws.run("simulate --config " + cfg.string() + " --out " + ws.path("o").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("'n'") != std::string::npos);
}

TEST_CASE("unknown keys are config errors") {
  Workspace ws("unknown");
  const auto cfg = ws.file("c.json", R"({"model":{"preset":"gaussian"},"x":[0],"n":3,"seed":1,"nn":4})");
  const Run r = ws.run("simulate --config " + cfg.string() + " --out " + ws.path("o").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("'nn'") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  Workspace ws("determinism");
  const auto sim = ws.file("s.json", R"({"model":{"preset":"bernoulli-2d"},"x":[0,0],"n":30,"a":0.2,"seed":5,"replicas":3})");
  const auto ode = ws.file("o.json", R"({"model":{"preset":"gaussian-ou"},"x":[1],"epsilon":0.4,"n_grid":[5,10],"samples":2000,"seed":9})");
  for (const char* dir : {"a", "b"}) {
    REQUIRE(ws.run("simulate --config " + sim.string() + " --out " + ws.path(dir).string()).code == 0);
    ws.run("verify-ode --config " + ode.string() + " --out " + (ws.path(dir) / "ode").string());
  }
  for (const char* f : {"trajectory_0000.csv", "trajectory_0002.csv", "config.json", "ode/report.json", "ode/report.csv"})
    CHECK(slurp(ws.path("a") / f) == slurp(ws.path("b") / f));
  CHECK_FALSE(slurp(ws.path("a") / "ode/report.json").empty());
}

TEST_CASE("worker count does not change the report") {
  Workspace ws("workers");
  const auto cfg = ws.file("c.json", R"({"model":{"preset":"gaussian"},"x":[0],"n":10,"lambda":[{"t":1,"alpha":[1]}],"samples":4000,"seed":2})");
  REQUIRE(ws.run("verify-martingale --config " + cfg.string() + " --out " + ws.path("one").string()).code == 0);
  REQUIRE(ws.run("verify-martingale --workers 3 --config " + cfg.string() + " --out " + ws.path("three").string()).code == 0);
  CHECK(slurp(ws.path("one") / "report.csv") == slurp(ws.path("three") / "report.csv"));
}

TEST_CASE("action command") {
  Workspace ws("action");
  ws.file("line.csv", "t,x1\n0,0\n0.5,0.5\n1,1\n");
  ws.file("shifted.csv", "t,x1\n0,0.2\n0.5,0.5\n1,1\n");
  const auto good = ws.file("good.json", R"({"model":{"preset":"gaussian"},"x":[0],"path":"line.csv"})");
  const auto bad = ws.file("bad.json", R"({"model":{"preset":"gaussian"},"x":[0],"path":"shifted.csv"})");
  const Run r = ws.run("action --config " + good.string() + " --out " + ws.path("g").string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("action 0.5\n") != std::string::npos);
  const Run s = ws.run("action --config " + bad.string() + " --out " + ws.path("b").string());
  REQUIRE(s.code == 0);
  CHECK(s.out.find("+inf (initial condition)") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(ws.path("b") / "action.json"));
  CHECK(doc.at("value") == "+inf");
  CHECK(doc.at("reason") == "initial condition");
}

TEST_CASE("minimize command on a half-space") {
  Workspace ws("minimize");
  const auto cfg = ws.file("c.json", R"({"model":{"preset":"gaussian"},"x":[0],"terminal":{"kind":"halfspace","normal":[1],"level":2}})");
  const Run r = ws.run("minimize --config " + cfg.string() + " --out " + ws.path("o").string());
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(ws.path("o") / "minimize.json"));
  CHECK(doc.at("value").get<double>() == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(slurp(ws.path("o") / "iterations.csv").rfind("iter,value,gradient_norm,step\n", 0) == 0);
  CHECK(fs::exists(ws.path("o") / "minimizer.csv"));
}

TEST_CASE("martingale suite passes on the gaussian preset") {
  Workspace ws("martingale");
  const auto cfg = ws.file("c.json", R"({"model":{"preset":"gaussian"},"x":[0],"n":50,"lambda":[{"t":1,"alpha":[1]}],"seed":3})");
  const Run r = ws.run("verify-martingale --config " + cfg.string() + " --out " + ws.path("o").string());
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(ws.path("o") / "report.json"));
  CHECK(doc.at("passed") == true);
  CHECK(doc.at("cases").at(0).at("z_score").get<double>() <= 4.0);
}

TEST_CASE("rate suite") {
  Workspace ws("rate");
  const auto good = ws.file("g.json", R"({"model":{"preset":"gaussian"},"x":[0],"event":{"kind":"terminal-halfspace","normal":[1],"level":1},"n_grid":[25,50,100,200],"seed":4})");
  const Run r = ws.run("verify-rate --config " + good.string() + " --out " + ws.path("g").string());
  CHECK(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(ws.path("g") / "report.json"));
  CHECK(doc.at("points").back().at("relative_gap").get<double>() <= 0.15);
  for (const char* key : {"model", "event", "samples", "seed", "predicted_rate"}) CHECK(doc.contains(key));
  CHECK(doc.at("points").at(0).contains("p_hat"));
  CHECK(doc.at("points").at(0).contains("stderr"));
  CHECK(doc.at("points").at(0).contains("empirical_rate"));
  CHECK(doc.at("points").at(0).at("method") == "tilted");

  const auto covering = ws.file("b.json", R"({"model":{"preset":"gaussian"},"x":[0],"event":{"kind":"terminal-halfspace","normal":[1],"level":-1},"n_grid":[25],"seed":4})");
  const Run bad = ws.run("verify-rate --config " + covering.string() + " --out " + ws.path("b").string());
  CHECK(bad.code != 0);
  CHECK(bad.err.find("not rare") != std::string::npos);
}

TEST_CASE("failing assertions give exit code 1") {
  Workspace ws("assert");
  // A slope threshold no estimate can meet.
  const auto cfg = ws.file("c.json", R"({"model":{"preset":"gaussian"},"x":[0],"epsilon":0.5,"n_grid":[10,20],"samples":2000,"seed":1,"max_slope":-100})");
  const Run r = ws.run("verify-ode --config " + cfg.string() + " --out " + ws.path("o").string());
  CHECK(r.code == 1);
  const auto doc = nlohmann::json::parse(slurp(ws.path("o") / "report.json"));
  CHECK_FALSE(doc.at("failures").empty());
}

TEST_CASE("numerical blowup gives exit code 3") {
  Workspace ws("blowup");
  const auto cfg = ws.file("c.json", R"({"model":{"kind":"affine","dim":1,"drift":{"kind":"linear","A":[[1e200]]}},"x":[1e200],"n":3,"seed":1})");
  const Run r = ws.run("simulate --config " + cfg.string() + " --out " + ws.path("o").string());
  CHECK(r.code == 3);
  CHECK(r.err.find("step") != std::string::npos);
}

TEST_CASE("subcommand help lists config fields") {
  Workspace ws("help");
  const Run r = ws.run("verify-rate --help");
  CHECK(r.code == 0);
  for (const char* key : {"model", "x", "event", "n_grid", "samples", "seed", "knots", "tolerance", "solver", "workers"})
    CHECK(r.out.find(std::string("  ") + key) != std::string::npos);
}
