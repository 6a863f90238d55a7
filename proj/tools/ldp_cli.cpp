#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "ldp/action.hpp"
#include "ldp/config.hpp"
#include "ldp/errors.hpp"
#include "ldp/random.hpp"
#include "ldp/rare_event.hpp"
#include "ldp/report.hpp"
#include "ldp/scheme.hpp"

namespace fs = std::filesystem;
using namespace ldp;

namespace {

enum Exit { kOk = 0, kAssertion = 1, kConfig = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<int> workers;
};

fs::path output_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

int apply_workers(const Options& o, int from_config) {
  if (!o.workers) return from_config;
  if (*o.workers < 1) throw ConfigError("--workers must be >= 1");
  return *o.workers;
}

json model_summary(const ModelSpec& spec) { return to_json(spec); }

int run_simulate(const Options& o) {
  const SimulateConfig c = parse_simulate(load_config_file(o.config));
  const fs::path dir = output_dir(o);
  write_json(dir / "config.json", to_json(c));
  SchemeRun run{make_model(c.model), c.x, c.n, PerturbationLevel(c.a), c.seed};
  run.validate();
  for (int r = 0; r < c.replicas; ++r) {
    RandomStream rng = RandomStream::for_replica(c.seed, static_cast<std::uint64_t>(r));
    const Trajectory path = simulate(run, rng);
    const std::string name = c.replicas == 1 ? "trajectory.csv" : fmt::format("trajectory_{:04d}.csv", r);
    write_trajectory_csv(dir / name, path);
  }
  fmt::print("wrote {} trajectory file(s) to {}\n", c.replicas, dir.string());
  return kOk;
}

int run_action(const Options& o) {
  const ActionConfig c = parse_action(load_config_file(o.config));
  fs::path file(c.path);
  if (file.is_relative()) file = fs::path(o.config).parent_path() / file;
  const Trajectory path = read_trajectory_csv(file);
  if (path.dim() != c.model.dim) throw ConfigError("path file dimension does not match the model");
  const auto model = make_model(c.model);
  const ActionValue v = action(*model, c.x, PerturbationLevel(c.a), path, c.conjugate);

  const fs::path dir = output_dir(o);
  write_json(dir / "config.json", to_json(c));
  json segments = json::array();
  for (double s : v.segments) segments.push_back(real_json(s));
  write_json(dir / "action.json", {{"value", real_json(v.value)},
                                   {"reason", v.reason},
                                   {"unconverged_nodes", v.unconverged},
                                   {"segments", segments}});
  if (v.finite())
    fmt::print("action {:.12g}\n", v.value);
  else
    fmt::print("action +inf ({})\n", v.reason);
  return kOk;
}

int run_minimize(const Options& o) {
  const MinimizeConfig c = parse_minimize(load_config_file(o.config));
  ActionProblem problem{make_model(c.model), c.x, c.terminal, c.knots, PerturbationLevel(c.a), c.solver};
  const MinimizeResult r = minimize_action(problem);

  const fs::path dir = output_dir(o);
  write_json(dir / "config.json", to_json(c));
  write_trajectory_csv(dir / "minimizer.csv", r.path);
  write_iteration_log(dir / "iterations.csv", r.log);
  write_json(dir / "minimize.json", {{"value", real_json(r.value.value)},
                                     {"reason", r.value.reason},
                                     {"status", to_string(r.status)},
                                     {"iterations", r.iterations},
                                     {"projected_gradient_norm", r.projected_gradient_norm},
                                     {"warning", r.warning}});
  fmt::print("minimum action {:.12g} ({}, {} iterations)\n", r.value.value, to_string(r.status), r.iterations);
  if (r.warning) fmt::print(stderr, "warning: minimizer stopped without convergence\n");
  return kOk;
}

int run_martingale(const Options& o) {
  MartingaleConfig c = parse_martingale(load_config_file(o.config));
  c.workers = apply_workers(o, c.workers);
  const auto model = make_model(c.model);

  std::vector<MartingaleCase> cases;
  std::uint64_t index = 0;
  for (Index n : c.n_grid)
    for (double a : c.a_values)
      for (std::size_t l = 0; l < c.lambdas.size(); ++l) {
        MartingaleCase mc{n, a, l, {}, 0.0, true};
        mc.estimate = martingale_check(model, c.x, n, PerturbationLevel(a), c.lambdas[l], c.samples,
                                       derive_seed(c.seed, index++), c.workers);
        const double dev = std::abs(mc.estimate.mean - 1.0);
        if (mc.estimate.std_error > 0.0)
          mc.z_score = dev / mc.estimate.std_error;
        else
          mc.z_score = dev <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
        mc.passed = mc.z_score <= c.z_threshold;
        cases.push_back(mc);
      }

  json list = json::array();
  std::vector<std::string> failures;
  for (const auto& mc : cases) {
    list.push_back(to_json(mc));
    if (!mc.passed)
      failures.push_back(fmt::format("n={} a={} lambda={}: mean {} is {:.2f} stderr from 1", mc.n, mc.a,
                                     mc.lambda, mc.estimate.mean, mc.z_score));
  }
  const fs::path dir = output_dir(o);
  write_json(dir / "config.json", to_json(c));
  write_json(dir / "report.json", {{"suite", "martingale"},
                                   {"model", model_summary(c.model)},
                                   {"seed", c.seed},
                                   {"samples", c.samples},
                                   {"workers", c.workers},
                                   {"cases", list},
                                   {"failures", failures},
                                   {"passed", failures.empty()}});
  write_martingale_csv(dir / "report.csv", cases);
  for (const auto& mc : cases)
    fmt::print("n={} a={} lambda={} mean={:.6f} stderr={:.2e} {}\n", mc.n, mc.a, mc.lambda, mc.estimate.mean,
               mc.estimate.std_error, mc.passed ? "ok" : "FAIL");
  return failures.empty() ? kOk : kAssertion;
}

int run_rate(const Options& o) {
  RateConfig c = parse_rate(load_config_file(o.config));
  c.workers = apply_workers(o, c.workers);
  RateOptions options{c.knots, c.tolerance, c.workers, c.solver};
  const RateReport r = verify_rate(make_model(c.model), c.x, c.event, c.n_grid, c.samples, c.seed, options);

  json doc = to_json(r);
  doc["suite"] = "rate";
  doc["model"] = model_summary(c.model);
  doc["event"] = to_json(c.event);
  doc["samples"] = c.samples;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  const fs::path dir = output_dir(o);
  write_json(dir / "config.json", to_json(c));
  write_json(dir / "report.json", doc);
  write_rate_csv(dir / "report.csv", r);
  for (const auto& p : r.points)
    fmt::print("n={} p_hat={:.4e} rate={} gap={}\n", p.estimate.n, p.estimate.p_hat,
               p.estimate.empirical_rate ? fmt::format("{:.5f}", *p.estimate.empirical_rate) : "absent",
               p.relative_gap ? fmt::format("{:.4f}", *p.relative_gap) : "absent");
  fmt::print("predicted rate {:.6f}\n", r.predicted_rate);
  for (const auto& f : r.failures) fmt::print("FAIL {}\n", f);
  return r.passed() ? kOk : kAssertion;
}

int run_ode(const Options& o) {
  OdeConfig c = parse_ode(load_config_file(o.config));
  c.workers = apply_workers(o, c.workers);
  const OdeReport r = verify_ode_convergence(make_model(c.model), c.x, c.epsilon, c.n_grid, c.samples, c.seed,
                                             c.workers, c.max_slope, c.method);
  json doc = to_json(r);
  doc["suite"] = "ode";
  doc["model"] = model_summary(c.model);
  doc["event"] = {{"kind", "sup-distance"}, {"epsilon", c.epsilon}};
  doc["samples"] = c.samples;
  doc["seed"] = c.seed;
  doc["workers"] = c.workers;
  const fs::path dir = output_dir(o);
  write_json(dir / "config.json", to_json(c));
  write_json(dir / "report.json", doc);
  write_ode_csv(dir / "report.csv", r);
  for (const auto& p : r.points)
    fmt::print("n={} q_hat={:.4e} hits={}{}\n", p.n, p.q_hat, p.hits, p.censored ? " (censored)" : "");
  if (r.slope) fmt::print("slope {:.5f}\n", *r.slope);
  for (const auto& f : r.failures) fmt::print("FAIL {}\n", f);
  return r.passed() ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-scheme large deviation toolkit"};
  app.require_subcommand(1);

  Options options;
  struct Entry {
    Command command;
    std::string description;
    int (*run)(const Options&);
    CLI::App* sub = nullptr;
  };
  std::vector<Entry> entries{
      {Command::simulate, "simulate scheme trajectories", run_simulate},
      {Command::action, "evaluate the action of a polygonal path", run_action},
      {Command::minimize, "minimize the action toward a terminal target", run_minimize},
      {Command::verify_martingale, "check the exponential martingale identity", run_martingale},
      {Command::verify_rate, "compare tilted rare-event rates with the minimized action", run_rate},
      {Command::verify_ode, "estimate convergence to the limit ODE", run_ode},
  };
  for (auto& e : entries) {
    e.sub = app.add_subcommand(std::string(to_string(e.command)), e.description);
    e.sub->add_option("--config", options.config, "JSON config file")->required()->check(CLI::ExistingFile);
    e.sub->add_option("--out", options.out, "output directory")->capture_default_str();
    if (e.command == Command::verify_martingale || e.command == Command::verify_rate ||
        e.command == Command::verify_ode)
      e.sub->add_option("--workers", options.workers, "worker threads (overrides the config)");
    e.sub->footer(describe_fields(e.command));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  for (const auto& e : entries) {
    if (!e.sub->parsed()) continue;
    try {
      return e.run(options);
    } catch (const ConfigError& err) {
      fmt::print(stderr, "config error: {}\n", err.what());
      return kConfig;
    } catch (const PreconditionError& err) {
      fmt::print(stderr, "invalid input: {}\n", err.what());
      return kConfig;
    } catch (const NumericalError& err) {
      fmt::print(stderr, "numerical failure: {}\n", err.what());
      return kNumerical;
    } catch (const std::exception& err) {
      fmt::print(stderr, "error: {}\n", err.what());
      return kNumerical;
    }
  }
  return kConfig;
}
