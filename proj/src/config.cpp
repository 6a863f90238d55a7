#include "ldp/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ldp/errors.hpp"

namespace ldp {

namespace {

// Object node with a fixed key vocabulary; every access is typed and any key
// outside the vocabulary is an error.
class Node {
 public:
  Node(const json& value, std::string where, std::vector<std::string> allowed)
      : value_(value), where_(std::move(where)) {
    if (!value_.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", label()));
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& item : value_.items())
      if (!keys.contains(item.key()))
        throw ConfigError(fmt::format("{}: unknown field '{}'", label(), item.key()));
  }

  bool has(const std::string& key) const { return value_.contains(key); }

  const json& at(const std::string& key) const {
    if (!has(key)) throw ConfigError(fmt::format("missing required field '{}'", path(key)));
    return value_.at(key);
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(fmt::format("field '{}' must be a number", path(key)));
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer())
      throw ConfigError(fmt::format("field '{}' must be an integer", path(key)));
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t seed(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned())
      throw ConfigError(fmt::format("field '{}' must be a non-negative integer", path(key)));
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("field '{}' must be a string", path(key)));
    return v.get<std::string>();
  }

  Vector vector(const std::string& key) const { return to_vector(at(key), path(key)); }

  Matrix matrix(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array() || v.empty())
      throw ConfigError(fmt::format("field '{}' must be a non-empty array of rows", path(key)));
    const auto rows = static_cast<Index>(v.size());
    Matrix m;
    for (Index r = 0; r < rows; ++r) {
      const Vector row = to_vector(v[static_cast<std::size_t>(r)], fmt::format("{}[{}]", path(key), r));
      if (r == 0) m.resize(rows, row.size());
      if (row.size() != m.cols())
        throw ConfigError(fmt::format("field '{}' has rows of different lengths", path(key)));
      m.row(r) = row.transpose();
    }
    return m;
  }

  std::vector<Index> index_list(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array() || v.empty())
      throw ConfigError(fmt::format("field '{}' must be a non-empty array of integers", path(key)));
    std::vector<Index> out;
    for (const json& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1)
        throw ConfigError(fmt::format("field '{}' must hold positive integers", path(key)));
      out.push_back(static_cast<Index>(e.get<std::int64_t>()));
    }
    return out;
  }

  std::string label() const { return where_.empty() ? std::string("config") : where_; }

  static Vector to_vector(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty())
      throw ConfigError(fmt::format("field '{}' must be a non-empty array of numbers", where));
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(fmt::format("field '{}' must hold numbers", where));
      out[static_cast<Index>(i)] = v[i].get<double>();
    }
    return out;
  }

 private:
  const json& value_;
  std::string where_;
};

std::vector<std::string> keys_of(Command command) {
  std::vector<std::string> keys;
  for (const FieldDoc& f : config_fields(command)) keys.push_back(f.key);
  return keys;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

Vector state_vector(const Node& node, const std::string& key, Index dim) {
  Vector v = node.vector(key);
  require(v.size() == dim, fmt::format("field '{}' must have {} entries", node.path(key), dim));
  return v;
}

double perturbation(const Node& node) {
  const double a = node.number("a", 0.0);
  require(a >= 0.0, "field 'a' must be >= 0");
  return a;
}

int workers(const Node& node) {
  const auto w = node.integer("workers", 1);
  require(w >= 1, "field 'workers' must be >= 1");
  return static_cast<int>(w);
}

std::uint64_t samples(const Node& node, std::uint64_t fallback) {
  if (!node.has("samples")) return fallback;
  const auto s = node.integer("samples");
  require(s >= 1, "field 'samples' must be >= 1");
  return static_cast<std::uint64_t>(s);
}

ConjugateSettings parse_conjugate(const json& v, const std::string& where) {
  Node node(v, where, {"max_iterations", "gradient_tolerance", "norm_cap", "max_step", "divergence_window"});
  ConjugateSettings s;
  s.max_iterations = static_cast<int>(node.integer("max_iterations", s.max_iterations));
  s.gradient_tolerance = node.number("gradient_tolerance", s.gradient_tolerance);
  s.norm_cap = node.number("norm_cap", s.norm_cap);
  s.max_step = node.number("max_step", s.max_step);
  s.divergence_window = static_cast<int>(node.integer("divergence_window", s.divergence_window));
  require(s.max_iterations >= 1 && s.gradient_tolerance > 0 && s.norm_cap > 0 && s.max_step > 0 &&
              s.divergence_window >= 1,
          fmt::format("{}: solver settings must be positive", where));
  return s;
}

json conjugate_json(const ConjugateSettings& s) {
  return {{"max_iterations", s.max_iterations},
          {"gradient_tolerance", s.gradient_tolerance},
          {"norm_cap", s.norm_cap},
          {"max_step", s.max_step},
          {"divergence_window", s.divergence_window}};
}

MinimizerSettings parse_solver(const Node& parent) {
  MinimizerSettings s;
  if (!parent.has("solver")) return s;
  Node node(parent.at("solver"), "solver", {"max_iterations", "gradient_tolerance", "fd_step", "conjugate"});
  s.max_iterations = static_cast<int>(node.integer("max_iterations", s.max_iterations));
  s.gradient_tolerance = node.number("gradient_tolerance", s.gradient_tolerance);
  s.fd_step = node.number("fd_step", s.fd_step);
  if (node.has("conjugate")) s.conjugate = parse_conjugate(node.at("conjugate"), "solver.conjugate");
  require(s.max_iterations >= 1 && s.gradient_tolerance > 0 && s.fd_step > 0,
          "solver settings must be positive");
  return s;
}

json solver_json(const MinimizerSettings& s) {
  return {{"max_iterations", s.max_iterations},
          {"gradient_tolerance", s.gradient_tolerance},
          {"fd_step", s.fd_step},
          {"conjugate", conjugate_json(s.conjugate)}};
}

DualMeasure parse_measure(const json& v, const std::string& where, Index dim) {
  if (!v.is_array()) throw ConfigError(fmt::format("field '{}' must be an array of atoms", where));
  std::vector<DualMeasure::Atom> atoms;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const std::string at = fmt::format("{}[{}]", where, j);
    Node node(v[j], at, {"t", "alpha"});
    const double t = node.number("t");
    require(t >= 0.0 && t <= 1.0, fmt::format("field '{}.t' must lie in [0,1]", at));
    Vector alpha = node.vector("alpha");
    require(alpha.size() == dim, fmt::format("field '{}.alpha' must have {} entries", at, dim));
    atoms.push_back({t, std::move(alpha)});
  }
  return DualMeasure(dim, std::move(atoms));
}

json measure_json(const DualMeasure& m) {
  json out = json::array();
  for (const auto& a : m.atoms()) out.push_back({{"t", a.time}, {"alpha", vector_json(a.weight)}});
  return out;
}

HalfSpace parse_halfspace(const Node& node, Index dim) {
  const Vector normal = state_vector(node, "normal", dim);
  require(normal.norm() > 0.0, fmt::format("field '{}' must be nonzero", node.path("normal")));
  return HalfSpace::make(normal, node.number("level"));
}

json halfspace_json(const HalfSpace& h) {
  return {{"kind", "terminal-halfspace"}, {"normal", vector_json(h.normal)}, {"level", h.level}};
}

std::vector<Index> grid(const Node& node) {
  if (node.has("n_grid")) return node.index_list("n_grid");
  const auto n = node.integer("n");
  require(n >= 1, "field 'n' must be >= 1");
  return {static_cast<Index>(n)};
}

json grid_json(const std::vector<Index>& g) { return json(std::vector<std::int64_t>(g.begin(), g.end())); }

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::action: return "action";
    case Command::minimize: return "minimize";
    case Command::verify_martingale: return "verify-martingale";
    case Command::verify_rate: return "verify-rate";
    case Command::verify_ode: return "verify-ode";
  }
  return "unknown";
}

const std::vector<FieldDoc>& config_fields(Command command) {
  static const FieldDoc model{"model", "model preset {\"preset\": name} or affine record {kind, dim, drift, sigma, noise}", true};
  static const FieldDoc x{"x", "start point, array of dim numbers", true};
  static const FieldDoc a{"a", "Gaussian perturbation level >= 0 (default 0)"};
  static const FieldDoc seed{"seed", "master random seed, non-negative integer", true};
  static const FieldDoc workers{"workers", "worker threads for sampling (default 1)"};
  static const FieldDoc solver{"solver", "{max_iterations, gradient_tolerance, fd_step, conjugate{...}}"};

  static const std::vector<FieldDoc> simulate{
      model, x, {"n", "number of scheme steps", true}, a, seed,
      {"replicas", "number of trajectories to write (default 1)"}};
  static const std::vector<FieldDoc> action{
      model, x, a, {"path", "trajectory CSV file (header t,x1..xd)", true},
      {"conjugate", "{max_iterations, gradient_tolerance, norm_cap, max_step, divergence_window}"}};
  static const std::vector<FieldDoc> minimize{
      model, x, a,
      {"terminal", "{kind: point, z} or {kind: halfspace, normal, level}", true},
      {"knots", "knot count m >= 2 (default 21)"}, solver};
  static const std::vector<FieldDoc> martingale{
      model, x, {"n", "scheme steps (or use n_grid)"}, {"n_grid", "list of step counts"},
      {"a", "perturbation level or list of levels (default 0)"},
      {"lambda", "dual measure: array of {t, alpha}"}, {"lambdas", "list of dual measures"},
      {"samples", "runs per case (default 100000)"}, seed,
      {"z_threshold", "allowed |mean - 1| in standard errors (default 4)"}, workers};
  static const std::vector<FieldDoc> rate{
      model, x, {"event", "{kind: terminal-halfspace, normal, level}", true},
      {"n_grid", "list of step counts", true}, {"samples", "runs per n (default 100000)"}, seed,
      {"knots", "knots of the action minimizer (default 41)"},
      {"tolerance", "allowed relative rate gap at the largest n (default 0.15)"}, solver, workers};
  static const std::vector<FieldDoc> ode{
      model, x, {"epsilon", "sup-distance threshold > 0", true},
      {"n_grid", "list of step counts", true}, {"samples", "runs per n (default 10000)"}, seed,
      {"max_slope", "largest accepted log-slope of q_n (default -0.05)"},
      {"method", "estimator: automatic, naive or mixture (default automatic)"}, workers};

  switch (command) {
    case Command::simulate: return simulate;
    case Command::action: return action;
    case Command::minimize: return minimize;
    case Command::verify_martingale: return martingale;
    case Command::verify_rate: return rate;
    case Command::verify_ode: return ode;
  }
  return simulate;
}

std::string describe_fields(Command command) {
  std::ostringstream out;
  out << "Config fields (JSON):\n";
  for (const FieldDoc& f : config_fields(command))
    out << "  " << f.key << (f.required ? " (required)" : "") << ": " << f.description << "\n";
  return out.str();
}

json load_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", file.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", file.string(), e.what()));
  }
}

ModelSpec parse_model(const json& v) {
  if (v.is_object() && v.contains("preset")) {
    Node node(v, "model", {"preset"});
    try {
      return preset_spec(node.text("preset"));
    } catch (const PreconditionError& e) {
      throw ConfigError(fmt::format("model.preset: {}", e.what()));
    }
  }
  Node node(v, "model", {"kind", "dim", "drift", "sigma", "noise", "label"});
  if (node.has("kind"))
    require(node.text("kind") == "affine", "model.kind: only 'affine' models are supported");
  ModelSpec spec;
  spec.dim = static_cast<Index>(node.integer("dim"));
  require(spec.dim >= 1, "model.dim must be >= 1");
  if (node.has("label")) spec.label = node.text("label");

  if (node.has("drift")) {
    const json& dv = node.at("drift");
    const std::string kind = dv.is_object() && dv.contains("kind") ? dv.at("kind").get<std::string>() : "linear";
    if (kind == "logistic") {
      Node drift(dv, "model.drift", {"kind"});
      spec.drift = ModelSpec::DriftKind::logistic;
    } else if (kind == "linear") {
      Node drift(dv, "model.drift", {"kind", "A", "v"});
      if (drift.has("A")) spec.drift_matrix = drift.matrix("A");
      if (drift.has("v")) spec.drift_offset = drift.vector("v");
    } else {
      throw ConfigError(fmt::format("model.drift.kind: unknown drift '{}'", kind));
    }
  }
  if (node.has("sigma")) {
    Node sigma(node.at("sigma"), "model.sigma", {"kind", "matrix", "value"});
    const std::string kind = sigma.has("kind") ? sigma.text("kind") : "constant";
    if (kind == "scalar")
      spec.sigma = sigma.number("value") * Matrix::Identity(spec.dim, spec.dim);
    else if (kind == "constant")
      spec.sigma = sigma.matrix("matrix");
    else
      throw ConfigError(fmt::format("model.sigma.kind: unknown sigma '{}'", kind));
  }
  if (node.has("noise")) {
    Node noise(node.at("noise"), "model.noise", {"kind", "p"});
    const std::string kind = noise.text("kind");
    if (kind == "gaussian") {
      spec.noise = ModelSpec::NoiseKind::gaussian;
    } else if (kind == "bernoulli") {
      spec.noise = ModelSpec::NoiseKind::bernoulli;
      spec.bernoulli_p = noise.number("p");
    } else {
      throw ConfigError(fmt::format("model.noise.kind: unknown noise '{}'", kind));
    }
  }
  try {
    return spec.resolved();
  } catch (const PreconditionError& e) {
    throw ConfigError(fmt::format("model: {}", e.what()));
  }
}

json to_json(const ModelSpec& spec) {
  json drift;
  if (spec.drift == ModelSpec::DriftKind::logistic)
    drift = {{"kind", "logistic"}};
  else
    drift = {{"kind", "linear"}, {"A", matrix_json(spec.drift_matrix)}, {"v", vector_json(spec.drift_offset)}};
  json noise = {{"kind", spec.noise == ModelSpec::NoiseKind::gaussian ? "gaussian" : "bernoulli"}};
  if (spec.noise == ModelSpec::NoiseKind::bernoulli) noise["p"] = spec.bernoulli_p;
  return {{"kind", "affine"},
          {"label", spec.label},
          {"dim", spec.dim},
          {"drift", drift},
          {"sigma", {{"kind", "constant"}, {"matrix", matrix_json(spec.sigma)}}},
          {"noise", noise}};
}

SimulateConfig parse_simulate(const json& doc) {
  Node node(doc, "", keys_of(Command::simulate));
  SimulateConfig c;
  c.model = parse_model(node.at("model"));
  c.x = state_vector(node, "x", c.model.dim);
  const auto n = node.integer("n");
  require(n >= 1, "field 'n' must be >= 1");
  c.n = static_cast<Index>(n);
  c.a = perturbation(node);
  c.seed = node.seed("seed");
  const auto replicas = node.integer("replicas", 1);
  require(replicas >= 1, "field 'replicas' must be >= 1");
  c.replicas = static_cast<int>(replicas);
  return c;
}

json to_json(const SimulateConfig& c) {
  return {{"model", to_json(c.model)}, {"x", vector_json(c.x)}, {"n", c.n},
          {"a", c.a}, {"seed", c.seed}, {"replicas", c.replicas}};
}

ActionConfig parse_action(const json& doc) {
  Node node(doc, "", keys_of(Command::action));
  ActionConfig c;
  c.model = parse_model(node.at("model"));
  c.x = state_vector(node, "x", c.model.dim);
  c.a = perturbation(node);
  c.path = node.text("path");
  if (node.has("conjugate")) c.conjugate = parse_conjugate(node.at("conjugate"), "conjugate");
  return c;
}

json to_json(const ActionConfig& c) {
  return {{"model", to_json(c.model)}, {"x", vector_json(c.x)}, {"a", c.a},
          {"path", c.path}, {"conjugate", conjugate_json(c.conjugate)}};
}

MinimizeConfig parse_minimize(const json& doc) {
  Node node(doc, "", keys_of(Command::minimize));
  MinimizeConfig c;
  c.model = parse_model(node.at("model"));
  c.x = state_vector(node, "x", c.model.dim);
  c.a = perturbation(node);
  const json& tv = node.at("terminal");
  const std::string kind = tv.is_object() && tv.contains("kind") && tv.at("kind").is_string()
                               ? tv.at("kind").get<std::string>()
                               : "";
  if (kind == "point") {
    Node t(tv, "terminal", {"kind", "z"});
    c.terminal = TerminalPoint{state_vector(t, "z", c.model.dim)};
  } else if (kind == "halfspace") {
    Node t(tv, "terminal", {"kind", "normal", "level"});
    c.terminal = parse_halfspace(t, c.model.dim);
  } else {
    throw ConfigError("field 'terminal.kind' must be 'point' or 'halfspace'");
  }
  const auto knots = node.integer("knots", 21);
  require(knots >= 2, "field 'knots' must be >= 2");
  c.knots = static_cast<Index>(knots);
  c.solver = parse_solver(node);
  return c;
}

json to_json(const MinimizeConfig& c) {
  json terminal;
  if (const auto* p = std::get_if<TerminalPoint>(&c.terminal))
    terminal = {{"kind", "point"}, {"z", vector_json(p->z)}};
  else {
    const auto& h = std::get<HalfSpace>(c.terminal);
    terminal = {{"kind", "halfspace"}, {"normal", vector_json(h.normal)}, {"level", h.level}};
  }
  return {{"model", to_json(c.model)}, {"x", vector_json(c.x)}, {"a", c.a},
          {"terminal", terminal}, {"knots", c.knots}, {"solver", solver_json(c.solver)}};
}

MartingaleConfig parse_martingale(const json& doc) {
  Node node(doc, "", keys_of(Command::verify_martingale));
  MartingaleConfig c;
  c.model = parse_model(node.at("model"));
  c.x = state_vector(node, "x", c.model.dim);
  c.n_grid = grid(node);
  if (node.has("a") && node.at("a").is_array()) {
    for (const json& v : node.at("a")) {
      require(v.is_number() && v.get<double>() >= 0.0, "field 'a' must hold numbers >= 0");
      c.a_values.push_back(v.get<double>());
    }
    require(!c.a_values.empty(), "field 'a' must not be empty");
  } else {
    c.a_values = {perturbation(node)};
  }
  require(node.has("lambda") != node.has("lambdas"), "exactly one of 'lambda' or 'lambdas' is required");
  if (node.has("lambda")) {
    c.lambdas.push_back(parse_measure(node.at("lambda"), "lambda", c.model.dim));
  } else {
    const json& list = node.at("lambdas");
    require(list.is_array() && !list.empty(), "field 'lambdas' must be a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i)
      c.lambdas.push_back(parse_measure(list[i], fmt::format("lambdas[{}]", i), c.model.dim));
  }
  c.samples = samples(node, c.samples);
  c.seed = node.seed("seed");
  c.z_threshold = node.number("z_threshold", c.z_threshold);
  require(c.z_threshold > 0.0, "field 'z_threshold' must be > 0");
  c.workers = workers(node);
  return c;
}

json to_json(const MartingaleConfig& c) {
  json lambdas = json::array();
  for (const auto& l : c.lambdas) lambdas.push_back(measure_json(l));
  return {{"model", to_json(c.model)}, {"x", vector_json(c.x)}, {"n_grid", grid_json(c.n_grid)},
          {"a", c.a_values}, {"lambdas", lambdas}, {"samples", c.samples}, {"seed", c.seed},
          {"z_threshold", c.z_threshold}, {"workers", c.workers}};
}

RateConfig parse_rate(const json& doc) {
  Node node(doc, "", keys_of(Command::verify_rate));
  RateConfig c;
  c.model = parse_model(node.at("model"));
  c.x = state_vector(node, "x", c.model.dim);
  Node event(node.at("event"), "event", {"kind", "normal", "level"});
  require(event.text("kind") == "terminal-halfspace",
          "field 'event.kind' must be 'terminal-halfspace' for the rate suite");
  c.event = parse_halfspace(event, c.model.dim);
  c.n_grid = node.index_list("n_grid");
  c.samples = samples(node, c.samples);
  c.seed = node.seed("seed");
  const auto knots = node.integer("knots", c.knots);
  require(knots >= 2, "field 'knots' must be >= 2");
  c.knots = static_cast<Index>(knots);
  c.tolerance = node.number("tolerance", c.tolerance);
  require(c.tolerance > 0.0, "field 'tolerance' must be > 0");
  c.solver = parse_solver(node);
  c.workers = workers(node);
  return c;
}

json to_json(const RateConfig& c) {
  return {{"model", to_json(c.model)}, {"x", vector_json(c.x)}, {"event", halfspace_json(c.event)},
          {"n_grid", grid_json(c.n_grid)}, {"samples", c.samples}, {"seed", c.seed},
          {"knots", c.knots}, {"tolerance", c.tolerance}, {"solver", solver_json(c.solver)},
          {"workers", c.workers}};
}

OdeConfig parse_ode(const json& doc) {
  Node node(doc, "", keys_of(Command::verify_ode));
  OdeConfig c;
  c.model = parse_model(node.at("model"));
  c.x = state_vector(node, "x", c.model.dim);
  c.epsilon = node.number("epsilon");
  require(c.epsilon > 0.0, "field 'epsilon' must be > 0");
  c.n_grid = node.index_list("n_grid");
  c.samples = samples(node, c.samples);
  c.seed = node.seed("seed");
  c.max_slope = node.number("max_slope", c.max_slope);
  if (node.has("method")) {
    const std::string method = node.text("method");
    if (method == "automatic")
      c.method = OdeEstimator::automatic;
    else if (method == "naive")
      c.method = OdeEstimator::naive;
    else if (method == "mixture")
      c.method = OdeEstimator::mixture;
    else
      throw ConfigError("field 'method' must be automatic, naive or mixture");
  }
  c.workers = workers(node);
  return c;
}

json to_json(const OdeConfig& c) {
  return {{"model", to_json(c.model)}, {"x", vector_json(c.x)}, {"epsilon", c.epsilon},
          {"n_grid", grid_json(c.n_grid)}, {"samples", c.samples}, {"seed", c.seed},
          {"max_slope", c.max_slope}, {"method", to_string(c.method)}, {"workers", c.workers}};
}

}  // namespace ldp
