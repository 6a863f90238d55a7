#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "ldp/action.hpp"
#include "ldp/kernel.hpp"
#include "ldp/rare_event.hpp"
#include "ldp/trajectory.hpp"

namespace ldp {

using json = nlohmann::json;

enum class Command { simulate, action, minimize, verify_martingale, verify_rate, verify_ode };

std::string_view to_string(Command command);

struct FieldDoc {
  std::string key;
  std::string description;
  bool required = false;
};

/// Top-level config keys read by a command, in help order. Keys outside this
/// list are rejected when the config is parsed.
const std::vector<FieldDoc>& config_fields(Command command);

/// One-line listing of config_fields for --help output.
std::string describe_fields(Command command);

struct SimulateConfig {
  ModelSpec model;
  Vector x;
  Index n = 0;
  double a = 0.0;
  std::uint64_t seed = 0;
  int replicas = 1;
};

struct ActionConfig {
  ModelSpec model;
  Vector x;
  double a = 0.0;
  std::string path;
  ConjugateSettings conjugate;
};

struct MinimizeConfig {
  ModelSpec model;
  Vector x;
  double a = 0.0;
  std::variant<TerminalPoint, HalfSpace> terminal;
  Index knots = 21;
  MinimizerSettings solver;
};

struct MartingaleConfig {
  ModelSpec model;
  Vector x;
  std::vector<Index> n_grid;
  std::vector<double> a_values;
  std::vector<DualMeasure> lambdas;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  double z_threshold = 4.0;
  int workers = 1;
};

struct RateConfig {
  ModelSpec model;
  Vector x;
  HalfSpace event;
  std::vector<Index> n_grid;
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  Index knots = 41;
  double tolerance = 0.15;
  MinimizerSettings solver;
  int workers = 1;
};

struct OdeConfig {
  ModelSpec model;
  Vector x;
  double epsilon = 0.5;
  std::vector<Index> n_grid;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 0;
  double max_slope = -0.05;
  OdeEstimator method = OdeEstimator::automatic;
  int workers = 1;
};

/// Reads a JSON document from disk. Syntax errors become ConfigError with the
/// parser's line and column.
json load_config_file(const std::filesystem::path& file);

// Each parser validates the document completely: missing required fields,
// wrong types and unknown keys raise ConfigError naming the field.
SimulateConfig parse_simulate(const json& doc);
ActionConfig parse_action(const json& doc);
MinimizeConfig parse_minimize(const json& doc);
MartingaleConfig parse_martingale(const json& doc);
RateConfig parse_rate(const json& doc);
OdeConfig parse_ode(const json& doc);

// Fully explicit echoes of parsed configs (every default filled in).
json to_json(const ModelSpec& spec);
json to_json(const SimulateConfig& c);
json to_json(const ActionConfig& c);
json to_json(const MinimizeConfig& c);
json to_json(const MartingaleConfig& c);
json to_json(const RateConfig& c);
json to_json(const OdeConfig& c);

ModelSpec parse_model(const json& node);

}  // namespace ldp
