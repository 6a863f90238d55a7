#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ldp/action.hpp"
#include "ldp/halfspace.hpp"
#include "ldp/rare_event.hpp"
#include "ldp/trajectory.hpp"

namespace ldp {

using json = nlohmann::json;

/// Finite numbers as-is; infinities as the strings "+inf" / "-inf".
json real_json(double value);

json to_json(const HalfSpace& event);
json to_json(const EstimateReport& report);
json to_json(const RateReport& report);
json to_json(const OdeReport& report);

struct MartingaleCase {
  Index n = 0;
  double a = 0.0;
  std::size_t lambda = 0;  // index into the config's lambda list
  MeanEstimate estimate;
  double z_score = 0.0;    // |mean - 1| / stderr, 0 when stderr = 0 and mean = 1
  bool passed = true;
};

json to_json(const MartingaleCase& c);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& file, const json& doc);

/// CSV with header t,x1..xd and one row per knot.
void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& path);

/// Reads write_trajectory_csv output. The t column must be the uniform grid k/n.
Trajectory read_trajectory_csv(const std::filesystem::path& file);

void write_iteration_log(const std::filesystem::path& file, const std::vector<IterationRecord>& log);
void write_rate_csv(const std::filesystem::path& file, const RateReport& report);
void write_ode_csv(const std::filesystem::path& file, const OdeReport& report);
void write_martingale_csv(const std::filesystem::path& file, const std::vector<MartingaleCase>& cases);

}  // namespace ldp
