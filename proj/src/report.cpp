#include "ldp/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ldp/errors.hpp"

namespace ldp {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? real_json(*v) : json(nullptr); }

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", file.string()));
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", where, cell));
  }
}

}  // namespace

json real_json(double value) {
  if (std::isinf(value)) return value > 0 ? "+inf" : "-inf";
  if (std::isnan(value)) return "nan";
  return value;
}

json to_json(const HalfSpace& event) {
  return {{"kind", "terminal-halfspace"},
          {"normal", std::vector<double>(event.normal.data(), event.normal.data() + event.normal.size())},
          {"level", event.level}};
}

json to_json(const EstimateReport& r) {
  return {{"n", r.n},
          {"samples", r.samples},
          {"hits", r.hits},
          {"p_hat", r.p_hat},
          {"stderr", r.std_error},
          {"empirical_rate", opt_json(r.empirical_rate)},
          {"predicted_rate", opt_json(r.predicted_rate)},
          {"method", to_string(r.method)},
          {"seed", r.seed},
          {"workers", r.workers}};
}

json to_json(const RateReport& r) {
  json points = json::array();
  for (const RatePoint& p : r.points) {
    json e = to_json(p.estimate);
    e["relative_gap"] = opt_json(p.relative_gap);
    points.push_back(std::move(e));
  }
  return {{"predicted_rate", r.predicted_rate},
          {"minimizer_status", to_string(r.minimizer_status)},
          {"points", points},
          {"trend_ok", r.trend_ok},
          {"flagged_violations", r.flagged_violations},
          {"failures", r.failures},
          {"passed", r.passed()}};
}

json to_json(const OdeReport& r) {
  json points = json::array();
  for (const OdePoint& p : r.points)
    points.push_back({{"n", p.n}, {"q_hat", p.q_hat}, {"stderr", p.std_error}, {"hits", p.hits},
                      {"censored", p.censored}, {"method", to_string(p.method)}});
  return {{"points", points},
          {"slope", opt_json(r.slope)},
          {"intercept", opt_json(r.intercept)},
          {"decreasing", r.decreasing},
          {"failures", r.failures},
          {"passed", r.passed()}};
}

json to_json(const MartingaleCase& c) {
  return {{"n", c.n},
          {"a", c.a},
          {"lambda", c.lambda},
          {"mean", c.estimate.mean},
          {"stderr", c.estimate.std_error},
          {"samples", c.estimate.samples},
          {"z_score", real_json(c.z_score)},
          {"passed", c.passed}};
}

void write_json(const std::filesystem::path& file, const json& doc) {
  auto out = open_out(file);
  out << doc.dump(2) << "\n";
}

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& path) {
  auto out = open_out(file);
  out << "t";
  for (Index i = 1; i <= path.dim(); ++i) out << ",x" << i;
  out << "\n";
  for (Index k = 0; k <= path.steps(); ++k) {
    out << num(path.time(k));
    for (Index i = 0; i < path.dim(); ++i) out << "," << num(path.knots()(i, k));
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot open path file '{}'", file.string()));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(fmt::format("{}: empty file", file.string()));
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "t")
    throw ConfigError(fmt::format("{}: header must be t,x1..xd", file.string()));
  const auto dim = static_cast<Index>(header.size() - 1);

  std::vector<double> times;
  std::vector<Vector> rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = fmt::format("{}:{}", file.string(), row);
    if (static_cast<Index>(cells.size()) != dim + 1)
      throw ConfigError(fmt::format("{}: expected {} columns", where, dim + 1));
    times.push_back(parse_cell(cells[0], where));
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = parse_cell(cells[static_cast<std::size_t>(i + 1)], where);
    rows.push_back(std::move(v));
  }
  if (rows.size() < 2) throw ConfigError(fmt::format("{}: need at least two rows", file.string()));
  const auto n = static_cast<Index>(rows.size() - 1);
  Matrix knots(dim, n + 1);
  for (Index k = 0; k <= n; ++k) {
    if (std::abs(times[static_cast<std::size_t>(k)] - static_cast<double>(k) / n) > 1e-9)
      throw ConfigError(fmt::format("{}: row {} has t = {}, expected the uniform grid k/{}", file.string(),
                                    k + 2, times[static_cast<std::size_t>(k)], n));
    knots.col(k) = rows[static_cast<std::size_t>(k)];
  }
  return Trajectory(std::move(knots));
}

void write_iteration_log(const std::filesystem::path& file, const std::vector<IterationRecord>& log) {
  auto out = open_out(file);
  out << "iter,value,gradient_norm,step\n";
  for (const auto& r : log)
    out << r.iteration << "," << num(r.value) << "," << num(r.gradient_norm) << "," << num(r.step) << "\n";
}

void write_rate_csv(const std::filesystem::path& file, const RateReport& report) {
  auto out = open_out(file);
  out << "n,samples,hits,p_hat,stderr,empirical_rate,predicted_rate,relative_gap\n";
  for (const auto& p : report.points) {
    const auto& e = p.estimate;
    out << e.n << "," << e.samples << "," << e.hits << "," << num(e.p_hat) << "," << num(e.std_error) << ","
        << opt(e.empirical_rate) << "," << opt(e.predicted_rate) << "," << opt(p.relative_gap) << "\n";
  }
}

void write_ode_csv(const std::filesystem::path& file, const OdeReport& report) {
  auto out = open_out(file);
  out << "n,q_hat,stderr,hits,censored,method\n";
  for (const auto& p : report.points)
    out << p.n << "," << num(p.q_hat) << "," << num(p.std_error) << "," << p.hits << ","
        << (p.censored ? 1 : 0) << "," << to_string(p.method) << "\n";
}

void write_martingale_csv(const std::filesystem::path& file, const std::vector<MartingaleCase>& cases) {
  auto out = open_out(file);
  out << "n,a,lambda,mean,stderr,z_score,passed\n";
  for (const auto& c : cases)
    out << c.n << "," << num(c.a) << "," << c.lambda << "," << num(c.estimate.mean) << ","
        << num(c.estimate.std_error) << "," << num(c.z_score) << "," << (c.passed ? 1 : 0) << "\n";
}

}  // namespace ldp
