#include "wdn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "wdn/error.hpp"

namespace wdn {

ViolationMetrics& ViolationMetrics::operator+=(const ViolationMetrics& o) {
  area_outside_boundary += o.area_outside_boundary;
  violation_count += o.violation_count;
  total_cost += o.total_cost;
  return *this;
}

double exceedance(double level, const LevelBounds& bounds) {
  return std::max({0.0, bounds.lower - level, level - bounds.upper});
}

namespace {

void check_range(const Trajectory& traj, int first_step, int last_step) {
  if (first_step < 0 || last_step < first_step || static_cast<std::size_t>(last_step) >= traj.states.size())
    throw ValidationError("metric step range outside the trajectory");
}

}  // namespace

double area_outside_boundary(const Trajectory& traj, std::span<const LevelBounds> bounds, double dt_hours,
                             int first_step, int last_step) {
  check_range(traj, first_step, last_step);
  double area = 0.0;
  for (int k = first_step + 1; k <= last_step; ++k) {
    const auto& levels = traj.states[static_cast<std::size_t>(k)].levels;
    for (std::size_t i = 0; i < bounds.size(); ++i) area += exceedance(levels[i], bounds[i]) * dt_hours;
  }
  return area;
}

long violation_count(const Trajectory& traj, std::span<const LevelBounds> bounds, int first_step, int last_step) {
  check_range(traj, first_step, last_step);
  long count = 0;
  for (int k = first_step + 1; k <= last_step; ++k) {
    const auto& levels = traj.states[static_cast<std::size_t>(k)].levels;
    for (std::size_t i = 0; i < bounds.size(); ++i)
      if (levels[i] < bounds[i].lower || levels[i] > bounds[i].upper) ++count;
  }
  return count;
}

double episode_cost(const Trajectory& traj) {
  double cost = 0.0;
  for (const auto& out : traj.outputs)
    for (double e : out.energies) cost += e * out.tariff;
  return cost;
}

ViolationMetrics measure(const Trajectory& traj, const NetworkTopology& topology) {
  const auto bounds = topology.bounds();
  const int last = static_cast<int>(traj.states.size()) - 1;
  return {area_outside_boundary(traj, bounds, topology.dt_hours, 0, last), violation_count(traj, bounds, 0, last),
          episode_cost(traj)};
}

MapeResult mape(const Trajectory& sim, const Trajectory& ref) {
  if (sim.states.size() != ref.states.size() || sim.states.empty())
    throw ValidationError("mape needs trajectories of equal, non-zero length");
  constexpr double kFloor = 1e-6;
  const std::size_t tanks = ref.states.front().levels.size();
  MapeResult r;
  r.per_tank.assign(tanks, 0.0);
  for (std::size_t k = 0; k < ref.states.size(); ++k)
    for (std::size_t i = 0; i < tanks; ++i) {
      const double a = sim.states[k].levels[i];
      const double b = ref.states[k].levels[i];
      r.per_tank[i] += std::abs(a - b) / std::max(std::abs(b), kFloor) * 100.0;
    }
  for (auto& v : r.per_tank) v /= static_cast<double>(ref.states.size());
  double s = 0.0;
  for (double v : r.per_tank) s += v;
  r.mean = s / static_cast<double>(tanks);
  return r;
}

ViolationMetrics EvaluationResult::totals() const {
  ViolationMetrics t;
  for (const auto& e : episodes) t += e;
  return t;
}

ViolationMetrics EvaluationResult::means() const {
  ViolationMetrics t = totals();
  if (episodes.empty()) return t;
  const double n = static_cast<double>(episodes.size());
  t.area_outside_boundary /= n;
  t.total_cost /= n;
  t.violation_count = static_cast<long>(std::lround(static_cast<double>(t.violation_count) / n));
  return t;
}

std::optional<double> improvement_pct(double reference, double value) {
  if (!(reference > 0.0)) return std::nullopt;
  return (reference - value) / reference * 100.0;
}

std::vector<ComparisonRow> compare(const std::vector<EvaluationResult>& rows, const EvaluationResult& reference) {
  const auto make_row = [&](const EvaluationResult& r) {
    if (r.pool_id != reference.pool_id || r.episodes.size() != reference.episodes.size())
      throw ValidationError("evaluation '" + r.label + "' was run on a different episode pool");
    const auto ref = reference.totals();
    ComparisonRow row;
    row.label = r.label;
    row.totals = r.totals();
    row.episodes = r.episodes.size();
    row.area_improvement_pct = improvement_pct(ref.area_outside_boundary, row.totals.area_outside_boundary);
    row.count_improvement_pct =
        improvement_pct(static_cast<double>(ref.violation_count), static_cast<double>(row.totals.violation_count));
    if (ref.total_cost > 0.0) row.cost_delta_pct = (row.totals.total_cost - ref.total_cost) / ref.total_cost * 100.0;
    return row;
  };
  std::vector<ComparisonRow> table;
  table.push_back(make_row(reference));
  for (const auto& r : rows) table.push_back(make_row(r));
  return table;
}

namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string("n/a"); }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string comparison_to_csv(const std::vector<ComparisonRow>& table) {
  std::ostringstream out;
  out << "label,episodes,area_outside_boundary,violation_count,total_cost,area_improvement_pct,"
         "count_improvement_pct,cost_delta_pct\n";
  for (const auto& r : table)
    out << r.label << ',' << r.episodes << ',' << format_double(r.totals.area_outside_boundary) << ','
        << r.totals.violation_count << ',' << format_double(r.totals.total_cost) << ','
        << opt_cell(r.area_improvement_pct) << ',' << opt_cell(r.count_improvement_pct) << ','
        << opt_cell(r.cost_delta_pct) << '\n';
  return out.str();
}

std::string comparison_to_json(const std::vector<ComparisonRow>& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table)
    rows.push_back({{"label", r.label},
                    {"episodes", r.episodes},
                    {"area_outside_boundary", r.totals.area_outside_boundary},
                    {"violation_count", r.totals.violation_count},
                    {"total_cost", r.totals.total_cost},
                    {"area_improvement_pct", opt_json(r.area_improvement_pct)},
                    {"count_improvement_pct", opt_json(r.count_improvement_pct)},
                    {"cost_delta_pct", opt_json(r.cost_delta_pct)}});
  return nlohmann::json{{"rows", rows}}.dump(2) + "\n";
}

}  // namespace wdn
