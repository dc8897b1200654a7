#include "wdn/query.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "wdn/error.hpp"

namespace wdn {

std::vector<std::string> query_feature_names(const NetworkTopology& topology, const QueryConfig& config) {
  std::vector<std::string> names;
  for (const auto& t : topology.tanks) names.push_back("level_" + t.id);
  names.push_back("network_volume");
  if (config.per_zone_demand) {
    for (const auto& z : topology.zones) names.push_back("demand_" + z.id);
  } else {
    names.push_back("forecast_demand");
  }
  return names;
}

std::vector<double> raw_query_feature(const NetworkTopology& topology, std::span<const double> levels,
                                      const DemandSet& forecast, const QueryConfig& config) {
  if (levels.size() != topology.tank_count()) throw ValidationError("query level count does not match the network");
  std::vector<double> f(levels.begin(), levels.end());
  double volume = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) volume += levels[i] * topology.tanks[i].surface_area;
  f.push_back(volume);
  if (config.per_zone_demand) {
    for (const auto& zone : forecast.per_zone) {
      double v = 0.0;
      for (double d : zone) v += d * topology.dt_hours;
      f.push_back(v);
    }
  } else {
    f.push_back(forecast.total_volume(topology.dt_hours));
  }
  for (double v : f)
    if (!std::isfinite(v)) throw ValidationError("query feature is not finite");
  return f;
}

QueryIndex QueryIndex::from_raw(std::vector<std::string> names, const std::vector<std::vector<double>>& raw_rows,
                                std::vector<int> days, std::vector<ControlSchedule> schedules, QueryConfig config) {
  if (raw_rows.empty()) throw ValidationError("cannot build a query index from an empty archive");
  const std::size_t dim = names.size();
  QueryIndex idx;
  idx.config = config;
  idx.feature_names = std::move(names);
  idx.feature_min.assign(dim, raw_rows.front().at(0));
  idx.feature_max.assign(dim, raw_rows.front().at(0));
  for (std::size_t j = 0; j < dim; ++j) {
    idx.feature_min[j] = idx.feature_max[j] = raw_rows.front().at(j);
    for (const auto& r : raw_rows) {
      if (r.size() != dim) throw ValidationError("query feature rows have inconsistent sizes");
      idx.feature_min[j] = std::min(idx.feature_min[j], r[j]);
      idx.feature_max[j] = std::max(idx.feature_max[j], r[j]);
    }
    if (!(idx.feature_min[j] < idx.feature_max[j]))
      throw ValidationError("query feature '" + idx.feature_names[j] + "' is constant across the archive");
  }
  idx.days = std::move(days);
  idx.schedules = std::move(schedules);
  for (const auto& r : raw_rows) idx.rows.push_back(idx.normalize(r));
  return idx;
}

std::vector<double> QueryIndex::normalize(std::span<const double> raw) const {
  if (raw.size() != feature_min.size()) throw ValidationError("query feature dimension mismatch");
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j)
    out[j] = std::clamp((raw[j] - feature_min[j]) / (feature_max[j] - feature_min[j]), 0.0, 1.0);
  return out;
}

std::string QueryIndex::to_json() const {
  nlohmann::json doc{{"features", feature_names},
                     {"per_zone_demand", config.per_zone_demand},
                     {"feature_min", feature_min},
                     {"feature_max", feature_max},
                     {"days", days},
                     {"rows", rows}};
  return doc.dump(2) + "\n";
}

QueryIndex build_index(const NetworkTopology& topology, const HistoryArchive& archive, const QueryConfig& config) {
  if (archive.snapshots.empty()) throw ValidationError("cannot build a query index from an empty archive");
  archive.validate(topology);
  std::vector<std::vector<double>> raw;
  std::vector<int> days;
  std::vector<ControlSchedule> schedules;
  for (int d = 0; d < archive.days(); ++d) {
    const auto day = archive.day(d);
    raw.push_back(raw_query_feature(topology, day.front().levels, archive.day_demands(d), config));
    days.push_back(day.front().day);
    schedules.push_back(archive.day_actions(d));
  }
  return QueryIndex::from_raw(query_feature_names(topology, config), raw, std::move(days), std::move(schedules),
                              config);
}

QueryResult recommend_feature(const QueryIndex& index, std::span<const double> raw_feature) {
  if (index.rows.empty()) throw ValidationError("query index is empty");
  const auto q = index.normalize(raw_feature);
  std::size_t best = 0;
  double best_d2 = INFINITY;
  for (std::size_t r = 0; r < index.rows.size(); ++r) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double diff = index.rows[r][j] - q[j];
      d2 += diff * diff;
    }
    const auto day_of = [&](std::size_t k) { return index.days.empty() ? static_cast<int>(k) : index.days[k]; };
    if (d2 < best_d2 || (d2 == best_d2 && day_of(r) > day_of(best))) {
      best_d2 = d2;
      best = r;
    }
  }
  QueryResult res;
  res.row = best;
  res.day = index.days.empty() ? static_cast<int>(best) : index.days[best];
  res.distance = std::sqrt(best_d2);
  if (best < index.schedules.size()) res.schedule = index.schedules[best];
  return res;
}

QueryResult recommend(const QueryIndex& index, const NetworkTopology& topology, std::span<const double> levels,
                      const DemandSet& forecast) {
  return recommend_feature(index, raw_query_feature(topology, levels, forecast, index.config));
}

}  // namespace wdn
