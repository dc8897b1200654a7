#pragma once

#include <span>
#include <string>
#include <vector>

#include "wdn/model.hpp"
#include "wdn/simulator.hpp"

namespace wdn {

struct QueryConfig {
  /// Use one demand feature per zone instead of the network total.
  bool per_zone_demand = false;
  bool operator==(const QueryConfig&) const = default;
};

/// Nearest-day lookup over day-start snapshots of a history archive.
/// Features: tank levels, network volume Σ level·area and forecast demand
/// volume over the next 24 h, each min-max normalised over the archive.
struct QueryIndex {
  QueryConfig config;
  std::vector<std::string> feature_names;
  std::vector<double> feature_min;
  std::vector<double> feature_max;
  std::vector<std::vector<double>> rows;  // normalised, one per archived day
  std::vector<int> days;
  std::vector<ControlSchedule> schedules;

  /// Normalises raw feature rows. Throws ValidationError on an empty input or
  /// a constant feature (named in the message).
  static QueryIndex from_raw(std::vector<std::string> names, const std::vector<std::vector<double>>& raw_rows,
                             std::vector<int> days, std::vector<ControlSchedule> schedules,
                             QueryConfig config = {});

  /// Normalised and clipped into [0,1].
  std::vector<double> normalize(std::span<const double> raw) const;
  std::size_t size() const { return rows.size(); }
  std::string to_json() const;

  bool operator==(const QueryIndex&) const = default;
};

std::vector<std::string> query_feature_names(const NetworkTopology& topology, const QueryConfig& config = {});
std::vector<double> raw_query_feature(const NetworkTopology& topology, std::span<const double> levels,
                                      const DemandSet& forecast, const QueryConfig& config = {});

/// One row per archived day, built from the day's t=0 snapshot and the
/// demands recorded for that day.
QueryIndex build_index(const NetworkTopology& topology, const HistoryArchive& archive, const QueryConfig& config = {});

struct QueryResult {
  int day = 0;
  std::size_t row = 0;
  double distance = 0.0;
  ControlSchedule schedule;
};

/// Exact nearest neighbour by Euclidean distance; ties go to the later day.
QueryResult recommend_feature(const QueryIndex& index, std::span<const double> raw_feature);
QueryResult recommend(const QueryIndex& index, const NetworkTopology& topology, std::span<const double> levels,
                      const DemandSet& forecast);

}  // namespace wdn
