#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wdn {

inline constexpr int kStepsPerDay = 96;
inline constexpr double kDefaultDtHours = 0.25;

struct TankSpec {
  std::string id;
  double surface_area = 0.0;  // m²
  double level_max = 0.0;     // m, physical capacity
  double lower_bound = 0.0;   // m, operational soft limit
  double upper_bound = 0.0;   // m, operational soft limit
  double initial_level = 0.0; // m

  double band() const { return upper_bound - lower_bound; }
};

struct FillShare {
  std::size_t tank = 0;
  double fraction = 0.0;
};

struct PumpStationSpec {
  std::string id;
  double max_flow = 0.0;     // m³/h at full speed
  double rated_power = 0.0;  // kW at full speed
  std::vector<FillShare> fills;
  std::optional<std::size_t> draws_from;

  /// Tank receiving the largest fill fraction (first on ties).
  std::size_t primary_tank() const;
};

struct DemandZoneSpec {
  std::string id;
  std::size_t served_by = 0;
  double base_demand = 0.0;  // m³/h
  double morning_peak = 0.0;
  double evening_peak = 0.0;
  double noise_scale = 0.0;  // relative σ
};

/// 96 prices per day, currency/kWh.
struct TariffSchedule {
  std::vector<double> values;

  double at(int t) const { return values.at(static_cast<std::size_t>(t)); }
  double min() const;
  double max() const;
  /// Min-max normalised price in [0,1].
  double normalized(int t) const;
  std::vector<double> normalized() const;
};

struct LevelBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct NetworkTopology {
  std::vector<TankSpec> tanks;
  std::vector<PumpStationSpec> stations;
  std::vector<DemandZoneSpec> zones;
  TariffSchedule tariff;
  double dt_hours = kDefaultDtHours;

  std::size_t tank_count() const { return tanks.size(); }
  std::size_t station_count() const { return stations.size(); }
  std::size_t zone_count() const { return zones.size(); }

  std::vector<LevelBounds> bounds() const;
  std::vector<double> initial_levels() const;

  /// Throws ValidationError naming the offending element.
  void validate() const;
  /// Additionally enforces the default 6/6/18 sizing.
  void validate_default_sizing() const;
};

/// demands[zone][t], m³/h.
struct DemandSet {
  std::vector<std::vector<double>> per_zone;

  std::size_t zone_count() const { return per_zone.size(); }
  std::vector<double> at(int t) const;
  /// Σ over zones and the day, m³.
  double total_volume(double dt_hours) const;
  void validate(std::size_t zones) const;
};

struct HistorySnapshot {
  int day = 0;
  int t = 0;
  std::vector<double> levels;
  std::vector<double> actions;
  std::vector<double> powers;
  std::vector<double> demands;
  double tariff = 0.0;

  bool operator==(const HistorySnapshot&) const = default;
};

struct HistoryArchive {
  std::vector<HistorySnapshot> snapshots;

  int days() const { return static_cast<int>(snapshots.size()) / kStepsPerDay; }
  std::span<const HistorySnapshot> day(int d) const;
  DemandSet day_demands(int d) const;
  std::vector<std::vector<double>> day_actions(int d) const;

  /// Structural checks: whole days, strictly increasing (day,t), finite
  /// values, actions in [0,1], non-negative demands and levels.
  void validate() const;
  /// Adds the per-tank physical capacity check.
  void validate(const NetworkTopology& topology) const;

  bool operator==(const HistoryArchive&) const = default;
};

// Network JSON ---------------------------------------------------------------

NetworkTopology load_network(const std::filesystem::path& config_path);
NetworkTopology parse_network(const std::string& json_text);
std::string network_to_json(const NetworkTopology& topology);
void save_network(const std::filesystem::path& path, const NetworkTopology& topology);

// Synthetic world ------------------------------------------------------------

NetworkTopology generate_synthetic_network(std::uint64_t seed);

/// Diurnal double-peak shape without noise, multiplier on base demand.
double diurnal_shape(const DemandZoneSpec& zone, int t);
DemandSet generate_demands(const NetworkTopology& topology, std::uint64_t seed);

// History CSV ----------------------------------------------------------------

HistoryArchive load_history(const std::filesystem::path& csv_path);
HistoryArchive parse_history(const std::string& csv_text);
std::string history_to_csv(const HistoryArchive& archive);
void save_history(const std::filesystem::path& csv_path, const HistoryArchive& archive);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Writes via a temporary sibling and renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace wdn
