#include "wdn/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "wdn/error.hpp"
#include "wdn/random.hpp"

namespace wdn {

using nlohmann::json;

namespace {

std::string tank_label(const NetworkTopology& topo, std::size_t i) {
  return "tank " + std::to_string(i + 1) + " ('" + topo.tanks[i].id + "')";
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::size_t PumpStationSpec::primary_tank() const {
  if (fills.empty()) throw ValidationError("station '" + id + "' fills no tank");
  std::size_t best = 0;
  for (std::size_t k = 1; k < fills.size(); ++k)
    if (fills[k].fraction > fills[best].fraction) best = k;
  return fills[best].tank;
}

double TariffSchedule::min() const { return *std::min_element(values.begin(), values.end()); }
double TariffSchedule::max() const { return *std::max_element(values.begin(), values.end()); }

double TariffSchedule::normalized(int t) const {
  const double lo = min();
  const double hi = max();
  return (at(t) - lo) / (hi - lo);
}

std::vector<double> TariffSchedule::normalized() const {
  const double lo = min();
  const double hi = max();
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out[t] = (values[t] - lo) / (hi - lo);
  return out;
}

std::vector<LevelBounds> NetworkTopology::bounds() const {
  std::vector<LevelBounds> b;
  b.reserve(tanks.size());
  for (const auto& tank : tanks) b.push_back({tank.lower_bound, tank.upper_bound});
  return b;
}

std::vector<double> NetworkTopology::initial_levels() const {
  std::vector<double> v;
  v.reserve(tanks.size());
  for (const auto& tank : tanks) v.push_back(tank.initial_level);
  return v;
}

void NetworkTopology::validate() const {
  if (tanks.empty()) throw ValidationError("network has no tanks");
  if (!(dt_hours > 0.0) || !finite(dt_hours)) throw ValidationError("dt_hours must be positive");
  for (std::size_t i = 0; i < tanks.size(); ++i) {
    const auto& t = tanks[i];
    const auto name = tank_label(*this, i);
    if (!(t.surface_area > 0.0) || !finite(t.surface_area))
      throw ValidationError(name + ": surface_area must be > 0");
    if (!finite(t.level_max) || !finite(t.lower_bound) || !finite(t.upper_bound) ||
        !finite(t.initial_level))
      throw ValidationError(name + ": non-finite level field");
    if (t.lower_bound < 0.0) throw ValidationError(name + ": lower_bound must be >= 0");
    if (!(t.lower_bound < t.upper_bound))
      throw ValidationError(name + ": lower_bound must be < upper_bound");
    if (t.upper_bound > t.level_max)
      throw ValidationError(name + ": upper_bound exceeds level_max_physical");
    if (t.initial_level < 0.0 || t.initial_level > t.level_max)
      throw ValidationError(name + ": initial_level outside [0, level_max_physical]");
  }
  for (const auto& s : stations) {
    const std::string name = "station '" + s.id + "'";
    if (!(s.max_flow > 0.0) || !finite(s.max_flow)) throw ValidationError(name + ": max_flow must be > 0");
    if (!(s.rated_power >= 0.0) || !finite(s.rated_power))
      throw ValidationError(name + ": rated_power must be >= 0");
    if (s.fills.empty()) throw ValidationError(name + ": fills is empty");
    double total = 0.0;
    for (const auto& f : s.fills) {
      if (f.tank >= tanks.size()) throw ValidationError(name + ": fills references unknown tank");
      if (!(f.fraction > 0.0)) throw ValidationError(name + ": fill fraction must be > 0");
      if (s.draws_from && *s.draws_from == f.tank)
        throw ValidationError(name + ": fills and draws from the same tank");
      total += f.fraction;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError(name + ": fill fractions must sum to 1");
    if (s.draws_from && *s.draws_from >= tanks.size())
      throw ValidationError(name + ": draws_from references unknown tank");
  }
  for (const auto& z : zones) {
    const std::string name = "zone '" + z.id + "'";
    if (z.served_by >= tanks.size()) throw ValidationError(name + ": served_by references unknown tank");
    if (!(z.base_demand >= 0.0) || !finite(z.base_demand))
      throw ValidationError(name + ": base_demand must be >= 0");
    if (!(z.noise_scale >= 0.0 && z.noise_scale <= 0.5))
      throw ValidationError(name + ": noise_scale must lie in [0, 0.5]");
    if (!finite(z.morning_peak) || !finite(z.evening_peak))
      throw ValidationError(name + ": non-finite peak multiplier");
  }
  if (tariff.values.size() != static_cast<std::size_t>(kStepsPerDay))
    throw ValidationError("tariff must have exactly 96 values");
  for (double v : tariff.values)
    if (!(v >= 0.0) || !finite(v)) throw ValidationError("tariff values must be finite and >= 0");
  if (!(tariff.min() < tariff.max())) throw ValidationError("tariff must not be constant");
}

void NetworkTopology::validate_default_sizing() const {
  validate();
  if (tanks.size() != 6 || stations.size() != 6 || zones.size() != 18)
    throw ValidationError("expected 6 tanks, 6 stations and 18 zones");
}

std::vector<double> DemandSet::at(int t) const {
  std::vector<double> v(per_zone.size());
  for (std::size_t z = 0; z < per_zone.size(); ++z) v[z] = per_zone[z][static_cast<std::size_t>(t)];
  return v;
}

double DemandSet::total_volume(double dt_hours) const {
  double s = 0.0;
  for (const auto& zone : per_zone)
    for (double d : zone) s += d * dt_hours;
  return s;
}

void DemandSet::validate(std::size_t zones) const {
  if (per_zone.size() != zones) throw ValidationError("demand set zone count mismatch");
  for (std::size_t z = 0; z < per_zone.size(); ++z) {
    if (per_zone[z].size() != static_cast<std::size_t>(kStepsPerDay))
      throw ValidationError("demand zone " + std::to_string(z + 1) + " must have 96 values");
    for (double d : per_zone[z])
      if (!(d >= 0.0) || !finite(d))
        throw ValidationError("demand zone " + std::to_string(z + 1) + " has a negative or non-finite value");
  }
}

// ---------------------------------------------------------------------------

std::span<const HistorySnapshot> HistoryArchive::day(int d) const {
  if (d < 0 || d >= days()) throw ValidationError("day index out of range");
  return std::span<const HistorySnapshot>(snapshots).subspan(
      static_cast<std::size_t>(d) * kStepsPerDay, kStepsPerDay);
}

DemandSet HistoryArchive::day_demands(int d) const {
  const auto rows = day(d);
  DemandSet ds;
  const std::size_t zones = rows.front().demands.size();
  ds.per_zone.assign(zones, std::vector<double>(kStepsPerDay));
  for (int t = 0; t < kStepsPerDay; ++t)
    for (std::size_t z = 0; z < zones; ++z) ds.per_zone[z][t] = rows[t].demands[z];
  return ds;
}

std::vector<std::vector<double>> HistoryArchive::day_actions(int d) const {
  std::vector<std::vector<double>> out;
  out.reserve(kStepsPerDay);
  for (const auto& s : day(d)) out.push_back(s.actions);
  return out;
}

void HistoryArchive::validate() const {
  if (snapshots.empty()) throw ValidationError("history archive is empty");
  if (snapshots.size() % kStepsPerDay != 0) throw ValidationError("history contains a partial day");
  const auto& first = snapshots.front();
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const auto& s = snapshots[k];
    const std::string where = "snapshot " + std::to_string(k) + " (day " + std::to_string(s.day) +
                              ", t " + std::to_string(s.t) + ")";
    if (s.t != static_cast<int>(k % kStepsPerDay)) throw ValidationError(where + ": timestep out of order");
    if (k > 0) {
      const auto& p = snapshots[k - 1];
      const bool increasing = s.day > p.day || (s.day == p.day && s.t > p.t);
      if (!increasing) throw ValidationError(where + ": (day, t) not strictly increasing");
      if (s.t != 0 && s.day != p.day) throw ValidationError(where + ": partial day");
    }
    if (s.levels.size() != first.levels.size() || s.actions.size() != first.actions.size() ||
        s.powers.size() != first.powers.size() || s.demands.size() != first.demands.size())
      throw ValidationError(where + ": inconsistent column counts");
    for (double v : s.levels)
      if (!(v >= 0.0) || !finite(v)) throw ValidationError(where + ": invalid level");
    for (double v : s.actions)
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(where + ": action outside [0,1]");
    for (double v : s.powers)
      if (!(v >= 0.0) || !finite(v)) throw ValidationError(where + ": invalid power");
    for (double v : s.demands)
      if (!(v >= 0.0) || !finite(v)) throw ValidationError(where + ": negative demand");
    if (!(s.tariff >= 0.0) || !finite(s.tariff)) throw ValidationError(where + ": invalid tariff");
  }
}

void HistoryArchive::validate(const NetworkTopology& topology) const {
  validate();
  for (const auto& s : snapshots) {
    if (s.levels.size() != topology.tank_count() || s.actions.size() != topology.station_count() ||
        s.demands.size() != topology.zone_count())
      throw ValidationError("history column counts do not match the network");
    for (std::size_t i = 0; i < s.levels.size(); ++i)
      if (s.levels[i] > topology.tanks[i].level_max)
        throw ValidationError("history level above physical capacity on day " + std::to_string(s.day));
  }
}

// Network JSON ---------------------------------------------------------------

namespace {

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

std::size_t tank_index(const std::map<std::string, std::size_t>& ids, const std::string& id,
                       const std::string& where) {
  auto it = ids.find(id);
  if (it == ids.end()) throw ValidationError(where + ": references unknown tank '" + id + "'");
  return it->second;
}

}  // namespace

NetworkTopology parse_network(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("network JSON is malformed: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("network JSON must be an object");
  for (const char* key : {"tanks", "stations", "zones", "tariff", "dt_hours"})
    if (!doc.contains(key)) throw ParseError(std::string("network JSON is missing '") + key + "'");

  NetworkTopology topo;
  topo.dt_hours = field<double>(doc, "dt_hours", "network");
  std::map<std::string, std::size_t> ids;
  std::size_t k = 0;
  for (const auto& t : doc.at("tanks")) {
    const std::string where = "tank " + std::to_string(k + 1);
    TankSpec tank;
    tank.id = field<std::string>(t, "id", where);
    tank.surface_area = field<double>(t, "surface_area", where);
    tank.level_max = field<double>(t, "level_max_physical", where);
    tank.lower_bound = field<double>(t, "lower_bound", where);
    tank.upper_bound = field<double>(t, "upper_bound", where);
    tank.initial_level = field<double>(t, "initial_level", where);
    if (!ids.emplace(tank.id, k).second) throw ValidationError(where + ": duplicate tank id '" + tank.id + "'");
    topo.tanks.push_back(std::move(tank));
    ++k;
  }
  k = 0;
  for (const auto& s : doc.at("stations")) {
    const std::string where = "station " + std::to_string(++k);
    PumpStationSpec st;
    st.id = field<std::string>(s, "id", where);
    st.max_flow = field<double>(s, "max_flow", where);
    st.rated_power = field<double>(s, "rated_power", where);
    if (!s.contains("fills") || !s.at("fills").is_array()) throw ParseError(where + ": 'fills' must be an array");
    for (const auto& f : s.at("fills"))
      st.fills.push_back({tank_index(ids, field<std::string>(f, "tank", where), where),
                          field<double>(f, "fraction", where)});
    if (s.contains("draws_from") && !s.at("draws_from").is_null())
      st.draws_from = tank_index(ids, field<std::string>(s, "draws_from", where), where);
    topo.stations.push_back(std::move(st));
  }
  k = 0;
  for (const auto& z : doc.at("zones")) {
    const std::string where = "zone " + std::to_string(++k);
    DemandZoneSpec zone;
    zone.id = field<std::string>(z, "id", where);
    zone.served_by = tank_index(ids, field<std::string>(z, "served_by", where), where);
    zone.base_demand = field<double>(z, "base_demand", where);
    if (!z.contains("peak_multipliers")) throw ParseError(where + ": missing field 'peak_multipliers'");
    zone.morning_peak = field<double>(z.at("peak_multipliers"), "morning", where);
    zone.evening_peak = field<double>(z.at("peak_multipliers"), "evening", where);
    zone.noise_scale = field<double>(z, "noise_scale", where);
    topo.zones.push_back(std::move(zone));
  }
  try {
    topo.tariff.values = doc.at("tariff").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ParseError("tariff must be an array of numbers");
  }
  topo.validate();
  return topo;
}

NetworkTopology load_network(const std::filesystem::path& config_path) {
  return parse_network(read_file(config_path));
}

std::string network_to_json(const NetworkTopology& topo) {
  json doc;
  doc["dt_hours"] = topo.dt_hours;
  doc["tanks"] = json::array();
  for (const auto& t : topo.tanks)
    doc["tanks"].push_back({{"id", t.id},
                            {"surface_area", t.surface_area},
                            {"level_max_physical", t.level_max},
                            {"lower_bound", t.lower_bound},
                            {"upper_bound", t.upper_bound},
                            {"initial_level", t.initial_level}});
  doc["stations"] = json::array();
  for (const auto& s : topo.stations) {
    json fills = json::array();
    for (const auto& f : s.fills) fills.push_back({{"tank", topo.tanks[f.tank].id}, {"fraction", f.fraction}});
    doc["stations"].push_back({{"id", s.id},
                               {"max_flow", s.max_flow},
                               {"rated_power", s.rated_power},
                               {"fills", fills},
                               {"draws_from", s.draws_from ? json(topo.tanks[*s.draws_from].id) : json(nullptr)}});
  }
  doc["zones"] = json::array();
  for (const auto& z : topo.zones)
    doc["zones"].push_back({{"id", z.id},
                            {"served_by", topo.tanks[z.served_by].id},
                            {"base_demand", z.base_demand},
                            {"peak_multipliers", {{"morning", z.morning_peak}, {"evening", z.evening_peak}}},
                            {"noise_scale", z.noise_scale}});
  doc["tariff"] = topo.tariff.values;
  return doc.dump(2) + "\n";
}

void save_network(const std::filesystem::path& path, const NetworkTopology& topology) {
  write_file_atomic(path, network_to_json(topology));
}

// Synthetic world ------------------------------------------------------------

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Hydraulic power at full speed: ρ g Q H / η, Q in m³/h, result in kW.
double hydraulic_power_kw(double flow_m3h, double head_m, double efficiency) {
  return 9.81 * (flow_m3h / 3600.0) * head_m / efficiency;
}

}  // namespace

NetworkTopology generate_synthetic_network(std::uint64_t seed) {
  Rng rng(derive_seed({stream::kNetwork, seed}));
  NetworkTopology topo;
  topo.dt_hours = kDefaultDtHours;

  for (int i = 0; i < 6; ++i) {
    TankSpec t;
    t.id = "T" + std::to_string(i + 1);
    t.surface_area = uniform(rng, 800.0, 1400.0);
    t.level_max = 6.0 + uniform(rng, -0.5, 0.5);
    t.lower_bound = 1.2 + uniform(rng, 0.0, 0.4);
    t.upper_bound = t.level_max - 1.2 - uniform(rng, 0.0, 0.4);
    t.initial_level = 0.5 * (t.lower_bound + t.upper_bound);
    topo.tanks.push_back(t);
  }

  std::vector<double> mean_demand(6, 0.0);
  for (int z = 0; z < 18; ++z) {
    DemandZoneSpec zone;
    zone.id = "Z" + std::to_string(z + 1);
    zone.served_by = static_cast<std::size_t>(z / 3);
    zone.base_demand = uniform(rng, 60.0, 100.0);
    zone.morning_peak = uniform(rng, 0.6, 0.9);
    zone.evening_peak = uniform(rng, 0.4, 0.7);
    zone.noise_scale = 0.08;
    double shape = 0.0;
    for (int t = 0; t < kStepsPerDay; ++t) shape += diurnal_shape(zone, t);
    mean_demand[zone.served_by] += zone.base_demand * shape / kStepsPerDay;
    topo.zones.push_back(zone);
  }

  // Stations 5 and 6 boost out of tanks 1 and 2; station 3 splits its
  // delivery between tanks 3 and 4. Capacity is sized at ~2.2x the mean
  // load each station carries.
  constexpr double kCapacityFactor = 2.2;
  std::vector<PumpStationSpec> st(6);
  for (int i = 0; i < 6; ++i) {
    st[i].id = "P" + std::to_string(i + 1);
    st[i].fills = {{static_cast<std::size_t>(i), 1.0}};
  }
  st[4].draws_from = 0;
  st[5].draws_from = 1;
  st[2].fills = {{2, 0.7}, {3, 0.3}};
  st[4].max_flow = kCapacityFactor * mean_demand[4];
  st[5].max_flow = kCapacityFactor * mean_demand[5];
  st[0].max_flow = kCapacityFactor * (mean_demand[0] + mean_demand[4]);
  st[1].max_flow = kCapacityFactor * (mean_demand[1] + mean_demand[5]);
  st[2].max_flow = kCapacityFactor * mean_demand[2] / 0.7;
  st[3].max_flow = kCapacityFactor * mean_demand[3];
  for (auto& s : st) {
    const double head = uniform(rng, 30.0, 60.0);
    s.rated_power = hydraulic_power_kw(s.max_flow, head, 0.75);
  }
  topo.stations = std::move(st);

  // Two-tier tariff: cheap 22:00-06:00, expensive otherwise, ±10% jitter.
  topo.tariff.values.resize(kStepsPerDay);
  for (int t = 0; t < kStepsPerDay; ++t) {
    const bool night = t < 24 || t >= 88;
    const double base = night ? 0.08 : 0.20;
    topo.tariff.values[t] = base * (1.0 + uniform(rng, -0.1, 0.1));
  }
  topo.validate_default_sizing();
  return topo;
}

double diurnal_shape(const DemandZoneSpec& zone, int t) {
  const double h = (t + 0.5) * 24.0 / kStepsPerDay;
  const auto bump = [h](double centre, double width) {
    const double x = (h - centre) / width;
    return std::exp(-0.5 * x * x);
  };
  return 1.0 + zone.morning_peak * bump(7.5, 1.5) + zone.evening_peak * bump(19.5, 2.0);
}

DemandSet generate_demands(const NetworkTopology& topology, std::uint64_t seed) {
  Rng rng(derive_seed({stream::kDemand, seed}));
  std::normal_distribution<double> normal(0.0, 1.0);
  DemandSet ds;
  ds.per_zone.resize(topology.zone_count());
  for (std::size_t z = 0; z < topology.zone_count(); ++z) {
    const auto& zone = topology.zones[z];
    auto& series = ds.per_zone[z];
    series.resize(kStepsPerDay);
    for (int t = 0; t < kStepsPerDay; ++t) {
      // Draw unconditionally so the stream stays aligned across zones.
      const double noise = normal(rng);
      const double v = zone.base_demand * diurnal_shape(zone, t) * (1.0 + zone.noise_scale * noise);
      series[t] = std::max(0.0, v);
    }
  }
  return ds;
}

// History CSV ----------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> history_header(std::size_t tanks, std::size_t stations, std::size_t zones) {
  std::vector<std::string> h{"day", "t"};
  for (std::size_t i = 1; i <= tanks; ++i) h.push_back("level_" + std::to_string(i));
  for (std::size_t i = 1; i <= stations; ++i) h.push_back("action_" + std::to_string(i));
  for (std::size_t i = 1; i <= stations; ++i) h.push_back("power_" + std::to_string(i));
  for (std::size_t i = 1; i <= zones; ++i) h.push_back("demand_" + std::to_string(i));
  h.push_back("tariff");
  return h;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::size_t count_prefix(const std::vector<std::string>& header, const std::string& prefix) {
  return static_cast<std::size_t>(std::count_if(header.begin(), header.end(), [&](const std::string& h) {
    return h.rfind(prefix, 0) == 0;
  }));
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError("history row " + std::to_string(line_no) + ": column '" + column + "' is not a number");
  return v;
}

}  // namespace

HistoryArchive parse_history(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("history CSV is empty (header row required)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const std::size_t tanks = count_prefix(header, "level_");
  const std::size_t stations = count_prefix(header, "action_");
  const std::size_t zones = count_prefix(header, "demand_");
  const auto expected = history_header(tanks, stations, zones);
  for (const auto& col : expected)
    if (std::find(header.begin(), header.end(), col) == header.end())
      throw ParseError("history CSV is missing column '" + col + "'");
  if (header != expected) throw ParseError("history CSV columns are not in the documented order");
  if (tanks == 0 || stations == 0) throw ParseError("history CSV has no level or action columns");

  HistoryArchive archive;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != expected.size())
      throw ParseError("history row " + std::to_string(line_no) + ": expected " +
                       std::to_string(expected.size()) + " cells, got " + std::to_string(cells.size()));
    std::vector<double> v(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) v[c] = parse_number(cells[c], line_no, expected[c]);
    HistorySnapshot s;
    s.day = static_cast<int>(v[0]);
    s.t = static_cast<int>(v[1]);
    if (s.day != v[0] || s.t != v[1] || s.t < 0 || s.t >= kStepsPerDay)
      throw ValidationError("history row " + std::to_string(line_no) + ": invalid day/t");
    std::size_t c = 2;
    const auto take = [&](std::size_t n) {
      std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(c),
                              v.begin() + static_cast<std::ptrdiff_t>(c + n));
      c += n;
      return out;
    };
    s.levels = take(tanks);
    s.actions = take(stations);
    s.powers = take(stations);
    s.demands = take(zones);
    s.tariff = v[c];
    for (double d : s.demands)
      if (d < 0.0) throw ValidationError("history row " + std::to_string(line_no) + ": negative demand");
    for (double a : s.actions)
      if (a < 0.0 || a > 1.0)
        throw ValidationError("history row " + std::to_string(line_no) + ": action outside [0,1]");
    for (double l : s.levels)
      if (l < 0.0) throw ValidationError("history row " + std::to_string(line_no) + ": negative level");
    archive.snapshots.push_back(std::move(s));
  }

  // Day completeness is checked per day so the error names the short day.
  std::map<int, int> per_day;
  for (const auto& s : archive.snapshots) ++per_day[s.day];
  for (const auto& [day, count] : per_day)
    if (count != kStepsPerDay)
      throw ValidationError("history day " + std::to_string(day) + " is partial: " + std::to_string(count) +
                            " rows, expected 96");
  archive.validate();
  return archive;
}

HistoryArchive load_history(const std::filesystem::path& csv_path) { return parse_history(read_file(csv_path)); }

std::string history_to_csv(const HistoryArchive& archive) {
  if (archive.snapshots.empty()) return {};
  const auto& first = archive.snapshots.front();
  const auto header = history_header(first.levels.size(), first.actions.size(), first.demands.size());
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  for (const auto& s : archive.snapshots) {
    out += std::to_string(s.day);
    out += ',';
    out += std::to_string(s.t);
    for (const auto* block : {&s.levels, &s.actions, &s.powers, &s.demands})
      for (double v : *block) {
        out += ',';
        out += format_double(v);
      }
    out += ',';
    out += format_double(s.tariff);
    out += '\n';
  }
  return out;
}

void save_history(const std::filesystem::path& csv_path, const HistoryArchive& archive) {
  write_file_atomic(csv_path, history_to_csv(archive));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace wdn
