#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wdn/model.hpp"
#include "wdn/simulator.hpp"

namespace wdn {

struct ViolationMetrics {
  double area_outside_boundary = 0.0;  // m·h
  long violation_count = 0;            // (tank, step) pairs
  double total_cost = 0.0;             // currency

  ViolationMetrics& operator+=(const ViolationMetrics& o);
};

/// Distance from `level` to the closest permissible bound, 0 inside.
double exceedance(double level, const LevelBounds& bounds);

/// Σ exceedance × dt over steps [first_step, last_step), i.e. over states
/// first_step+1 .. last_step. Defaults cover the whole day.
double area_outside_boundary(const Trajectory& traj, std::span<const LevelBounds> bounds, double dt_hours,
                             int first_step = 0, int last_step = kStepsPerDay);
long violation_count(const Trajectory& traj, std::span<const LevelBounds> bounds, int first_step = 0,
                     int last_step = kStepsPerDay);
double episode_cost(const Trajectory& traj);

ViolationMetrics measure(const Trajectory& traj, const NetworkTopology& topology);

struct MapeResult {
  std::vector<double> per_tank;  // %
  double mean = 0.0;             // %
};
/// Mean absolute percentage error of levels, averaged over all states.
MapeResult mape(const Trajectory& sim, const Trajectory& ref);

/// Per-episode metrics for one control source over a fixed episode pool.
struct EvaluationResult {
  std::string label;
  std::uint64_t pool_id = 0;
  std::vector<ViolationMetrics> episodes;

  ViolationMetrics totals() const;
  ViolationMetrics means() const;
};

struct ComparisonRow {
  std::string label;
  ViolationMetrics totals;
  std::size_t episodes = 0;
  std::optional<double> area_improvement_pct;   // (ref - value) / ref × 100
  std::optional<double> count_improvement_pct;
  std::optional<double> cost_delta_pct;          // (value - ref) / ref × 100, negative = savings
};

/// Relative improvement of `value` over `reference` in percent, empty when
/// the reference is zero.
std::optional<double> improvement_pct(double reference, double value);

/// Reference row first, then one row per entry of `rows`. Throws
/// ValidationError when pools differ.
std::vector<ComparisonRow> compare(const std::vector<EvaluationResult>& rows, const EvaluationResult& reference);

std::string comparison_to_csv(const std::vector<ComparisonRow>& table);
std::string comparison_to_json(const std::vector<ComparisonRow>& table);

}  // namespace wdn
