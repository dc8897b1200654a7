#include "wdn/hybrid.hpp"

#include <algorithm>
#include <exception>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wdn/error.hpp"
#include "wdn/random.hpp"

namespace wdn {

std::vector<ViolationWindow> detect_violations(const Trajectory& traj, std::span<const LevelBounds> bounds) {
  std::vector<ViolationWindow> out;
  const int steps = static_cast<int>(traj.states.size()) - 1;
  for (int k = 0; k < steps; ++k) {
    const auto& levels = traj.states[static_cast<std::size_t>(k + 1)].levels;
    bool any = false;
    std::vector<char> flags(levels.size(), 0);
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (exceedance(levels[i], bounds[i]) > 0.0) flags[i] = any = true;
    if (!any) continue;
    if (!out.empty() && out.back().end == k) {
      out.back().end = k + 1;
      for (std::size_t i = 0; i < flags.size(); ++i) out.back().tanks[i] |= flags[i];
    } else {
      out.push_back({k, k + 1, std::move(flags)});
    }
  }
  return out;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::UntargetedEarly: return "untargeted_0_2h";
    case Strategy::UntargetedMidday: return "untargeted_12_14h";
    case Strategy::Targeted: return "targeted";
    case Strategy::DynamicEnd: return "dynamic_end";
    case Strategy::DynamicStartEnd: return "dynamic_start_end";
  }
  return "unknown";
}

void InjectionPlan::validate() const {
  if (!(0 <= start && start < end && end <= kStepsPerDay))
    throw ValidationError("injection interval [" + std::to_string(start) + "," + std::to_string(end) +
                          ") is not inside [0,96)");
}

HybridCase make_case(const NetworkTopology& topology, std::string id, Scenario scenario,
                     const ControlSchedule& baseline_schedule, int matched_day) {
  HybridCase c;
  c.id = std::move(id);
  c.baseline = simulate(topology, scenario.initial_levels, baseline_schedule, scenario.demands);
  c.scenario = std::move(scenario);
  c.matched_day = matched_day;
  c.baseline_schedule = baseline_schedule;
  return c;
}

InjectionRun inject(const NetworkTopology& topology, const HybridCase& c, const InjectionPlan& plan,
                    const PolicyController& policy) {
  plan.validate();
  if (c.baseline_schedule.size() != static_cast<std::size_t>(kStepsPerDay))
    throw ValidationError("baseline schedule must have 96 steps");
  const int window = policy.frame_skip().value_or(1);
  InjectionRun run;
  run.trajectory.states.push_back({0, c.scenario.initial_levels});
  ActionVector held;
  for (int t = 0; t < kStepsPerDay; ++t) {
    const SystemState& s = run.trajectory.states.back();
    ActionVector a;
    if (t >= plan.start && t < plan.end) {
      if ((t - plan.start) % window == 0) held = policy.decide(s);
      a = held;
    } else {
      a = c.baseline_schedule[static_cast<std::size_t>(t)];
    }
    auto [next, out] = step(topology, s, a, c.scenario.demands.at(t), topology.tariff.at(t));
    run.schedule.push_back(std::move(a));
    run.trajectory.states.push_back(std::move(next));
    run.trajectory.outputs.push_back(std::move(out));
  }
  return run;
}

namespace {

std::optional<double> pct_change(double baseline, double hybrid) {
  if (!(baseline > 0.0)) return std::nullopt;
  return (hybrid - baseline) / baseline * 100.0;
}

double area(const NetworkTopology& topology, const Trajectory& traj, int first, int last) {
  const auto bounds = topology.bounds();
  return area_outside_boundary(traj, bounds, topology.dt_hours, first, last);
}

ViolationWindow hull(const HybridCase& c, const NetworkTopology& topology) {
  const auto windows = detect_violations(c.baseline, topology.bounds());
  if (windows.empty()) throw ValidationError("case '" + c.id + "' has no baseline violation");
  return {windows.front().start, windows.back().end, {}};
}

struct EndChoice {
  int end = 0;
  double during = 0.0;
  double total = 0.0;
  std::optional<double> predicted_post;
};

// Searches ends in [min_end, 96] for an injection starting at `start`.
// `full` is the closed-loop run injecting over [start, 96); its prefix up to
// any e equals the run for [start, e). Candidates may not add during-area
// beyond the one at min_end, so the earliest end stays dominated.
EndChoice search_end(const NetworkTopology& topology, const HybridCase& c, int start, int min_end,
                     const InjectionRun& full) {
  const std::size_t n = topology.tank_count();
  const double floor_during = area(topology, full.trajectory, start, min_end);
  EndChoice best;
  bool have = false;
  for (int e = min_end; e <= kStepsPerDay; ++e) {
    const double during = area(topology, full.trajectory, start, e);
    if (during > floor_during) break;  // during-area is nondecreasing in e
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = full.trajectory.level(e, i) - c.baseline.level(e, i);
    double post;
    std::optional<double> predicted;
    if (shift_valid(topology, c.baseline, delta, e)) {
      post = area(topology, shift_predict(c.baseline, delta, e), e, kStepsPerDay);
      predicted = post;
    } else {
      ControlSchedule blended = c.baseline_schedule;
      std::copy(full.schedule.begin() + start, full.schedule.begin() + e, blended.begin() + start);
      post = area(topology, simulate(topology, c.scenario.initial_levels, blended, c.scenario.demands), e,
                  kStepsPerDay);
    }
    const double total = during + post;
    if (!have || total < best.total) {
      best = {e, during, total, predicted};
      have = true;
    }
  }
  return best;
}

HybridResult finish(const NetworkTopology& topology, const HybridCase& c, Strategy s, int start, int end,
                    const PolicyController& policy) {
  InjectionPlan plan{s, start, end};
  return score(topology, c, plan, inject(topology, c, plan, policy));
}

}  // namespace

HybridResult score(const NetworkTopology& topology, const HybridCase& c, const InjectionPlan& plan, InjectionRun run) {
  HybridResult r;
  r.case_id = c.id;
  r.plan = plan;
  r.baseline_during = area(topology, c.baseline, plan.start, plan.end);
  r.hybrid_during = area(topology, run.trajectory, plan.start, plan.end);
  r.baseline_post = area(topology, c.baseline, plan.end, kStepsPerDay);
  r.hybrid_post = area(topology, run.trajectory, plan.end, kStepsPerDay);
  r.during_pct = pct_change(r.baseline_during, r.hybrid_during);
  r.post_pct = pct_change(r.baseline_post, r.hybrid_post);
  r.run = std::move(run);
  return r;
}

HybridResult strategy_untargeted(const NetworkTopology& topology, const HybridCase& c, Strategy window,
                                 const PolicyController& policy) {
  switch (window) {
    case Strategy::UntargetedEarly: return finish(topology, c, window, 0, 8, policy);
    case Strategy::UntargetedMidday: return finish(topology, c, window, 48, 56, policy);
    default: throw ValidationError("untargeted injection needs the 0-2h or 12-14h window");
  }
}

HybridResult strategy_targeted(const NetworkTopology& topology, const HybridCase& c, const PolicyController& policy) {
  const auto h = hull(c, topology);
  return finish(topology, c, Strategy::Targeted, h.start, h.end, policy);
}

HybridResult strategy_dynamic_end(const NetworkTopology& topology, const HybridCase& c,
                                  const PolicyController& policy) {
  const auto h = hull(c, topology);
  const auto full = inject(topology, c, {Strategy::DynamicEnd, h.start, kStepsPerDay}, policy);
  const auto choice = search_end(topology, c, h.start, h.end, full);
  auto r = finish(topology, c, Strategy::DynamicEnd, h.start, choice.end, policy);
  r.predicted_post = choice.end < kStepsPerDay ? choice.predicted_post : std::optional<double>(0.0);
  return r;
}

HybridResult strategy_dynamic_start_end(const NetworkTopology& topology, const HybridCase& c,
                                        const PolicyController& policy, int lookback) {
  if (lookback < 0) throw ValidationError("lookback must be non-negative");
  const auto h = hull(c, topology);
  int best_start = h.start;
  EndChoice best;
  bool have = false;
  for (int s = std::max(0, h.start - lookback); s <= h.start; ++s) {
    const auto full = inject(topology, c, {Strategy::DynamicStartEnd, s, kStepsPerDay}, policy);
    const auto choice = search_end(topology, c, s, h.end, full);
    // ties on during-area: lower total, then the later start
    if (!have || choice.during < best.during || (choice.during == best.during && choice.total <= best.total)) {
      best = choice;
      best_start = s;
      have = true;
    }
  }
  auto r = finish(topology, c, Strategy::DynamicStartEnd, best_start, best.end, policy);
  r.predicted_post = best.end < kStepsPerDay ? best.predicted_post : std::optional<double>(0.0);
  return r;
}

HybridResult run_strategy(const NetworkTopology& topology, const HybridCase& c, Strategy s,
                          const PolicyController& policy) {
  switch (s) {
    case Strategy::UntargetedEarly:
    case Strategy::UntargetedMidday: return strategy_untargeted(topology, c, s, policy);
    case Strategy::Targeted: return strategy_targeted(topology, c, policy);
    case Strategy::DynamicEnd: return strategy_dynamic_end(topology, c, policy);
    case Strategy::DynamicStartEnd: return strategy_dynamic_start_end(topology, c, policy);
  }
  throw ValidationError("unknown strategy");
}

const StrategySummary& StrategyReport::at(Strategy s) const {
  for (const auto& row : strategies)
    if (row.strategy == s) return row;
  throw ValidationError("strategy " + to_string(s) + " missing from report");
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string("n/a"); }

std::optional<double> mean_defined(const std::vector<HybridResult>& cases, std::optional<double> HybridResult::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : cases)
    if (c.*field) {
      sum += *(c.*field);
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::string StrategyReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : strategies) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : s.cases)
      cases.push_back({{"id", c.case_id},
                       {"start", c.plan.start},
                       {"end", c.plan.end},
                       {"baseline_during_area", c.baseline_during},
                       {"hybrid_during_area", c.hybrid_during},
                       {"during_pct", opt_json(c.during_pct)},
                       {"baseline_post_area", c.baseline_post},
                       {"hybrid_post_area", c.hybrid_post},
                       {"post_pct", opt_json(c.post_pct)}});
    rows.push_back({{"strategy", to_string(s.strategy)},
                    {"n_cases", s.n_cases},
                    {"mean_during_pct", opt_json(s.mean_during_pct)},
                    {"mean_post_pct", opt_json(s.mean_post_pct)},
                    {"cases", std::move(cases)}});
  }
  nlohmann::json doc{{"averaging", "per-case"}, {"strategies", std::move(rows)}};
  return doc.dump(2) + "\n";
}

std::string StrategyReport::to_csv() const {
  std::ostringstream os;
  os << "strategy,case,start,end,baseline_during_area,hybrid_during_area,during_pct,baseline_post_area,"
        "hybrid_post_area,post_pct\n";
  for (const auto& s : strategies)
    for (const auto& c : s.cases)
      os << to_string(s.strategy) << ',' << c.case_id << ',' << c.plan.start << ',' << c.plan.end << ','
         << format_double(c.baseline_during) << ',' << format_double(c.hybrid_during) << ','
         << opt_cell(c.during_pct) << ',' << format_double(c.baseline_post) << ',' << format_double(c.hybrid_post)
         << ',' << opt_cell(c.post_pct) << '\n';
  for (const auto& s : strategies)
    os << to_string(s.strategy) << ",mean,,,,," << opt_cell(s.mean_during_pct) << ",,," << opt_cell(s.mean_post_pct)
       << '\n';
  return os.str();
}

StrategyReport evaluate_strategies(const NetworkTopology& topology, const std::vector<HybridCase>& cases,
                                   const PolicyController& policy, std::size_t workers) {
  if (cases.empty()) throw ValidationError("hybrid evaluation needs at least one case");
  if (policy.kind() != AgentKind::Agent2)
    throw ValidationError("hybrid injection needs a policy trained on the extended observation");
  const std::size_t n_strat = std::size(kAllStrategies);
  std::vector<std::vector<HybridResult>> results(n_strat, std::vector<HybridResult>(cases.size()));
  auto work = [&](std::size_t k) {
    for (std::size_t j = 0; j < n_strat; ++j) {
      results[j][k] = run_strategy(topology, cases[k], kAllStrategies[j], policy);
      results[j][k].run = {};  // trajectories are not reported
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, cases.size());
  if (workers == 1) {
    for (std::size_t k = 0; k < cases.size(); ++k) work(k);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = w; k < cases.size(); k += workers) work(k);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  StrategyReport report;
  for (std::size_t j = 0; j < n_strat; ++j) {
    StrategySummary s;
    s.strategy = kAllStrategies[j];
    s.n_cases = cases.size();
    s.cases = std::move(results[j]);
    s.mean_during_pct = mean_defined(s.cases, &HybridResult::during_pct);
    s.mean_post_pct = mean_defined(s.cases, &HybridResult::post_pct);
    report.strategies.push_back(std::move(s));
  }
  return report;
}

std::vector<HybridCase> sample_cases(const NetworkTopology& topology, const QueryIndex& index, std::size_t count,
                                     std::uint64_t seed, std::size_t max_attempts) {
  if (max_attempts == 0) max_attempts = std::max<std::size_t>(count * 20, 200);
  std::vector<HybridCase> cases;
  const auto bounds = topology.bounds();
  for (std::size_t k = 0; k < max_attempts && cases.size() < count; ++k) {
    auto sc = sample_scenario(topology, derive_seed({seed, stream::kHybrid, static_cast<std::uint64_t>(k)}));
    const auto match = recommend(index, topology, sc.initial_levels, sc.demands);
    auto c = make_case(topology, "case" + std::to_string(k), std::move(sc), match.schedule, match.day);
    if (!detect_violations(c.baseline, bounds).empty()) cases.push_back(std::move(c));
  }
  if (cases.size() < count)
    throw ValidationError("found only " + std::to_string(cases.size()) + " violating cases in " +
                          std::to_string(max_attempts) +
                          " attempts; raise the historical operator imperfection or the attempt budget");
  return cases;
}

}  // namespace wdn
