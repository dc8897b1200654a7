// Acceptance run: one PASS/FAIL line per criterion. Exit code 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "gradcheck.hpp"
#include "support.hpp"
#include "wdn/cli.hpp"
#include "wdn/environment.hpp"
#include "wdn/evaluation.hpp"
#include "wdn/hybrid.hpp"
#include "wdn/query.hpp"
#include "wdn/simulator.hpp"

using namespace wdn;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr std::uint64_t kBudget = 500000;
constexpr std::size_t kEpisodes = 32;
constexpr std::size_t kCases = 16;

int failures = 0;

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void verdict(int n, bool ok, const std::string& detail, double secs) {
  if (!ok) ++failures;
  std::printf("criterion %d: %s  %s  [%.1fs]\n", n, ok ? "PASS" : "FAIL", detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) {
    std::cerr << "wdnopt";
    for (const auto& a : args) std::cerr << ' ' << a;
    std::cerr << " -> exit " << code << "\n" << err.str();
  }
  return code;
}

// 1 ---------------------------------------------------------------------------

void simulator_invariants() {
  Clock clock;
  const auto topo = generate_synthetic_network(kSeed);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> shift(-0.1, 0.1);
  int cases = 0, attempts = 0;
  double worst_shift = 0.0, worst_mass = 0.0;
  bool deterministic = true;
  while (cases < 1000 && attempts < 50000) {
    ++attempts;
    const auto sc = sample_scenario(topo, rng());
    const auto sched = testing::random_schedule(6, rng, 0.3, 0.7);
    const auto base = simulate(topo, sc.initial_levels, sched, sc.demands);
    std::vector<double> delta(6), l0(6);
    for (std::size_t i = 0; i < 6; ++i) {
      delta[i] = shift(rng);
      l0[i] = sc.initial_levels[i] + delta[i];
    }
    if (!shift_valid(topo, base, delta)) continue;
    ++cases;
    const auto resim = simulate(topo, l0, sched, sc.demands);
    const auto pred = shift_predict(base, delta);
    for (int t = 0; t <= 96; ++t)
      for (std::size_t i = 0; i < 6; ++i) worst_shift = std::max(worst_shift, std::abs(pred.level(t, i) - resim.level(t, i)));
    if (!(simulate(topo, sc.initial_levels, sched, sc.demands) == base)) deterministic = false;
    for (int t = 0; t < 96; ++t) {
      double stored = 0.0, net = 0.0, gross = 0.0;
      for (std::size_t i = 0; i < 6; ++i) stored += topo.tanks[i].surface_area * (base.level(t + 1, i) - base.level(t, i));
      for (std::size_t s = 0; s < 6; ++s)
        if (!topo.stations[s].draws_from) {
          net += base.outputs[t].flows[s];
          gross += std::abs(base.outputs[t].flows[s]);
        }
      for (std::size_t z = 0; z < topo.zone_count(); ++z) {
        net -= sc.demands.per_zone[z][t];
        gross += sc.demands.per_zone[z][t];
      }
      net *= topo.dt_hours;
      gross *= topo.dt_hours;
      worst_mass = std::max(worst_mass, std::abs(stored - net) / std::max(gross, 1e-12));
    }
  }
  const bool ok = cases == 1000 && worst_shift <= 1e-9 && worst_mass <= 1e-9 && deterministic;
  verdict(1, ok && clock.seconds() < 60.0,
          std::to_string(cases) + " clamp-free shift cases, max level error " + sci(worst_shift) +
              ", max relative mass error " + sci(worst_mass) + ", bit-identical reruns " +
              (deterministic ? "yes" : "no"),
          clock.seconds());
}

// 2 ---------------------------------------------------------------------------

void gradient_checks() {
  Clock clock;
  std::mt19937_64 rng(2);
  double worst_lp = 0.0, worst_v = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto r = testing::gradient_check(rng);
    worst_lp = std::max(worst_lp, r.max_rel_log_prob);
    worst_v = std::max(worst_v, r.max_rel_value);
  }
  verdict(2, worst_lp <= 1e-4 && worst_v <= 1e-4 && clock.seconds() < 60.0,
          "100 configs, max relative error log-prob " + sci(worst_lp) + ", value " + sci(worst_v),
          clock.seconds());
}

// 3 ---------------------------------------------------------------------------

void reward_checks() {
  Clock clock;
  const std::vector<LevelBounds> b(6, {2.0, 4.0});
  RewardConfig cfg;
  cfg.e_min.assign(6, 0.0);
  cfg.e_max.assign(6, 50.0);
  const bool ex1 = reward_dual(std::vector<double>(6, 3.0), b, std::vector<double>(6, 0.0), 0.7, cfg) == 1.0;
  const bool ex2 = reward_dual(std::vector<double>(6, 9.0), b, std::vector<double>(6, 50.0), 1.0, cfg) == 0.0;
  const double r3 = reward_dual(std::vector<double>{3, 3, 3, 3, 1, 5}, b, std::vector<double>(6, 10.0), 1.0, cfg);
  const bool ex3 = std::abs(r3 - (0.7 * 8.0 / 12.0 + 0.3 * 0.8)) <= 1e-12;

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lvl(-1.0, 12.0), e(-10.0, 80.0), tar(0.0, 1.0), lo(0.0, 5.0);
  bool in_range = true;
  for (int k = 0; k < 100000; ++k) {
    std::vector<LevelBounds> bb(6);
    for (auto& x : bb) {
      x.lower = lo(rng);
      x.upper = x.lower + 1.0 + lo(rng);
    }
    std::vector<double> levels(6), energies(6);
    for (auto& v : levels) v = lvl(rng);
    for (auto& v : energies) v = e(rng);
    const double r = reward_dual(levels, bb, energies, tar(rng), cfg);
    if (!(r >= 0.0 && r <= 1.0)) in_range = false;
  }

  auto topo = std::make_shared<const NetworkTopology>(generate_synthetic_network(kSeed));
  double worst_sum = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto sc = sample_scenario(*topo, rng());
    const auto sched = testing::random_schedule(6, rng);
    for (AgentKind kind : {AgentKind::Agent1, AgentKind::Agent2}) {
      auto wrapped = make_environment(topo, kind, 8);
      WdnEnvironment plain(topo, kind);
      wrapped->reset(to_episode(*topo, sc, kind, 8));
      plain.reset(to_episode(*topo, sc, kind));
      for (int d = 0; !wrapped->done(); ++d) {
        const auto& a = sched[static_cast<std::size_t>(d * 8)];
        double inner = 0.0;
        for (int k = 0; k < 8; ++k) inner += plain.step(a).reward;
        worst_sum = std::max(worst_sum, std::abs(wrapped->step(a).reward - inner));
      }
    }
  }
  verdict(3, ex1 && ex2 && ex3 && in_range && worst_sum <= 1e-12,
          std::string("worked examples ") + (ex1 && ex2 && ex3 ? "exact" : "WRONG") + " (third = " + fmt(r3, 5) +
              "), 1e5 fuzzed rewards in [0,1] " + (in_range ? "yes" : "no") + ", frame-skip sum error " + sci(worst_sum),
          clock.seconds());
}

// 4-7 -------------------------------------------------------------------------

json comparison(const fs::path& dir) { return json::parse(slurp(dir / "comparison.json")); }

const json& row(const json& doc, const std::string& label) {
  for (const auto& r : doc.at("rows"))
    if (r.at("label") == label) return r;
  throw std::runtime_error("row " + label + " missing");
}

struct Trained {
  fs::path checkpoint;
  json table;
  double seconds = 0.0;
};

Trained train_and_eval(const fs::path& root, const std::string& world, int agent) {
  Clock clock;
  Trained t;
  const auto dir = root / ("agent" + std::to_string(agent));
  if (cli({"train", "--agent", std::to_string(agent), "--world", world, "--steps", std::to_string(kBudget), "--seed",
           std::to_string(kSeed), "--out", (dir / "train").string()}) != 0)
    throw std::runtime_error("train failed");
  t.checkpoint = dir / "train" / "checkpoint.json";
  if (cli({"eval", "--checkpoint", t.checkpoint.string(), "--world", world, "--episodes", std::to_string(kEpisodes),
           "--with-random", "--seed", std::to_string(kSeed), "--out", (dir / "eval").string()}) != 0)
    throw std::runtime_error("eval failed");
  t.table = comparison(dir / "eval");
  t.seconds = clock.seconds();
  return t;
}

double area_of(const json& r) { return r.at("area_outside_boundary").get<double>(); }
double cost_of(const json& r) { return r.at("total_cost").get<double>(); }

void learning_criteria(const fs::path& root) {
  const auto world = (root / "world").string();
  if (cli({"gen", "--seed", std::to_string(kSeed), "--out", world}) != 0) throw std::runtime_error("gen failed");

  const auto a1 = train_and_eval(root, world, 1);
  const auto& hist = row(a1.table, "historical");
  const double h_area = area_of(hist), h_cost = cost_of(hist);
  const double a1_area = area_of(row(a1.table, "agent1")), rnd_area = area_of(row(a1.table, "random"));
  verdict(4, a1_area <= 0.5 * h_area && a1_area <= 0.3 * rnd_area && a1.seconds <= 1800.0,
          "agent1 area " + fmt(a1_area) + " vs historical " + fmt(h_area) + " (" + fmt(100 * a1_area / h_area, 1) +
              "%, limit 50%) and random " + fmt(rnd_area) + " (" + fmt(100 * a1_area / rnd_area, 1) + "%, limit 30%)",
          a1.seconds);

  const auto a2 = train_and_eval(root, world, 2);
  const auto& r2 = row(a2.table, "agent2");
  const double a2_area = area_of(r2), a2_cost = cost_of(r2);
  const double red2 = 1.0 - a2_area / h_area;
  verdict(5, red2 >= 0.40 && a2_cost <= 1.05 * h_cost,
          "agent2 area reduction " + fmt(100 * red2, 1) + "% (need >= 40%), cost " + fmt(a2_cost, 1) + " = " +
              fmt(100 * a2_cost / h_cost, 1) + "% of historical " + fmt(h_cost, 1) + " (limit 105%)",
          a2.seconds);

  const auto a3 = train_and_eval(root, world, 3);
  const double a3_area = area_of(row(a3.table, "agent3"));
  const double red3 = 1.0 - a3_area / h_area;
  const auto topo = generate_synthetic_network(kSeed);
  const PolicyController ctl(topo, load_checkpoint(a3.checkpoint));
  int max_decisions = 0, max_changes = 0;
  for (const auto& sc : evaluation_pool(topo, kEpisodes, kSeed)) {
    const auto run = run_policy(topo, ctl, sc);
    max_decisions = std::max(max_decisions, run.decisions);
    max_changes = std::max(max_changes, run.action_changes);
  }
  verdict(6, max_decisions <= 12 && red3 >= 0.25 && red3 <= red2,
          "agent3 max decisions/episode " + std::to_string(max_decisions) + " (action changes " +
              std::to_string(max_changes) + "), area reduction " + fmt(100 * red3, 1) +
              "% (need >= 25% and <= agent2's " + fmt(100 * red2, 1) + "%)",
          a3.seconds);

  Clock clock;
  const auto hy = root / "hybrid";
  if (cli({"hybrid", "--checkpoint", a2.checkpoint.string(), "--world", world, "--cases", std::to_string(kCases),
           "--seed", std::to_string(kSeed), "--out", hy.string()}) != 0)
    throw std::runtime_error("hybrid failed");
  const auto rep = json::parse(slurp(hy / "strategy_report.json"));
  std::map<std::string, json> by;
  for (const auto& s : rep.at("strategies")) by[s.at("strategy").get<std::string>()] = s;
  const auto& tg = by.at("targeted");
  const auto& de = by.at("dynamic_end");
  const auto& dse = by.at("dynamic_start_end");
  const std::size_t n = tg.at("cases").size();
  bool dominance = n >= kCases;
  double post_tg = 0.0, post_de = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = tg["cases"][k]["hybrid_during_area"], d = de["cases"][k]["hybrid_during_area"],
                 s = dse["cases"][k]["hybrid_during_area"];
    if (!(s <= d && d <= t)) dominance = false;
    post_tg += tg["cases"][k]["hybrid_post_area"].get<double>();
    post_de += de["cases"][k]["hybrid_post_area"].get<double>();
  }
  post_tg /= static_cast<double>(n);
  post_de /= static_cast<double>(n);
  auto mean = [&](const char* s) {
    const auto& v = by.at(s).at("mean_during_pct");
    return v.is_null() ? std::nan("") : v.get<double>();
  };
  const double m_tg = mean("targeted"), m_mid = mean("untargeted_12_14h"), m_early = mean("untargeted_0_2h");
  // a strategy with no baseline area in its window reduces nothing
  auto red = [](double pct) { return std::isnan(pct) ? 0.0 : -pct; };
  const bool order = red(m_tg) > red(m_mid) && red(m_mid) > red(m_early);
  std::string detail = std::to_string(n) + " cases; (a) per-case dominance " + (dominance ? "holds" : "VIOLATED") +
                       "; (b) mean during change targeted " + fmt(m_tg, 1) + "%, 12-14h " + fmt(m_mid, 1) +
                       "%, 0-2h " + fmt(m_early, 1) + "%, dynamic-end " + fmt(mean("dynamic_end"), 1) +
                       "%, dynamic-start-end " + fmt(mean("dynamic_start_end"), 1) + "%, order " +
                       (order ? "as expected" : "NOT as expected") + "; (c) mean post area dynamic-end " +
                       fmt(post_de, 4) + " vs targeted " + fmt(post_tg, 4);
  verdict(7, dominance && order && post_de <= post_tg + 1e-12 && clock.seconds() <= 900.0, detail, clock.seconds());
}

// 8 ---------------------------------------------------------------------------

void query_checks() {
  Clock clock;
  const auto topo = generate_synthetic_network(kSeed);
  const auto h = generate_history(topo, 30, kSeed);
  const auto idx = build_index(topo, h);
  bool self = true;
  for (int d = 0; d < h.days(); ++d) {
    const auto r = recommend(idx, topo, h.day(d).front().levels, h.day_demands(d));
    if (r.day != d || r.distance != 0.0) self = false;
  }
  std::vector<std::string> names;
  for (int k = 0; k < 8; ++k) names.push_back("f" + std::to_string(k));
  const std::vector<std::vector<double>> raw{std::vector<double>(8, 0.0), std::vector<double>(8, 1.0)};
  const auto toy = QueryIndex::from_raw(names, raw, {1, 2}, {});
  const bool tie = recommend_feature(toy, std::vector<double>(8, 0.5)).day == 2;
  const auto near = recommend_feature(toy, std::vector<double>(8, 0.1));
  const bool dist = near.day == 1 && std::abs(near.distance - std::sqrt(8.0) * 0.1) <= 1e-12;
  const auto lo = recommend_feature(toy, std::vector<double>(8, -3.0));
  const auto hi = recommend_feature(toy, std::vector<double>(8, 9.0));
  const bool clip = lo.day == 1 && lo.distance == 0.0 && hi.day == 2 && hi.distance == 0.0;
  verdict(8, self && tie && dist && clip,
          std::string("self-retrieval over ") + std::to_string(h.days()) + " days " + (self ? "exact" : "WRONG") +
              ", tie-break " + (tie ? "ok" : "WRONG") + ", toy distance " + (dist ? "ok" : "WRONG") +
              ", clipping " + (clip ? "ok" : "WRONG"),
          clock.seconds());
}

// 9 ---------------------------------------------------------------------------

void reproducibility(const fs::path& root) {
  Clock clock;
  auto pipeline = [&](const fs::path& dir, int workers) {
    const auto w = std::to_string(workers);
    const auto world = (dir / "world").string();
    const auto ck = (dir / "train" / "checkpoint.json").string();
    return cli({"gen", "--seed", "7", "--days", "30", "--out", world}) == 0 &&
           cli({"train", "--agent", "2", "--world", world, "--steps", "20000", "--seed", "7", "--workers", w, "--out",
                (dir / "train").string()}) == 0 &&
           cli({"eval", "--checkpoint", ck, "--world", world, "--episodes", "8", "--with-random", "--seed", "7",
                "--out", (dir / "eval").string()}) == 0 &&
           cli({"hybrid", "--checkpoint", ck, "--world", world, "--cases", "8", "--seed", "7", "--workers", w,
                "--out", (dir / "hybrid").string()}) == 0;
  };
  const bool ran = pipeline(root / "rep_a", 1) && pipeline(root / "rep_b", 2);
  const bool same_cmp = ran && slurp(root / "rep_a" / "eval" / "comparison.csv") ==
                                   slurp(root / "rep_b" / "eval" / "comparison.csv");
  const bool same_rep = ran && slurp(root / "rep_a" / "hybrid" / "strategy_report.json") ==
                                   slurp(root / "rep_b" / "hybrid" / "strategy_report.json");
  verdict(9, ran && same_cmp && same_rep,
          std::string("two seeded pipelines (1 and 2 workers): comparison.csv ") +
              (same_cmp ? "identical" : "DIFFERENT") + ", strategy_report.json " +
              (same_rep ? "identical" : "DIFFERENT"),
          clock.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  fs::path root = fs::temp_directory_path() / ("wdn_acceptance_" + std::to_string(::getpid()));
  if (argc > 1) root = argv[1];
  fs::create_directories(root);
  try {
    simulator_invariants();
    gradient_checks();
    reward_checks();
    learning_criteria(root);
    query_checks();
    reproducibility(root);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  if (argc <= 1) fs::remove_all(root);
  return failures == 0 ? 0 : 1;
}
