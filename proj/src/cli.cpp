#include "wdn/cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wdn/error.hpp"
#include "wdn/evaluation.hpp"
#include "wdn/hybrid.hpp"
#include "wdn/query.hpp"
#include "wdn/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wdn {

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kRuleBased = "rule-based";

struct Globals {
  std::uint64_t seed = 42;
  std::string out = "run";
  int workers = 1;
};

struct GenOpts {
  int days = 30;
  double imperfection = kDefaultImperfection;
};

struct TrainOpts {
  int agent = 1;
  std::string world;
  std::uint64_t steps = 500000;
  std::size_t batch = 256;
  int frame_skip = 8;
};

struct EvalOpts {
  std::string checkpoint;
  std::string world;
  std::size_t episodes = 32;
  bool with_random = false;
};

struct HybridOpts {
  std::string checkpoint;
  std::string world;
  std::size_t cases = 16;
  std::size_t attempts = 0;
};

struct ReportOpts {
  std::vector<std::string> from;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json options_echo(const CLI::App& app) {
  json o = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      o[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (opt->get_expected_min() == 0) {
      o[name] = false;
    } else {
      o[name] = opt->get_default_str();
    }
  }
  return o;
}

class Manifest {
 public:
  Manifest(std::string command, const Globals& g, const CLI::App& app, const CLI::App& sub)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["tool_version"] = kToolVersion;
    doc_["started_at"] = utc_now();
    doc_["config"] = {{"global", options_echo(app)}, {sub.get_name(), options_echo(sub)}};
    doc_["seeds"] = {{"seed", g.seed}};
    doc_["artifact_versions"] = {{"checkpoint", "wdn-policy/1"}, {"network", "wdn-network/1"}};
    doc_["outputs"] = json::array();
  }
  void seed(const std::string& key, std::uint64_t v) { doc_["seeds"][key] = v; }
  void input(const std::string& key, const std::string& path) { doc_["inputs"][key] = path; }
  void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }
  void write(const fs::path& dir) {
    doc_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file_atomic(dir / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void emit(const fs::path& path, const std::string& text, Manifest& m) {
  write_file_atomic(path, text);
  m.output(path);
}

std::string demands_to_csv(const DemandSet& demands) {
  std::ostringstream os;
  os << 't';
  for (std::size_t z = 1; z <= demands.zone_count(); ++z) os << ",demand_" << z;
  os << '\n';
  for (int t = 0; t < kStepsPerDay; ++t) {
    os << t;
    for (double d : demands.at(t)) os << ',' << format_double(d);
    os << '\n';
  }
  return os.str();
}

std::optional<int> agent_frame_skip(int agent, int window) {
  if (agent == 3) return window;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void cmd_gen(const Globals& g, const GenOpts& o, Manifest& m, std::ostream& out) {
  if (o.days <= 0) throw ValidationError("--days must be positive");
  if (!(o.imperfection >= 0.0)) throw ValidationError("--imperfection must be non-negative");
  const fs::path dir = g.out;
  ensure_dir(dir);
  const auto topology = generate_synthetic_network(g.seed);
  RuleBasedOperator op;
  op.imperfection = o.imperfection;
  op.seed = g.seed;
  const auto history = generate_history(topology, o.days, g.seed, op);
  m.seed("network", derive_seed({stream::kNetwork, g.seed}));
  m.seed("history_stream", stream::kHistory);

  save_network(dir / "network.json", topology);
  m.output(dir / "network.json");
  op.save(dir / "operator.json");
  m.output(dir / "operator.json");
  save_history(dir / "history.csv", history);
  m.output(dir / "history.csv");
  emit(dir / "demands.csv", demands_to_csv(generate_demands(topology, g.seed)), m);
  out << "world written to " << dir.string() << ": " << history.days() << " days, "
      << history.snapshots.size() << " snapshots\n";
}

void cmd_train(const Globals& g, const TrainOpts& o, Manifest& m, std::ostream& out) {
  const World w = load_world(o.world);
  m.input("world", o.world);
  const fs::path dir = g.out;
  ensure_dir(dir);
  TrainConfig cfg;
  cfg.batch_size = o.batch;
  cfg.total_steps = o.steps;
  cfg.seed = g.seed;
  cfg.workers = g.workers;
  cfg.validate();
  const auto fs_window = agent_frame_skip(o.agent, o.frame_skip);
  const AgentKind kind = o.agent == 1 ? AgentKind::Agent1 : AgentKind::Agent2;
  const auto factory = training_factory(w.topology, kind, fs_window);
  m.seed("train_stream", stream::kTrain);

  const std::uint64_t report_every = std::max<std::uint64_t>(o.steps / 10, 1);
  std::uint64_t next_report = report_every;
  auto result = train(factory, cfg, [&](const CurvePoint& p, const UpdateStats&) {
    if (p.steps >= next_report) {
      out << "steps " << p.steps << " mean episode reward " << format_double(p.mean_reward) << '\n';
      while (next_report <= p.steps) next_report += report_every;
    }
  });
  PolicyCheckpoint ckpt{std::move(result.params), o.agent, fs_window};
  save_checkpoint(dir / "checkpoint.json", ckpt);
  m.output(dir / "checkpoint.json");
  emit(dir / "reward_curve.csv", reward_curve_to_csv(result.curve), m);
  out << "agent " << o.agent << " trained for " << o.steps << " steps; checkpoint in " << dir.string() << '\n';
}

void cmd_eval(const Globals& g, const EvalOpts& o, Manifest& m, std::ostream& out) {
  if (o.episodes == 0) throw ValidationError("--episodes must be positive");
  const World w = load_world(o.world);
  m.input("world", o.world);
  m.input("checkpoint", o.checkpoint);
  const fs::path dir = g.out;
  const auto& topo = *w.topology;
  const auto pool = evaluation_pool(topo, o.episodes, g.seed);
  m.seed("eval_stream", stream::kEval);
  m.seed("train_stream", stream::kTrain);

  const auto reference = evaluate_rule_based(topo, w.op, pool, "historical");
  std::vector<EvaluationResult> rows;
  if (o.checkpoint == kRuleBased) {
    rows.push_back(evaluate_rule_based(topo, w.op, pool, kRuleBased));
  } else {
    const auto ckpt = load_checkpoint(o.checkpoint);
    PolicyController ctl(topo, ckpt);
    rows.push_back(evaluate_policy(topo, ctl, pool, "agent" + std::to_string(ckpt.agent)));
  }
  if (o.with_random) rows.push_back(evaluate_random(topo, pool, g.seed));
  const auto table = compare(rows, reference);
  ensure_dir(dir);
  emit(dir / "comparison.csv", comparison_to_csv(table), m);
  emit(dir / "comparison.json", comparison_to_json(table), m);
  out << comparison_to_csv(table);
}

void cmd_hybrid(const Globals& g, const HybridOpts& o, Manifest& m, std::ostream& out) {
  if (o.cases == 0) throw ValidationError("--cases must be positive");
  const World w = load_world(o.world);
  m.input("world", o.world);
  m.input("checkpoint", o.checkpoint);
  const fs::path dir = g.out;
  const auto& topo = *w.topology;
  const auto ckpt = load_checkpoint(o.checkpoint);
  if (ckpt.kind() != AgentKind::Agent2)
    throw ValidationError("hybrid injection needs an agent 2 or 3 checkpoint");
  PolicyController ctl(topo, ckpt);
  const auto index = build_index(topo, w.history);
  const auto cases = sample_cases(topo, index, o.cases, g.seed, o.attempts);
  m.seed("hybrid_stream", stream::kHybrid);

  const auto report = evaluate_strategies(topo, cases, ctl, static_cast<std::size_t>(g.workers));
  ensure_dir(dir);
  emit(dir / "strategy_report.json", report.to_json(), m);
  emit(dir / "strategy_report.csv", report.to_csv(), m);
  for (const auto& s : report.strategies) {
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("n/a"); };
    out << to_string(s.strategy) << ": during " << cell(s.mean_during_pct) << "% post " << cell(s.mean_post_pct)
        << "% over " << s.n_cases << " cases\n";
  }
}

std::string pct_cell(const json& v) {
  if (v.is_null()) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v.get<double>() << '%';
  return os.str();
}

void cmd_report(const Globals& g, const ReportOpts& o, Manifest& m, std::ostream& out) {
  std::ostringstream md;
  std::size_t found = 0;
  for (const auto& src : o.from) {
    const fs::path d = src;
    if (fs::exists(d / "comparison.json")) {
      const auto doc = json::parse(read_file(d / "comparison.json"));
      md << "## " << d.string() << " comparison\n\n| row | episodes | area | count | cost | area impr. | count impr. | "
            "cost delta |\n|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : doc.at("rows"))
        md << "| " << r.at("label").get<std::string>() << " | " << r.at("episodes").get<std::size_t>() << " | "
           << format_double(r.at("area_outside_boundary").get<double>()) << " | "
           << r.at("violation_count").get<long>() << " | " << format_double(r.at("total_cost").get<double>())
           << " | " << pct_cell(r.at("area_improvement_pct")) << " | " << pct_cell(r.at("count_improvement_pct"))
           << " | " << pct_cell(r.at("cost_delta_pct")) << " |\n";
      md << '\n';
      ++found;
    }
    if (fs::exists(d / "strategy_report.json")) {
      const auto doc = json::parse(read_file(d / "strategy_report.json"));
      md << "## " << d.string() << " hybrid strategies (" << doc.at("averaging").get<std::string>()
         << " means)\n\n| strategy | cases | during | post |\n|---|---|---|---|\n";
      for (const auto& s : doc.at("strategies"))
        md << "| " << s.at("strategy").get<std::string>() << " | " << s.at("n_cases").get<std::size_t>() << " | "
           << pct_cell(s.at("mean_during_pct")) << " | " << pct_cell(s.at("mean_post_pct")) << " |\n";
      md << '\n';
      ++found;
    }
  }
  if (found == 0) throw IoError("no comparison.json or strategy_report.json found in the given directories");
  const fs::path dir = g.out;
  ensure_dir(dir);
  emit(dir / "report.md", md.str(), m);
  out << md.str();
}

}  // namespace

World load_world(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("world directory '" + dir.string() + "' does not exist");
  World w;
  w.topology = std::make_shared<const NetworkTopology>(load_network(dir / "network.json"));
  w.op = RuleBasedOperator::load(dir / "operator.json");
  w.history = load_history(dir / "history.csv");
  w.history.validate(*w.topology);
  return w;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pump scheduling for water distribution networks: synthetic worlds, PPO agents, hybrid injection",
               "wdnopt"};
  app.require_subcommand(1);
  app.fallthrough();  // globals may follow the subcommand
  app.set_config("--config", "", "TOML/INI file with option values");
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "Rollout / case workers")->check(CLI::PositiveNumber)->capture_default_str();

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic world and its operating history");
  gen_cmd->add_option("--days", gen.days, "History length in days")->capture_default_str();
  gen_cmd->add_option("--imperfection", gen.imperfection, "Historical operator imperfection knob")
      ->capture_default_str();

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train an agent with PPO");
  train_cmd->add_option("--agent", tr.agent, "1 constraint, 2 dual objective, 3 dual with frame skip")
      ->required()
      ->check(CLI::IsMember({1, 2, 3}));
  train_cmd->add_option("--world", tr.world, "World directory from gen")->required();
  train_cmd->add_option("--steps", tr.steps, "Simulator step budget")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch, "Transitions per update")
      ->check(CLI::IsMember({192, 256, 512, 1024}))
      ->capture_default_str();
  train_cmd->add_option("--frame-skip", tr.frame_skip, "Decision window for agent 3, steps")->capture_default_str();

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare a checkpoint with the historical controller");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint.json, or 'rule-based'")->required();
  eval_cmd->add_option("--world", ev.world, "World directory")->required();
  eval_cmd->add_option("--episodes", ev.episodes, "Held-out episodes")->capture_default_str();
  eval_cmd->add_flag("--with-random", ev.with_random, "Add a uniform random policy row");

  HybridOpts hy;
  auto* hybrid_cmd = app.add_subcommand("hybrid", "Inject agent actions into query-baseline schedules");
  hybrid_cmd->add_option("--checkpoint", hy.checkpoint, "Agent 2 or 3 checkpoint.json")->required();
  hybrid_cmd->add_option("--world", hy.world, "World directory")->required();
  hybrid_cmd->add_option("--cases", hy.cases, "Violating cases to collect")->capture_default_str();
  hybrid_cmd->add_option("--attempts", hy.attempts, "Scenario draws allowed, 0 = 20x cases")->capture_default_str();

  ReportOpts rep;
  auto* report_cmd = app.add_subcommand("report", "Summarise comparison and strategy reports as markdown");
  report_cmd->add_option("--from", rep.from, "Run directories to read")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    Manifest m(sub->get_name(), g, app, *sub);
    if (sub == gen_cmd) cmd_gen(g, gen, m, out);
    else if (sub == train_cmd) cmd_train(g, tr, m, out);
    else if (sub == eval_cmd) cmd_eval(g, ev, m, out);
    else if (sub == hybrid_cmd) cmd_hybrid(g, hy, m, out);
    else cmd_report(g, rep, m, out);
    m.write(g.out);
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const json::exception& e) {
    err << "error: malformed report: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace wdn
