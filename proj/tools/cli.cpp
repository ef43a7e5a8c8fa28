#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qsim/agents.hpp"
#include "qsim/format.hpp"
#include "qsim/policy_io.hpp"
#include "qsim/qasm.hpp"
#include "server.hpp"

namespace qsim::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidConfig(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw InvalidConfig("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_range(const json& obj, const char* key, Range<std::int64_t>& out) {
  if (!obj.contains(key)) return;
  const auto v = obj.at(key).get<std::vector<std::int64_t>>();
  if (v.size() != 2) throw InvalidConfig(std::string(key) + " must be [min, max]");
  out = {v[0], v[1]};
}

RewardMode parse_reward_mode(const std::string& s) {
  if (s == "inverse_completion") return RewardMode::InverseCompletion;
  if (s == "constant") return RewardMode::Constant;
  throw InvalidConfig("unknown reward_mode '" + s + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// Doubles that may be NaN (undefined timing on violations) become null.
json number_or_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

json info_json(const StepInfo& i) {
  return {{"success", i.success},          {"task_id", i.task_id},
          {"node_id", i.node_id},          {"wait_s", number_or_null(i.wait_s)},
          {"exec_s", number_or_null(i.exec_s)}, {"completion_s", number_or_null(i.completion_s)},
          {"violations_so_far", i.violations_so_far}};
}

json summary_json(const EvaluationSummary& s) {
  auto m = [](const Moments& x) { return json{{"mean", x.mean}, {"stddev", x.stddev}}; };
  return {{"episodes", s.episodes},          {"reward_sum", m(s.reward_sum)},
          {"steps", m(s.steps)},             {"violations", m(s.violations)},
          {"mean_completion_s", m(s.mean_completion_s)}, {"total_steps", s.total_steps},
          {"total_violations", s.total_violations},      {"violation_rate", s.violation_rate}};
}

std::string app_tag_from_path(const fs::path& p) {
  const std::string stem = p.stem().string();
  const auto us = stem.find('_');
  return us == std::string::npos ? stem : stem.substr(0, us);
}

const fs::path& require_out(const RunConfig& cfg) {
  if (!cfg.out_dir) throw InvalidConfig("--out is required");
  if (!fs::is_directory(*cfg.out_dir)) throw InvalidConfig("output directory " + cfg.out_dir->string() + " does not exist");
  return *cfg.out_dir;
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw InvalidConfig("--seed is required");
  return *cfg.seed;
}

NodeCatalog build_catalog(const RunConfig& cfg) {
  if (!cfg.catalog_path) return NodeCatalog::builtin();
  if (!fs::exists(*cfg.catalog_path)) throw InvalidConfig("catalog " + cfg.catalog_path->string() + " does not exist");
  return NodeCatalog::load(*cfg.catalog_path);
}

// ---------------------------------------------------------------- commands

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = require_out(cfg);
  const std::uint64_t seed = require_seed(cfg);
  const auto dataset = build_dataset(cfg);
  save_csv(*dataset, dir / "dataset.csv");
  out << "wrote " << dataset->total_tasks() << " tasks in " << dataset->n_subsets() << " subsets to "
      << (dir / "dataset.csv").string() << " (seed " << seed << ")\n";
  return kOk;
}

int cmd_extract(const RunConfig& cfg, const std::vector<std::string>& inputs, std::istream& in, std::ostream& out,
                std::ostream& err) {
  if (cfg.out_dir && !fs::is_directory(*cfg.out_dir)) {
    throw InvalidConfig("output directory " + cfg.out_dir->string() + " does not exist");
  }
  std::vector<FeatureRow> rows;
  int status = kOk;
  for (const auto& input : inputs) {
    try {
      std::string text;
      std::string tag = "stdin";
      if (input == "-") {
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      } else {
        text = read_text(input);
        tag = app_tag_from_path(input);
      }
      CircuitFeatures f = extract_features_qasm(text);
      f.app_tag = tag;
      rows.emplace_back(input == "-" ? "stdin" : fs::path(input).filename().string(), std::move(f));
    } catch (const Error& e) {
      err << "warning: skipping " << input << ": " << e.what() << "\n";
      status = kPartial;
    }
  }
  const std::string csv = features_to_csv(rows);
  if (cfg.out_dir) {
    write_text(*cfg.out_dir / "features.csv", csv);
  } else {
    out << csv;
  }
  return status;
}

std::vector<std::int64_t> rounds_to_run(const RunConfig& cfg, const Dataset& d) {
  const auto n = static_cast<std::int64_t>(d.n_subsets());
  if (cfg.round) {
    if (*cfg.round < 0 || *cfg.round >= n) throw InvalidConfig("--round outside the dataset");
    return {*cfg.round};
  }
  const std::int64_t count = cfg.rounds ? std::min(*cfg.rounds, n) : n;
  std::vector<std::int64_t> r(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) r[static_cast<std::size_t>(i)] = i;
  return r;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = require_out(cfg);
  const std::uint64_t seed = require_seed(cfg);
  Env env = build_env(cfg);
  const std::string spec = cfg.policies.empty() ? "greedy" : cfg.policies.front();
  auto policy = make_policy(spec, env, seed);

  std::string trace = "task_id,node,dispatch_s,start_s,wait_s,exec_s,completion_s,success\n";
  std::int64_t episodes = 0, steps = 0, violations = 0, successes = 0, terminated = 0, truncated = 0;
  double total_completion = 0.0, reward_sum = 0.0;
  for (std::int64_t round : rounds_to_run(cfg, env.dataset())) {
    env.reset(seed, round);
    while (!env.episode_over()) env.step(policy->select(env.raw_observation()));
    for (const auto& r : env.records()) {
      trace += std::to_string(r.task_id) + ',' + std::to_string(r.node_id) + ',' + format_fixed(r.dispatch_at.seconds) +
               ',' + format_fixed(r.start_at.seconds) + ',' + format_fixed(r.wait_s) + ',' + format_fixed(r.exec_s) +
               ',' + format_fixed(r.completion_s) + ',' + (r.success ? "1" : "0") + '\n';
      if (r.success) total_completion += r.completion_s;
    }
    const EpisodeStats s = env.episode_stats();
    ++episodes;
    steps += s.steps;
    violations += s.violations;
    successes += s.successes;
    reward_sum += s.reward_sum;
    (s.successes == static_cast<std::int64_t>(get_subset(env.dataset(), round).size()) ? terminated : truncated)++;
  }
  write_text(dir / "trace.csv", trace);
  json stats = {{"policy", policy->kind()},
                {"seed", seed},
                {"episodes", episodes},
                {"terminated_episodes", terminated},
                {"truncated_episodes", truncated},
                {"steps", steps},
                {"successes", successes},
                {"violations", violations},
                {"total_completion_s", total_completion},
                {"mean_completion_s", successes > 0 ? total_completion / static_cast<double>(successes) : 0.0},
                {"reward_sum", reward_sum}};
  write_text(dir / "stats.json", stats.dump(2) + "\n");
  out << "simulated " << episodes << " episodes, " << successes << " placements, " << violations << " violations\n";
  return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = require_out(cfg);
  const std::uint64_t seed = require_seed(cfg);
  Env env = build_env(cfg);
  TrainingCurve curve;
  fs::path policy_path;
  if (cfg.algo == "qlearning") {
    auto [policy, c] = train_qlearning(env, cfg.iterations, cfg.qlearning, seed);
    policy_path = dir / "policy.json";
    save_policy(policy, policy_path);
    curve = std::move(c);
  } else if (cfg.algo == "dqn") {
    auto [policy, c] = train_dqn(env, cfg.iterations, cfg.dqn, seed);
    policy_path = dir / "policy.bin";
    save_policy(policy, policy_path);
    curve = std::move(c);
  } else {
    throw InvalidConfig("unknown trainer '" + cfg.algo + "' (qlearning | dqn)");
  }
  write_text(dir / "curve.csv", curve.to_csv());
  const auto& last = curve.rows.back();
  out << "trained " << cfg.algo << " for " << cfg.iterations << " iterations; final ep_len_mean "
      << last.ep_len_mean << ", ep_reward_mean " << last.ep_reward_mean << "; policy " << policy_path.string() << "\n";
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = require_out(cfg);
  const std::uint64_t seed = require_seed(cfg);
  if (cfg.policies.empty()) throw InvalidConfig("--policy is required");
  Env env = build_env(cfg);
  std::vector<std::pair<std::string, std::unique_ptr<Policy>>> policies;
  for (const auto& spec : cfg.policies) {
    try {
      policies.emplace_back(spec, make_policy(spec, env, seed));
    } catch (const IoError& e) {
      throw InvalidConfig(e.detail());
    } catch (const FormatError& e) {
      throw InvalidConfig(spec + ": " + e.detail());
    }
  }
  json result = {{"seed", seed}, {"episodes", cfg.episodes}, {"policies", json::object()}};
  for (auto& [spec, policy] : policies) {
    const auto summary = evaluate(*policy, env, cfg.episodes, seed);
    json entry = summary_json(summary);
    entry["kind"] = policy->kind();
    result["policies"][spec] = std::move(entry);
    out << spec << ": reward " << summary.reward_sum.mean << ", steps " << summary.steps.mean << ", violations "
        << summary.violations.mean << "\n";
  }
  write_text(dir / "eval.json", result.dump(2) + "\n");
  return kOk;
}

int cmd_serve(const RunConfig& cfg, bool use_stdio, const std::optional<std::string>& listen, std::istream& in,
              std::ostream& out) {
  if (use_stdio == listen.has_value()) throw InvalidConfig("serve-env needs exactly one of --stdio or --listen");
  Env env = build_env(cfg);
  if (use_stdio) {
    EnvSession session(std::move(env));
    serve_stream(session, in, out);
    return kOk;
  }
  const auto colon = listen->rfind(':');
  if (colon == std::string::npos) throw InvalidConfig("--listen expects HOST:PORT");
  int port = 0;
  try {
    port = std::stoi(listen->substr(colon + 1));
  } catch (const std::exception&) {
    throw InvalidConfig("bad port in --listen");
  }
  serve_tcp(listen->substr(0, colon), port, env);
  return kOk;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig parse_run_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    reject_unknown(j, {"catalog", "dataset", "features", "generation", "seed", "out", "round", "rounds", "episodes",
                       "policy", "env", "trainer"},
                   "config");
    if (j.contains("catalog")) c.catalog_path = j["catalog"].get<std::string>();
    if (j.contains("dataset")) c.dataset_path = j["dataset"].get<std::string>();
    if (j.contains("features")) c.features_path = j["features"].get<std::string>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    read(j, "seed", c.seed);
    read(j, "round", c.round);
    read(j, "rounds", c.rounds);
    read(j, "episodes", c.episodes);
    if (j.contains("policy")) {
      if (j["policy"].is_array()) {
        c.policies = j["policy"].get<std::vector<std::string>>();
      } else {
        c.policies = {j["policy"].get<std::string>()};
      }
    }
    if (j.contains("generation")) {
      const json& g = j["generation"];
      reject_unknown(g, {"subsets", "tasks_per_subset", "window_s", "qubits", "depth", "shots", "app_tags", "arrival"},
                     "generation");
      read(g, "subsets", c.generation.n_subsets);
      read(g, "tasks_per_subset", c.generation.tasks_per_subset);
      read(g, "window_s", c.generation.window_s);
      read_range(g, "qubits", c.generation.qubit_range);
      read_range(g, "depth", c.generation.depth_range);
      read_range(g, "shots", c.generation.shots_range);
      read(g, "app_tags", c.generation.app_tags);
      if (g.contains("arrival")) {
        const auto a = g["arrival"].get<std::string>();
        if (a == "uniform") {
          c.generation.arrival = ArrivalModel::Uniform;
        } else if (a == "poisson") {
          c.generation.arrival = ArrivalModel::Poisson;
        } else {
          throw InvalidConfig("unknown arrival model '" + a + "'");
        }
      }
    }
    if (j.contains("env")) {
      const json& e = j["env"];
      reject_unknown(e, {"penalty", "max_steps", "normalize", "reward_mode", "success_reward", "static_features",
                         "backlog_bound_s"},
                     "env");
      read(e, "penalty", c.env.penalty);
      read(e, "max_steps", c.env.max_steps);
      read(e, "normalize", c.env.normalize);
      read(e, "success_reward", c.env.success_reward);
      read(e, "static_features", c.env.static_features);
      read(e, "backlog_bound_s", c.env.backlog_bound_s);
      if (e.contains("reward_mode")) c.env.reward_mode = parse_reward_mode(e["reward_mode"].get<std::string>());
    }
    if (j.contains("trainer")) {
      const json& t = j["trainer"];
      reject_unknown(t, {"algo", "iterations", "qlearning", "dqn"}, "trainer");
      read(t, "algo", c.algo);
      read(t, "iterations", c.iterations);
      if (t.contains("qlearning")) {
        const json& q = t["qlearning"];
        reject_unknown(q, {"alpha", "gamma", "epsilon_start", "epsilon_end", "epsilon_decay_steps", "steps_per_iteration"},
                       "trainer.qlearning");
        read(q, "alpha", c.qlearning.alpha);
        read(q, "gamma", c.qlearning.gamma);
        read(q, "epsilon_start", c.qlearning.epsilon_start);
        read(q, "epsilon_end", c.qlearning.epsilon_end);
        read(q, "epsilon_decay_steps", c.qlearning.epsilon_decay_steps);
        read(q, "steps_per_iteration", c.qlearning.steps_per_iteration);
      }
      if (t.contains("dqn")) {
        const json& d = t["dqn"];
        reject_unknown(d, {"learning_rate", "replay_capacity", "n_step", "prioritized", "pr_alpha", "pr_beta",
                           "pr_epsilon", "hidden_layers", "gamma", "epsilon_start", "epsilon_end",
                           "epsilon_decay_steps", "target_sync_every", "batch_size", "learning_starts", "train_every",
                           "steps_per_iteration", "grad_clip_norm", "normalize_inputs", "num_atoms"},
                       "trainer.dqn");
        auto& q = c.dqn;
        read(d, "learning_rate", q.learning_rate);
        read(d, "replay_capacity", q.replay_capacity);
        read(d, "n_step", q.n_step);
        read(d, "prioritized", q.prioritized);
        read(d, "pr_alpha", q.pr_alpha);
        read(d, "pr_beta", q.pr_beta);
        read(d, "pr_epsilon", q.pr_epsilon);
        read(d, "hidden_layers", q.hidden_layers);
        read(d, "gamma", q.gamma);
        read(d, "epsilon_start", q.epsilon_start);
        read(d, "epsilon_end", q.epsilon_end);
        read(d, "epsilon_decay_steps", q.epsilon_decay_steps);
        read(d, "target_sync_every", q.target_sync_every);
        read(d, "batch_size", q.batch_size);
        read(d, "learning_starts", q.learning_starts);
        read(d, "train_every", q.train_every);
        read(d, "steps_per_iteration", q.steps_per_iteration);
        read(d, "grad_clip_norm", q.grad_clip_norm);
        read(d, "normalize_inputs", q.normalize_inputs);
        read(d, "num_atoms", q.num_atoms);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::shared_ptr<const Dataset> build_dataset(const RunConfig& cfg) {
  if (cfg.dataset_path) {
    if (!fs::exists(*cfg.dataset_path)) throw InvalidConfig("dataset " + cfg.dataset_path->string() + " does not exist");
    return std::make_shared<const Dataset>(load_csv(*cfg.dataset_path));
  }
  const std::uint64_t seed = require_seed(cfg);
  if (cfg.features_path) {
    if (!fs::exists(*cfg.features_path)) throw InvalidConfig("features " + cfg.features_path->string() + " does not exist");
    const auto pool = features_from_csv(read_text(*cfg.features_path));
    return std::make_shared<const Dataset>(dataset_from_features(pool, cfg.generation, seed));
  }
  return std::make_shared<const Dataset>(generate_dataset(cfg.generation, seed));
}

Env build_env(const RunConfig& cfg) {
  EnvConfig ec;
  ec.catalog = build_catalog(cfg);
  ec.dataset = build_dataset(cfg);
  ec.penalty = cfg.env.penalty;
  ec.max_steps_per_episode = cfg.env.max_steps;
  ec.normalize = cfg.env.normalize;
  ec.reward_mode = cfg.env.reward_mode;
  ec.success_reward = cfg.env.success_reward;
  ec.static_features = cfg.env.static_features;
  ec.backlog_bound_s = cfg.env.backlog_bound_s;
  return Env(std::move(ec));
}

// ---------------------------------------------------------------- protocol

std::string EnvSession::handle(const std::string& line) {
  json resp;
  try {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::parse_error&) {
      return json{{"error", "ProtocolError"}, {"detail", "request is not valid JSON"}}.dump();
    }
    if (!req.is_object() || !req.contains("cmd") || !req["cmd"].is_string()) {
      return json{{"error", "ProtocolError"}, {"detail", "request needs a string 'cmd'"}}.dump();
    }
    const std::string cmd = req["cmd"].get<std::string>();
    if (cmd == "handshake") {
      if (req.contains("protocol") && req["protocol"] != kProtocolVersion) {
        return json{{"error", "ProtocolError"},
                    {"detail", "unsupported protocol " + req["protocol"].dump() + "; server speaks " +
                                   std::to_string(kProtocolVersion)}}
            .dump();
      }
      resp = {{"obs_dim", env_.obs_dim()},
              {"n_actions", env_.n_actions()},
              {"protocol", kProtocolVersion},
              {"normalize", env_.config().normalize},
              {"obs_low", env_.bounds().lo},
              {"obs_high", env_.bounds().hi},
              {"max_steps", env_.max_steps()}};
    } else if (cmd == "reset") {
      std::optional<std::uint64_t> seed;
      std::optional<std::int64_t> round;
      if (req.contains("seed") && !req["seed"].is_null()) seed = req["seed"].get<std::uint64_t>();
      if (req.contains("round") && !req["round"].is_null()) round = req["round"].get<std::int64_t>();
      resp = {{"obs", env_.reset(seed, round)}, {"round", env_.round()}};
    } else if (cmd == "step") {
      if (!req.contains("action") || !req["action"].is_number_integer()) {
        throw InvalidAction("step needs an integer 'action'");
      }
      const auto a = req["action"].get<std::int64_t>();
      if (a < 0) throw InvalidAction("action " + std::to_string(a) + " is negative");
      const StepResult r = env_.step(static_cast<std::size_t>(a));
      resp = {{"obs", r.observation},
              {"reward", r.reward},
              {"terminated", r.terminated},
              {"truncated", r.truncated},
              {"info", info_json(r.info)}};
    } else if (cmd == "close") {
      closed_ = true;
      resp = {{"ok", true}};
    } else {
      resp = {{"error", "ProtocolError"}, {"detail", "unknown cmd '" + cmd + "'"}};
    }
  } catch (const Error& e) {
    resp = {{"error", e.kind()}, {"detail", e.detail()}};
  } catch (const json::exception& e) {
    resp = {{"error", "ProtocolError"}, {"detail", e.what()}};
  }
  return resp.dump();
}

void serve_stream(EnvSession& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << session.handle(line) << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------- entry

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum cloud task-placement simulator", "qsim"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::int64_t> round, rounds, subsets, tasks, iterations, episodes;
  std::optional<double> window;
  std::vector<std::string> policies;
  std::string catalog, dataset, features, algo, listen;
  bool use_stdio = false;
  std::vector<std::string> qasm_inputs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--out", out_dir, "Output directory (must exist)");
    sub->add_option("--catalog", catalog, "Node catalog JSON");
    sub->add_option("--dataset", dataset, "Dataset CSV");
  };
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset CSV");
  common(gen);
  gen->add_option("--subsets", subsets, "Number of subsets");
  gen->add_option("--tasks", tasks, "Tasks per subset");
  gen->add_option("--window", window, "Arrival window in seconds");
  gen->add_option("--features", features, "Feature CSV from 'extract' to draw circuits from");

  auto* ext = app.add_subcommand("extract", "Extract circuit features from OpenQASM 2.0 files ('-' reads stdin)");
  ext->add_option("--out", out_dir, "Output directory (features.csv); stdout when omitted");
  ext->add_option("files", qasm_inputs, "QASM files");

  auto* sim = app.add_subcommand("simulate", "Run a policy over dataset rounds; writes trace.csv and stats.json");
  common(sim);
  sim->add_option("--policy", policies, "random | round_robin | greedy | policy file");
  sim->add_option("--round", round, "Single round to run");
  sim->add_option("--rounds", rounds, "Number of rounds from 0 (default all)");

  auto* train = app.add_subcommand("train", "Train a placement policy; writes policy file and curve.csv");
  common(train);
  train->add_option("--algo", algo, "qlearning | dqn");
  train->add_option("--iterations", iterations, "Training iterations");

  auto* eval = app.add_subcommand("evaluate", "Evaluate one or more policies; writes eval.json");
  common(eval);
  eval->add_option("--policy", policies, "Policy spec; repeat to compare");
  eval->add_option("--episodes", episodes, "Episodes per policy");

  auto* serve = app.add_subcommand("serve-env", "Serve the environment over newline-delimited JSON");
  common(serve);
  serve->add_flag("--stdio", use_stdio, "Serve one session on stdin/stdout");
  serve->add_option("--listen", listen, "HOST:PORT for TCP sessions");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw InvalidConfig("config " + config_path + " does not exist");
      cfg = parse_run_config(read_text(config_path));
    }
    if (seed) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!catalog.empty()) cfg.catalog_path = catalog;
    if (!dataset.empty()) cfg.dataset_path = dataset;
    if (!features.empty()) cfg.features_path = features;
    if (round) cfg.round = round;
    if (rounds) cfg.rounds = rounds;
    if (subsets) cfg.generation.n_subsets = *subsets;
    if (tasks) cfg.generation.tasks_per_subset = *tasks;
    if (window) cfg.generation.window_s = *window;
    if (!policies.empty()) cfg.policies = policies;
    if (!algo.empty()) cfg.algo = algo;
    if (iterations) cfg.iterations = *iterations;
    if (episodes) cfg.episodes = *episodes;

    if (gen->parsed()) return cmd_generate(cfg, out);
    if (ext->parsed()) return cmd_extract(cfg, qasm_inputs, in, out, err);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (train->parsed()) return cmd_train(cfg, out);
    if (eval->parsed()) return cmd_evaluate(cfg, out);
    if (serve->parsed()) return cmd_serve(cfg, use_stdio, listen.empty() ? std::nullopt : std::optional(listen), in, out);
  } catch (const InvalidConfig& e) {
    err << "error: " << e.detail() << "\n";
    return kInvalidConfig;
  } catch (const Error& e) {
    // Anything rejected while loading inputs counts as invalid configuration.
    err << "error: " << e.what() << "\n";
    return kInvalidConfig;
  }
  return kInvalidConfig;
}

}  // namespace qsim::cli
