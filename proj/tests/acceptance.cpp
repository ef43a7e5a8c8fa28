// Acceptance suite: one PASS/FAIL line per criterion; exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "qsim/agents.hpp"
#include "qsim/qasm.hpp"
#include "qsim/qlearning.hpp"
#include "qsim/random.hpp"

using namespace qsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::shared_ptr<const Dataset> generated(std::int64_t subsets, std::uint64_t seed) {
  GenerationParams p;
  p.n_subsets = subsets;
  return std::make_shared<const Dataset>(generate_dataset(p, seed));
}

// ---------------------------------------------------------------- criteria

Outcome node_catalog() {
  Outcome o;
  struct Row {
    const char* name;
    std::int64_t qubits, qv;
    double clops, d1cps;
  };
  const Row rows[] = {{"washington", 127, 64, 850.0, 16967.5},
                      {"kolkata", 27, 128, 2000.0, 39900.0},
                      {"hanoi", 27, 64, 2300.0, 45935.0},
                      {"perth", 7, 32, 2900.0, 57905.0},
                      {"lagos", 7, 32, 2700.0, 53865.0}};
  for (const auto& r : rows) {
    const QNode n = create_ibmq_node(r.name);
    o.require(n.spec.name == r.name && n.spec.qubits == r.qubits && n.spec.quantum_volume == r.qv &&
                  n.spec.clops == r.clops && n.spec.d1cps == r.d1cps,
              std::string("row mismatch for ") + r.name);
  }
  o.require(NodeCatalog::builtin().size() == 5, "catalog does not have five rows");
  if (o.pass) o.detail = "5/5 rows exact";
  return o;
}

Outcome execution_time() {
  Outcome o;
  const QNode hanoi = create_ibmq_node("hanoi");
  const double t = estimate_execution_time(100, 1000, hanoi.spec.d1cps);
  o.require(std::abs(t - 100000.0 / 45935.0) <= 1e-9, fmt("hanoi 100x1000 gave %.12f", t));
  Rng rng(2024);
  const auto& catalog = NodeCatalog::builtin().entries();
  for (int i = 0; i < 10000; ++i) {
    const auto& spec = catalog[rng.index(catalog.size())];
    const std::int64_t depth = rng.uniform_int(1, 5000);
    const std::int64_t shots = rng.uniform_int(1, 20000);
    const std::int64_t k = rng.uniform_int(2, 9);
    const double base = estimate_execution_time(depth, shots, spec.d1cps);
    const double by_shots = estimate_execution_time(depth, k * shots, spec.d1cps);
    const double by_depth = estimate_execution_time(k * depth, shots, spec.d1cps);
    const double tol = 1e-12 * std::max(1.0, by_shots);
    o.require(std::abs(by_shots - double(k) * base) <= tol && std::abs(by_depth - double(k) * base) <= tol &&
                  base > 0.0,
              fmt("linearity broken at depth %.0f shots %.0f", double(depth), double(shots)));
  }
  if (o.pass) o.detail = fmt("t=%.12f s; 10000 linearity checks", t);
  return o;
}

Outcome conservation() {
  Outcome o;
  EnvConfig c;
  GenerationParams p;
  p.n_subsets = 40;  // 40 x 25 = 1000 tasks
  c.dataset = std::make_shared<const Dataset>(generate_dataset(p, 99));
  Env env(c);
  Rng rng(5);
  std::int64_t rows = 0;
  for (std::int64_t round = 0; round < p.n_subsets; ++round) {
    env.reset(std::nullopt, round);
    while (!env.episode_over()) {
      // Mostly greedy, partly random, so queues build up on every node.
      const auto obs = env.raw_observation();
      env.step(rng.bernoulli(0.5) ? rng.index(env.n_actions()) : select_greedy(obs, c.catalog, env.layout()));
    }
    std::map<NodeId, std::vector<const ExecutionRecord*>> per_node;
    for (const auto& r : env.records()) {
      if (!r.success) continue;
      ++rows;
      o.require(r.completion_s == r.wait_s + r.exec_s, "completion != wait + exec");
      o.require(r.wait_s >= 0.0 && r.start_at.seconds - r.dispatch_at.seconds == r.wait_s, "wait inconsistent");
      per_node[r.node_id].push_back(&r);
    }
    for (const auto& [node, recs] : per_node) {
      for (std::size_t i = 1; i < recs.size(); ++i) {
        o.require(recs[i]->start_at.seconds >= recs[i - 1]->start_at.seconds + recs[i - 1]->exec_s,
                  "FIFO overlap on node " + std::to_string(node));
      }
    }
  }
  o.require(rows == 1000, "expected 1000 successful rows, got " + std::to_string(rows));
  if (o.pass) o.detail = "1000 rows, 0 conservation or FIFO breaches";
  return o;
}

Outcome reward_law() {
  Outcome o;
  EnvConfig c;
  c.dataset = generated(30, 7);
  Env env(c);
  Rng rng(6);
  std::int64_t successes = 0, failures = 0;
  for (std::int64_t round = 0; round < 30; ++round) {
    env.reset(std::nullopt, round);
    while (!env.episode_over()) {
      const EnvSnapshot before = env.snapshot();
      const auto r = env.step(rng.index(env.n_actions()));
      if (r.info.success) {
        ++successes;
        o.require(std::abs(r.reward - 1.0 / r.info.completion_s) <= 1e-12, "success reward off");
      } else {
        ++failures;
        o.require(r.reward == -10.0, "penalty is not exactly -10");
        o.require(env.snapshot() == before, "violation changed the simulation state");
      }
    }
  }
  o.require(failures > 0, "no violations exercised");
  if (o.pass) o.detail = std::to_string(successes) + " successes, " + std::to_string(failures) + " violations";
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  Rng rng(31);
  std::int64_t states = 0;
  for (int cluster = 0; cluster < 6; ++cluster) {
    EnvConfig c;
    if (cluster > 0) {
      // Random 5-node clusters; some with equal speeds to exercise tie-breaking.
      std::vector<NodeSpec> specs;
      for (int i = 0; i < 5; ++i) {
        const double d1cps = cluster % 2 == 0 ? 20000.0 : rng.uniform(5000.0, 60000.0);
        specs.push_back({"n" + std::to_string(i), rng.uniform_int(5, 30), 32, 1000.0, d1cps});
      }
      c.catalog = NodeCatalog(specs);
    }
    c.dataset = generated(12, 100 + cluster);
    Env env(c);
    for (std::int64_t round = 0; round < 12; ++round) {
      env.reset(std::nullopt, round);
      while (!env.episode_over()) {
        const auto g = select_greedy(env.raw_observation(), c.catalog, env.layout());
        const auto oracle = oracle_step(env);
        ++states;
        o.require(g == oracle, "disagreement at state " + std::to_string(states));
        env.step(rng.bernoulli(0.6) ? rng.index(env.n_actions()) : g);
      }
    }
  }
  o.require(states >= 1000, "only " + std::to_string(states) + " states");
  if (o.pass) o.detail = std::to_string(states) + " states, 100% agreement";
  return o;
}

Outcome parser_oracle() {
  Outcome o;
  const auto corpus = testing::oracle_corpus();
  std::size_t agree = 0;
  for (const auto& c : corpus) {
    const auto f = extract_features_qasm(c.qasm);
    if (f.qubits == c.n_qubits && f.depth1_layers == testing::brute_force_depth(c.n_qubits, c.gates)) ++agree;
  }
  o.require(corpus.size() >= 20, "corpus too small");
  o.require(agree == corpus.size(), std::to_string(agree) + "/" + std::to_string(corpus.size()) + " agree");
  if (o.pass) o.detail = std::to_string(agree) + "/" + std::to_string(corpus.size()) + " circuits";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qsim");
  std::istringstream in;
  std::ostringstream out, err;
  return cli::run(args, in, out, err);
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "qsim_acceptance_determinism";
  fs::remove_all(root);
  std::string first[3];
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / std::to_string(pass);
    fs::create_directories(dir);
    const std::string d = dir.string();
    const std::string dataset = (dir / "dataset.csv").string();
    o.require(run_cli({"generate", "--seed", "11", "--out", d}) == 0, "generate failed");
    o.require(run_cli({"simulate", "--dataset", dataset, "--policy", "random", "--seed", "11", "--out", d}) == 0,
              "simulate failed");
    o.require(run_cli({"train", "--dataset", dataset, "--iterations", "100", "--seed", "11", "--out", d}) == 0,
              "train failed");
    const std::string files[3] = {slurp(dir / "dataset.csv"), slurp(dir / "trace.csv"), slurp(dir / "curve.csv")};
    for (int i = 0; i < 3; ++i) {
      if (pass == 0) {
        first[i] = files[i];
        o.require(!files[i].empty(), "empty output");
      } else {
        static const char* names[] = {"dataset.csv", "trace.csv", "curve.csv"};
        o.require(files[i] == first[i], std::string(names[i]) + " differs between runs");
      }
    }
  }
  fs::remove_all(root);
  if (o.pass) o.detail = "dataset.csv, trace.csv, curve.csv byte-identical";
  return o;
}

Outcome convergence() {
  Outcome o;
  EnvConfig c;  // built-in five-node cluster
  GenerationParams p;  // 25-task subsets, qubits 2-27, uniform arrivals over 60 s
  c.dataset = std::make_shared<const Dataset>(generate_dataset(p, 1));
  Env probe(c);
  RandomPolicy random(probe.n_actions(), 1);
  const auto baseline = evaluate(random, probe, 500, 1);
  o.require(baseline.steps.mean > 30.0, fmt("random ep_len_mean %.2f", baseline.steps.mean));

  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Env env(c);
    auto [policy, curve] = train_qlearning(env, 100, QLearningConfig{}, seed);
    const auto& rows = curve.rows;
    double len = 0.0, viol = 0.0, first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
      const auto& tail = rows[rows.size() - 10 + i];
      len += tail.ep_len_mean;
      viol += tail.violations_mean;
      last += tail.ep_reward_mean;
      first += rows[i].ep_reward_mean;
    }
    const double len_mean = len / 10.0;
    const double viol_rate = viol / len;
    o.require(len_mean >= 25.0 && len_mean <= 27.0, fmt("seed %.0f: final ep_len_mean %.3f", double(seed), len_mean));
    o.require(viol_rate < 0.05, fmt("seed %.0f: violation rate %.4f", double(seed), viol_rate));
    o.require(last / 10.0 > first / 10.0, fmt("seed %.0f: reward %.3f -> %.3f", double(seed), first / 10, last / 10));
    per_seed += fmt("; seed %.0f ep_len %.2f viol %.3f reward %.1f->%.1f", double(seed), len_mean, viol_rate,
                    first / 10.0, last / 10.0);
  }
  if (o.pass) o.detail = fmt("random ep_len %.2f", baseline.steps.mean) + per_seed;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"node catalog fidelity", node_catalog},
      {"execution-time formula", execution_time},
      {"conservation and FIFO", conservation},
      {"reward law", reward_law},
      {"greedy/oracle equivalence", oracle_equivalence},
      {"parser oracle", parser_oracle},
      {"determinism", determinism},
      {"convergence", convergence},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
