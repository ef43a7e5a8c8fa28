#include "qsim/agents.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "qsim/format.hpp"

namespace qsim {

std::size_t select_greedy(std::span<const double> raw_obs, const NodeCatalog& catalog, const ObservationLayout& layout) {
  if (raw_obs.size() != layout.dim() || catalog.size() != layout.n_nodes) {
    throw InvalidParams("observation does not match the cluster layout");
  }
  const double task_qubits = raw_obs[layout.task_qubits()];
  const auto depth = static_cast<std::int64_t>(raw_obs[layout.task_depth()]);
  const auto shots = static_cast<std::int64_t>(raw_obs[layout.task_shots()]);
  std::size_t best = 0;
  double best_completion = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < layout.n_nodes; ++i) {
    if (raw_obs[layout.node_qubits(i)] < task_qubits) continue;
    const double completion =
        raw_obs[layout.node_backlog(i)] + estimate_execution_time(depth, shots, catalog.entries()[i].d1cps);
    if (completion < best_completion) {
      best_completion = completion;
      best = i;
    }
  }
  return best;
}

std::size_t oracle_step(const Env& env) {
  const QTask* task = env.current_task();
  if (task == nullptr) throw EpisodeOver("oracle_step needs a task awaiting placement");
  if (env.n_actions() > 8) throw InvalidParams("oracle_step is limited to 8 nodes");
  std::size_t best = 0;
  double best_completion = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < env.n_actions(); ++a) {
    Engine engine = env.engine();
    Broker broker = env.broker();
    const ExecutionRecord rec = broker.submit(*task, a, env.now(), engine);
    if (rec.success && rec.completion_s < best_completion) {
      best_completion = rec.completion_s;
      best = a;
    }
  }
  return best;
}

namespace {

// Welford accumulator.
class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  Moments moments() const {
    return {mean_, n_ > 1 ? std::sqrt(m2_ / static_cast<double>(n_ - 1)) : 0.0};
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace

EvaluationSummary evaluate(Policy& policy, Env& env, std::int64_t episodes, std::uint64_t seed) {
  if (episodes < 1) throw InvalidParams("evaluate needs at least one episode");
  Rng rng(seed);
  Accumulator reward, steps, viol, completion;
  EvaluationSummary out;
  for (std::int64_t e = 0; e < episodes; ++e) {
    const auto round = static_cast<std::int64_t>(rng.index(env.dataset().n_subsets()));
    env.reset(seed, round);
    while (!env.episode_over()) {
      const Observation obs = env.raw_observation();
      env.step(policy.select(obs));
    }
    const EpisodeStats s = env.episode_stats();
    reward.add(s.reward_sum);
    steps.add(static_cast<double>(s.steps));
    viol.add(static_cast<double>(s.violations));
    completion.add(s.mean_completion_s);
    out.total_steps += s.steps;
    out.total_violations += s.violations;
    out.per_episode.push_back(s);
  }
  out.episodes = episodes;
  out.reward_sum = reward.moments();
  out.steps = steps.moments();
  out.violations = viol.moments();
  out.mean_completion_s = completion.moments();
  out.violation_rate = out.total_steps > 0
                           ? static_cast<double>(out.total_violations) / static_cast<double>(out.total_steps)
                           : 0.0;
  return out;
}

double linear_epsilon(double start, double end, std::int64_t decay_steps, std::int64_t step) {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

std::string TrainingCurve::to_csv() const {
  std::string out = kCurveCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + ',' + std::to_string(r.episodes) + ',' + format_shortest(r.ep_reward_mean) +
           ',' + format_shortest(r.ep_len_mean) + ',' + format_shortest(r.violations_mean) + '\n';
  }
  return out;
}

TrainingCurve curve_from_csv(std::string_view text) {
  TrainingCurve curve;
  std::size_t lineno = 0;
  std::size_t b = 0;
  while (b < text.size()) {
    auto e = text.find('\n', b);
    if (e == std::string_view::npos) e = text.size();
    const std::string line(text.substr(b, e - b));
    b = e + 1;
    ++lineno;
    if (lineno == 1) {
      if (line != kCurveCsvHeader) throw FormatError(1, "expected header '" + std::string(kCurveCsvHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    CurveRow r;
    char tail = 0;
    // Five comma separated numbers and nothing after them.
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf,%lf%c", &r.iteration, &r.episodes, &r.ep_reward_mean,
                    &r.ep_len_mean, &r.violations_mean, &tail) != 5) {
      throw FormatError(lineno, "malformed curve row");
    }
    if (!curve.rows.empty() && r.iteration <= curve.rows.back().iteration) {
      throw FormatError(lineno, "iterations must be strictly increasing");
    }
    curve.rows.push_back(r);
  }
  if (lineno == 0) throw FormatError(1, "empty curve file");
  return curve;
}

void CurveRecorder::episode_finished(const EpisodeStats& stats) {
  ++n_;
  reward_ += stats.reward_sum;
  len_ += static_cast<double>(stats.steps);
  viol_ += static_cast<double>(stats.violations);
}

void CurveRecorder::end_iteration() {
  CurveRow row;
  row.iteration = static_cast<std::int64_t>(curve_.rows.size()) + 1;
  row.episodes = n_;
  if (n_ > 0) {
    const double n = static_cast<double>(n_);
    row.ep_reward_mean = reward_ / n;
    row.ep_len_mean = len_ / n;
    row.violations_mean = viol_ / n;
  } else if (!curve_.rows.empty()) {
    row.ep_reward_mean = curve_.rows.back().ep_reward_mean;
    row.ep_len_mean = curve_.rows.back().ep_len_mean;
    row.violations_mean = curve_.rows.back().violations_mean;
  }
  curve_.rows.push_back(row);
  n_ = 0;
  reward_ = len_ = viol_ = 0.0;
}

}  // namespace qsim
