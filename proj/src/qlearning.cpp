#include "qsim/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qsim {

StateDiscretizer::StateDiscretizer(ObservationLayout layout) : layout_(layout) {
  if (layout_.n_nodes == 0 || layout_.n_nodes > 12) {
    throw InvalidParams("state discretizer supports 1 to 12 nodes, got " + std::to_string(layout_.n_nodes));
  }
}

std::uint64_t StateDiscretizer::key(std::span<const double> raw_obs) const {
  const std::size_t n = layout_.n_nodes;
  if (raw_obs.size() != layout_.dim()) throw InvalidParams("observation does not match the discretizer layout");
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (raw_obs[layout_.node_qubits(i)] >= raw_obs[layout_.task_qubits()]) mask |= std::uint64_t{1} << i;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return raw_obs[layout_.node_backlog(a)] < raw_obs[layout_.node_backlog(b)];
  });
  std::uint64_t ranking = 0;
  for (std::size_t idx : order) ranking = ranking * n + idx;
  return (ranking << n) | mask;
}

void QLearningConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidHyperparameters("alpha must be in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidHyperparameters("gamma must be in [0, 1]");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw InvalidHyperparameters("epsilon must be in [0, 1]");
  }
  if (epsilon_decay_steps < 0) throw InvalidHyperparameters("epsilon_decay_steps must be non-negative");
  if (steps_per_iteration < 1) throw InvalidHyperparameters("steps_per_iteration must be positive");
}

std::vector<double>& QTablePolicy::row(std::uint64_t key) {
  auto [it, inserted] = table_.try_emplace(key);
  if (inserted) it->second.assign(n_actions_, 0.0);
  return it->second;
}

std::size_t QTablePolicy::select(std::span<const double> raw_obs) {
  const auto it = table_.find(discretizer_.key(raw_obs));
  if (it == table_.end()) return 0;
  const auto& q = it->second;
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::pair<QTablePolicy, TrainingCurve> train_qlearning(Env& env, std::int64_t iterations, const QLearningConfig& hp,
                                                       std::uint64_t seed) {
  if (iterations < 1) throw InvalidHyperparameters("iterations must be at least 1");
  hp.validate();
  Rng rng(seed);
  QTablePolicy policy(StateDiscretizer(env.layout()), env.n_actions());
  CurveRecorder recorder;

  env.reset(seed);
  std::int64_t global_step = 0;
  for (std::int64_t it = 0; it < iterations; ++it) {
    for (std::int64_t s = 0; s < hp.steps_per_iteration; ++s, ++global_step) {
      const Observation obs = env.raw_observation();
      const std::uint64_t key = policy.discretizer().key(obs);
      const double eps = linear_epsilon(hp.epsilon_start, hp.epsilon_end, hp.epsilon_decay_steps, global_step);
      std::size_t action;
      if (rng.uniform01() < eps) {
        action = rng.index(env.n_actions());
      } else {
        const auto& q = policy.row(key);
        action = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
      }
      const StepResult res = env.step(action);

      double target = res.reward;
      if (!res.terminated) {
        // On truncation the task is still pending, so bootstrapping stays valid.
        const auto& next = policy.row(policy.discretizer().key(env.raw_observation()));
        target += hp.gamma * *std::max_element(next.begin(), next.end());
      }
      auto& q = policy.row(key);
      q[action] += hp.alpha * (target - q[action]);

      if (env.episode_over()) {
        recorder.episode_finished(env.episode_stats());
        env.reset(seed);
      }
    }
    recorder.end_iteration();
  }
  return {std::move(policy), recorder.take()};
}

}  // namespace qsim
