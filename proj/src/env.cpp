#include "qsim/env.hpp"

#include <algorithm>
#include <cmath>

namespace qsim {

Observation normalize(std::span<const double> obs, const ObservationBounds& bounds) {
  if (bounds.lo.size() != obs.size() || bounds.hi.size() != obs.size()) {
    throw InvalidParams("bounds have " + std::to_string(bounds.lo.size()) + " components, observation has " +
                        std::to_string(obs.size()));
  }
  Observation out(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double lo = bounds.lo[i];
    const double hi = bounds.hi[i];
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw DegenerateBounds("non-finite bound at component " + std::to_string(i));
    if (hi == lo) throw DegenerateBounds("hi == lo at component " + std::to_string(i));
    out[i] = std::clamp((obs[i] - lo) / (hi - lo), 0.0, 1.0);
  }
  return out;
}

Env::Env(EnvConfig config) : config_(std::move(config)) {
  if (config_.catalog.size() == 0) throw InvalidParams("node catalog is empty");
  if (!config_.dataset || config_.dataset->n_subsets() == 0) throw InvalidParams("dataset has no subsets");
  if (!(config_.penalty < 0.0)) throw InvalidParams("penalty must be negative");
  if (config_.reward_mode == RewardMode::Custom && !config_.custom_reward) {
    throw InvalidParams("custom reward mode without a reward hook");
  }
  if (!(config_.backlog_bound_s > 0.0)) throw InvalidParams("backlog_bound_s must be positive");

  std::int64_t max_tasks = 0;
  std::int64_t max_q = 1;
  std::int64_t max_depth = 1;
  std::int64_t max_shots = 1;
  for (const auto& subset : config_.dataset->subsets) {
    max_tasks = std::max<std::int64_t>(max_tasks, static_cast<std::int64_t>(subset.size()));
    for (const auto& t : subset) {
      max_q = std::max(max_q, t.qubits);
      max_depth = std::max(max_depth, t.depth1_layers);
      max_shots = std::max(max_shots, t.shots);
    }
  }
  max_steps_ = config_.max_steps_per_episode == 0 ? 10 * max_tasks : config_.max_steps_per_episode;
  if (max_steps_ < max_tasks) {
    throw InvalidParams("max_steps_per_episode (" + std::to_string(max_steps_) + ") is below the subset size (" +
                        std::to_string(max_tasks) + ")");
  }

  broker_ = Broker(config_.catalog);
  layout_.n_nodes = config_.catalog.size();
  layout_.static_features = config_.static_features;

  double max_qv = 1.0;
  double max_clops = 1.0;
  for (const auto& e : config_.catalog.entries()) {
    max_qv = std::max(max_qv, static_cast<double>(e.quantum_volume));
    max_clops = std::max(max_clops, e.clops);
  }
  bounds_.lo.assign(layout_.dim(), 0.0);
  bounds_.hi.assign(layout_.dim(), 0.0);
  for (std::size_t i = 0; i < layout_.n_nodes; ++i) {
    bounds_.hi[layout_.node_qubits(i)] = static_cast<double>(config_.catalog.max_qubits());
    bounds_.hi[layout_.node_backlog(i)] = config_.backlog_bound_s;
    if (layout_.static_features) {
      bounds_.hi[layout_.node_backlog(i) + 1] = max_qv;
      bounds_.hi[layout_.node_backlog(i) + 2] = max_clops;
    }
  }
  bounds_.hi[layout_.task_qubits()] = static_cast<double>(max_q);
  bounds_.hi[layout_.task_depth()] = static_cast<double>(max_depth);
  bounds_.hi[layout_.task_shots()] = static_cast<double>(max_shots);
}

void Env::on_event(const Event& ev) {
  broker_.on_event(ev);
  fired_.push_back(ev);
}

Observation Env::reset(std::optional<std::uint64_t> seed, std::optional<std::int64_t> round) {
  const std::int64_t r = round.value_or(next_round_);
  const auto& subset = get_subset(*config_.dataset, r);
  if (subset.empty()) throw InvalidParams("subset " + std::to_string(r) + " has no tasks");

  seed_ = seed;
  round_ = r;
  next_round_ = (r + 1) % static_cast<std::int64_t>(config_.dataset->n_subsets());
  tasks_ = &subset;
  current_ = 0;
  engine_ = Engine{};
  broker_ = Broker(config_.catalog);
  started_ = true;
  terminated_ = false;
  truncated_ = false;
  steps_ = 0;
  violations_ = 0;
  successes_ = 0;
  reward_sum_ = 0.0;
  completion_sum_ = 0.0;
  records_.clear();
  rewards_.clear();
  fired_.clear();

  for (const auto& t : subset) engine_.schedule(t.arrival_at, {EventKind::TaskArrival, t.id, -1, 0});
  engine_.run_until(subset.front().arrival_at, [this](Engine&, const Event& ev) { on_event(ev); });
  return observe();
}

const QTask* Env::current_task() const {
  if (tasks_ == nullptr || current_ >= tasks_->size() || episode_over()) return nullptr;
  return &(*tasks_)[current_];
}

double Env::reward(const ExecutionRecord& record) const {
  if (!record.success) return config_.penalty;
  switch (config_.reward_mode) {
    case RewardMode::InverseCompletion:
      if (!(record.completion_s > 0.0)) {
        throw RewardUndefined("task " + std::to_string(record.task_id) + " has zero completion time");
      }
      return 1.0 / record.completion_s;
    case RewardMode::Constant:
      return config_.success_reward;
    case RewardMode::Custom:
      return config_.custom_reward(record, broker_.node(static_cast<std::size_t>(record.node_id)));
  }
  return config_.penalty;
}

StepResult Env::step(std::size_t action) {
  if (!started_) throw EpisodeOver("step() before reset()");
  if (episode_over()) throw EpisodeOver("episode has ended; call reset()");
  if (action >= broker_.size()) {
    throw InvalidAction("action " + std::to_string(action) + " outside [0, " + std::to_string(broker_.size()) + ")");
  }
  const QTask& task = (*tasks_)[current_];
  const QNode& target = broker_.node(action);
  // Refuse before touching any state.
  if (config_.reward_mode == RewardMode::InverseCompletion && fits(task, target) &&
      backlog(target, engine_.now()) + estimate_execution_time(task, target) == 0.0) {
    throw RewardUndefined("task " + std::to_string(task.id) + " would complete in zero time");
  }

  const ExecutionRecord rec = broker_.submit(task, action, engine_.now(), engine_);
  const double r = reward(rec);
  ++steps_;
  reward_sum_ += r;
  records_.push_back(rec);
  rewards_.push_back(r);

  auto fire = [this](Engine&, const Event& ev) { on_event(ev); };
  if (!rec.success) {
    ++violations_;
  } else {
    ++successes_;
    completion_sum_ += rec.completion_s;
    ++current_;
    if (current_ == tasks_->size()) {
      terminated_ = true;
      engine_.run_all(fire);
    } else {
      engine_.run_until((*tasks_)[current_].arrival_at, fire);
    }
  }
  truncated_ = !terminated_ && steps_ >= max_steps_;

  StepResult out;
  out.reward = r;
  out.terminated = terminated_;
  out.truncated = truncated_;
  out.info.success = rec.success;
  out.info.task_id = rec.task_id;
  out.info.node_id = rec.node_id;
  out.info.wait_s = rec.wait_s;
  out.info.exec_s = rec.exec_s;
  out.info.completion_s = rec.completion_s;
  out.info.violations_so_far = violations_;
  out.observation = observe();
  return out;
}

Observation Env::raw_observation() const {
  Observation obs(layout_.dim(), 0.0);
  for (std::size_t i = 0; i < broker_.size(); ++i) {
    const QNode& n = broker_.node(i);
    obs[layout_.node_qubits(i)] = static_cast<double>(n.spec.qubits);
    obs[layout_.node_backlog(i)] = backlog(n, engine_.now());
    if (layout_.static_features) {
      obs[layout_.node_backlog(i) + 1] = static_cast<double>(n.spec.quantum_volume);
      obs[layout_.node_backlog(i) + 2] = n.spec.clops;
    }
  }
  // Task slots stay zero once no task is waiting.
  if (const QTask* t = current_task()) {
    obs[layout_.task_qubits()] = static_cast<double>(t->qubits);
    obs[layout_.task_depth()] = static_cast<double>(t->depth1_layers);
    obs[layout_.task_shots()] = static_cast<double>(t->shots);
  }
  return obs;
}

Observation Env::observe() const {
  Observation raw = raw_observation();
  return config_.normalize ? normalize(raw, bounds_) : raw;
}

EpisodeStats Env::episode_stats() const {
  if (!episode_over()) throw EpisodeRunning("episode statistics requested before the episode ended");
  EpisodeStats s;
  s.reward_sum = reward_sum_;
  s.steps = steps_;
  s.violations = violations_;
  s.successes = successes_;
  s.mean_completion_s = successes_ > 0 ? completion_sum_ / static_cast<double>(successes_) : 0.0;
  return s;
}

EnvSnapshot Env::snapshot() const {
  return EnvSnapshot{engine_, broker_, round_, current_, successes_, completion_sum_};
}

}  // namespace qsim
