#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qsim/cloud.hpp"
#include "qsim/engine.hpp"
#include "qsim/workload.hpp"

namespace qsim {

using Observation = std::vector<double>;

enum class RewardMode {
  InverseCompletion,  // 1 / completion_s
  Constant,           // success_reward
  Custom,             // EnvConfig::custom_reward
};

struct EnvConfig {
  NodeCatalog catalog = NodeCatalog::builtin();
  std::shared_ptr<const Dataset> dataset;
  RewardMode reward_mode = RewardMode::InverseCompletion;
  double success_reward = 1.0;  // used in Constant mode
  double penalty = -10.0;
  /// 0 selects the default of 10 x tasks_per_subset.
  std::int64_t max_steps_per_episode = 0;
  bool normalize = false;
  /// Adds (quantum_volume, clops) to each node's features.
  bool static_features = false;
  /// Upper normalization bound for node backlog.
  double backlog_bound_s = 300.0;
  /// Success-branch reward hook for RewardMode::Custom.
  std::function<double(const ExecutionRecord&, const QNode&)> custom_reward;
};

// Index arithmetic for the flat observation vector:
//   [node 0 features, ..., node n-1 features, task qubits, task depth, task shots]
// with node features (qubits, backlog) or (qubits, backlog, qv, clops).
struct ObservationLayout {
  std::size_t n_nodes = 0;
  bool static_features = false;

  std::size_t node_stride() const { return static_features ? 4 : 2; }
  std::size_t node_qubits(std::size_t i) const { return i * node_stride(); }
  std::size_t node_backlog(std::size_t i) const { return i * node_stride() + 1; }
  std::size_t task_offset() const { return n_nodes * node_stride(); }
  std::size_t task_qubits() const { return task_offset(); }
  std::size_t task_depth() const { return task_offset() + 1; }
  std::size_t task_shots() const { return task_offset() + 2; }
  std::size_t dim() const { return task_offset() + 3; }

  bool operator==(const ObservationLayout&) const = default;
};

struct ObservationBounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Component-wise (x - lo) / (hi - lo) clamped to [0, 1]. Throws DegenerateBounds when hi == lo.
Observation normalize(std::span<const double> obs, const ObservationBounds& bounds);

struct StepInfo {
  bool success = false;
  TaskId task_id = -1;
  NodeId node_id = -1;
  double wait_s = ExecutionRecord::kUndefined;
  double exec_s = ExecutionRecord::kUndefined;
  double completion_s = ExecutionRecord::kUndefined;
  std::int64_t violations_so_far = 0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

struct EpisodeStats {
  double reward_sum = 0.0;
  std::int64_t steps = 0;
  std::int64_t violations = 0;
  std::int64_t successes = 0;
  double mean_completion_s = 0.0;
};

// Everything that defines where the simulation is, minus the step and
// violation counters. A capacity violation must leave this unchanged.
struct EnvSnapshot {
  Engine engine;
  Broker broker;
  std::int64_t round = -1;
  std::size_t current = 0;
  std::int64_t successes = 0;
  double completion_sum = 0.0;

  bool operator==(const EnvSnapshot&) const = default;
};

// Task-placement environment. One subset of the dataset is one episode; each
// step places the current task on the chosen node. Successful placements
// advance the clock to the next arrival; a capacity violation re-presents the
// same task at the same time. Copies are independent clones.
class Env {
 public:
  /// Throws InvalidParams when the configuration is inconsistent.
  explicit Env(EnvConfig config);

  /// Starts an episode on `round`, or on the round after the previous one.
  /// `seed` is recorded only: the dynamics have no randomness.
  Observation reset(std::optional<std::uint64_t> seed = std::nullopt, std::optional<std::int64_t> round = std::nullopt);

  /// Throws InvalidAction for an out-of-range node and EpisodeOver after the episode ended.
  StepResult step(std::size_t action);

  /// Reward for a placement outcome: the success branch per reward_mode, else the penalty.
  double reward(const ExecutionRecord& record) const;

  /// Observation in the configured representation (normalized when enabled).
  Observation observe() const;
  /// Observation in raw units regardless of configuration.
  Observation raw_observation() const;

  /// Throws EpisodeRunning while the episode is live.
  EpisodeStats episode_stats() const;

  EnvSnapshot snapshot() const;

  std::size_t n_actions() const noexcept { return broker_.size(); }
  std::size_t obs_dim() const noexcept { return layout_.dim(); }
  const ObservationLayout& layout() const noexcept { return layout_; }
  const ObservationBounds& bounds() const noexcept { return bounds_; }
  const EnvConfig& config() const noexcept { return config_; }
  const Dataset& dataset() const noexcept { return *config_.dataset; }
  std::int64_t max_steps() const noexcept { return max_steps_; }

  const Engine& engine() const noexcept { return engine_; }
  const Broker& broker() const noexcept { return broker_; }
  SimTime now() const noexcept { return engine_.now(); }
  std::int64_t round() const noexcept { return round_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  /// Null when no task is waiting for placement.
  const QTask* current_task() const;
  bool episode_over() const noexcept { return terminated_ || truncated_; }
  bool started() const noexcept { return started_; }

  /// Placement outcomes of this episode, violations included, in step order.
  const std::vector<ExecutionRecord>& records() const noexcept { return records_; }
  const std::vector<double>& rewards() const noexcept { return rewards_; }
  /// Engine events fired so far this episode.
  const std::vector<Event>& fired_events() const noexcept { return fired_; }

 private:
  void on_event(const Event& ev);

  EnvConfig config_;
  ObservationLayout layout_;
  ObservationBounds bounds_;
  std::int64_t max_steps_ = 0;

  Engine engine_;
  Broker broker_;
  const std::vector<QTask>* tasks_ = nullptr;
  std::size_t current_ = 0;
  std::int64_t round_ = -1;
  std::int64_t next_round_ = 0;
  std::optional<std::uint64_t> seed_;
  bool started_ = false;
  bool terminated_ = false;
  bool truncated_ = false;

  std::int64_t steps_ = 0;
  std::int64_t violations_ = 0;
  std::int64_t successes_ = 0;
  double reward_sum_ = 0.0;
  double completion_sum_ = 0.0;
  std::vector<ExecutionRecord> records_;
  std::vector<double> rewards_;
  std::vector<Event> fired_;
};

}  // namespace qsim
