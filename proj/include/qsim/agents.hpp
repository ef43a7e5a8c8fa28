#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qsim/env.hpp"
#include "qsim/random.hpp"

namespace qsim {

// A placement policy. select() sees the raw (unnormalized) observation and
// may keep deterministic internal state (an RNG, a cursor).
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string kind() const = 0;
  virtual std::size_t select(std::span<const double> raw_obs) = 0;
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(std::size_t n_actions, std::uint64_t seed) : n_(n_actions), rng_(seed) {}
  std::string kind() const override { return "random"; }
  std::size_t select(std::span<const double>) override { return rng_.index(n_); }

 private:
  std::size_t n_;
  Rng rng_;
};

class RoundRobinPolicy final : public Policy {
 public:
  explicit RoundRobinPolicy(std::size_t n_actions) : n_(n_actions) {}
  std::string kind() const override { return "round_robin"; }
  std::size_t select(std::span<const double>) override { return next_++ % n_; }

 private:
  std::size_t n_;
  std::size_t next_ = 0;
};

/// Among nodes with enough qubits, the one with the smallest backlog plus
/// estimated execution time; ties go to the lowest index. Falls back to node 0
/// when no node can host the task.
std::size_t select_greedy(std::span<const double> raw_obs, const NodeCatalog& catalog, const ObservationLayout& layout);

class GreedyPolicy final : public Policy {
 public:
  GreedyPolicy(NodeCatalog catalog, ObservationLayout layout) : catalog_(std::move(catalog)), layout_(layout) {}
  std::string kind() const override { return "greedy"; }
  std::size_t select(std::span<const double> raw_obs) override { return select_greedy(raw_obs, catalog_, layout_); }

 private:
  NodeCatalog catalog_;
  ObservationLayout layout_;
};

/// Tries every action on a copy of the simulation and returns the one with
/// the smallest completion time (violations excluded, lowest index on ties,
/// node 0 when all violate). Requires a current task and at most 8 nodes.
std::size_t oracle_step(const Env& env);

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

struct EvaluationSummary {
  std::int64_t episodes = 0;
  Moments reward_sum;
  Moments steps;
  Moments violations;
  Moments mean_completion_s;
  std::int64_t total_steps = 0;
  std::int64_t total_violations = 0;
  double violation_rate = 0.0;  // violations / steps
  std::vector<EpisodeStats> per_episode;
};

/// Runs `episodes` full episodes on rounds drawn from `seed`.
EvaluationSummary evaluate(Policy& policy, Env& env, std::int64_t episodes, std::uint64_t seed);

/// Linear epsilon decay from start to end over decay_steps, then flat.
double linear_epsilon(double start, double end, std::int64_t decay_steps, std::int64_t step);

struct CurveRow {
  std::int64_t iteration = 0;
  std::int64_t episodes = 0;
  double ep_reward_mean = 0.0;
  double ep_len_mean = 0.0;
  double violations_mean = 0.0;

  bool operator==(const CurveRow&) const = default;
};

struct TrainingCurve {
  std::vector<CurveRow> rows;

  std::string to_csv() const;
  bool operator==(const TrainingCurve&) const = default;
};

inline constexpr const char* kCurveCsvHeader = "iteration,episodes,ep_reward_mean,ep_len_mean,violations_mean";

/// Throws FormatError.
TrainingCurve curve_from_csv(std::string_view text);

// Collects finished episodes and closes one curve row per iteration. An
// iteration in which no episode ended repeats the previous row's means.
class CurveRecorder {
 public:
  void episode_finished(const EpisodeStats& stats);
  void end_iteration();
  const TrainingCurve& curve() const noexcept { return curve_; }
  TrainingCurve take() { return std::move(curve_); }

 private:
  TrainingCurve curve_;
  std::int64_t n_ = 0;
  double reward_ = 0.0;
  double len_ = 0.0;
  double viol_ = 0.0;
};

}  // namespace qsim
