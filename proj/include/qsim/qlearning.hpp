#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "qsim/agents.hpp"

namespace qsim {

// Maps a raw observation to a table key made of
//   * the feasibility pattern: which nodes have enough qubits for the task,
//   * the backlog ranking: node indices sorted by backlog, ties by index.
// Supports up to 12 nodes.
class StateDiscretizer {
 public:
  StateDiscretizer() = default;
  explicit StateDiscretizer(ObservationLayout layout);

  std::uint64_t key(std::span<const double> raw_obs) const;
  const ObservationLayout& layout() const noexcept { return layout_; }

 private:
  ObservationLayout layout_;
};

struct QLearningConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  std::int64_t epsilon_decay_steps = 15000;  // linear decay
  std::int64_t steps_per_iteration = 1000;

  /// Throws InvalidHyperparameters.
  void validate() const;
};

class QTablePolicy final : public Policy {
 public:
  using Table = std::map<std::uint64_t, std::vector<double>>;

  QTablePolicy(StateDiscretizer discretizer, std::size_t n_actions, Table table = {})
      : discretizer_(discretizer), n_actions_(n_actions), table_(std::move(table)) {}

  std::string kind() const override { return "qtable"; }
  /// argmax over the row, lowest index on ties; unseen states pick action 0.
  std::size_t select(std::span<const double> raw_obs) override;

  const Table& table() const noexcept { return table_; }
  Table& table() noexcept { return table_; }
  const StateDiscretizer& discretizer() const noexcept { return discretizer_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  std::vector<double>& row(std::uint64_t key);

 private:
  StateDiscretizer discretizer_;
  std::size_t n_actions_;
  Table table_;
};

/// Tabular Q-learning with epsilon-greedy exploration. One curve row per
/// `steps_per_iteration` environment steps. Episodes cycle through rounds.
std::pair<QTablePolicy, TrainingCurve> train_qlearning(Env& env, std::int64_t iterations, const QLearningConfig& hp,
                                                       std::uint64_t seed);

}  // namespace qsim
