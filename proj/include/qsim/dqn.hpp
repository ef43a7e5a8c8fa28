#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qsim/agents.hpp"
#include "qsim/random.hpp"

namespace qsim {

struct DqnConfig {
  double learning_rate = 0.01;
  std::int64_t replay_capacity = 60000;
  std::int64_t n_step = 5;
  bool prioritized = true;
  double pr_alpha = 0.5;
  double pr_beta = 0.5;
  double pr_epsilon = 3e-6;
  std::vector<std::int64_t> hidden_layers{64, 64};
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.02;
  std::int64_t epsilon_decay_steps = 10000;
  std::int64_t target_sync_every = 500;
  std::int64_t batch_size = 32;
  std::int64_t learning_starts = 1000;
  std::int64_t train_every = 1;
  std::int64_t steps_per_iteration = 1000;
  double grad_clip_norm = 10.0;
  bool normalize_inputs = true;
  // Distributional atoms are not supported; a value here only triggers a warning.
  std::optional<std::int64_t> num_atoms;

  /// Throws InvalidHyperparameters.
  void validate() const;
};

// Fully connected network, ReLU on hidden layers, linear output. Parameters
// live in one flat vector: for each layer, the row-major weight matrix
// (out x in) followed by the bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> sizes, Rng& rng);
  Mlp(std::vector<std::size_t> sizes, std::vector<double> params);

  std::vector<double> forward(std::span<const double> x) const;

  /// Per-layer activations; front() is the input, back() the output.
  std::vector<std::vector<double>> activations(std::span<const double> x) const;

  /// Adds d(loss)/d(params) to `grad`, given activations of one sample and
  /// d(loss)/d(output).
  void backward(const std::vector<std::vector<double>>& acts, std::vector<double> dloss_dout,
                std::vector<double>& grad) const;

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  const std::vector<double>& params() const noexcept { return params_; }
  std::vector<double>& params() noexcept { return params_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t layer_offset(std::size_t layer) const;

  std::vector<std::size_t> sizes_;
  std::vector<double> params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::vector<double>& params, std::span<const double> grad);

 private:
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

struct Transition {
  std::vector<double> obs;
  std::size_t action = 0;
  double reward = 0.0;    // discounted sum over the n-step window
  std::vector<double> next_obs;
  bool done = false;      // no bootstrap from next_obs
  double discount = 1.0;  // gamma^k applied to the bootstrap value

  bool operator==(const Transition&) const = default;
};

// Folds single steps into n-step transitions.
class NStepAccumulator {
 public:
  NStepAccumulator(std::size_t n, double gamma) : n_(n), gamma_(gamma) {}

  /// Adds one step and returns the transitions it completed.
  /// `terminated`/`truncated` flush everything that is still pending.
  std::vector<Transition> push(std::vector<double> obs, std::size_t action, double reward,
                               const std::vector<double>& next_obs, bool terminated, bool truncated);

 private:
  Transition fold(std::size_t count, const std::vector<double>& next_obs, bool done) const;

  struct Step {
    std::vector<double> obs;
    std::size_t action;
    double reward;
  };
  std::size_t n_;
  double gamma_;
  std::deque<Step> window_;
};

// Sum tree over leaf priorities, for proportional sampling.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 0);
  void set(std::size_t leaf, double priority);
  double get(std::size_t leaf) const { return tree_[leaf + cap_]; }
  double total() const { return tree_.empty() ? 0.0 : tree_[1]; }
  /// Leaf whose cumulative range contains `mass` in [0, total()).
  std::size_t find(double mass) const;
  std::size_t capacity() const noexcept { return cap_; }

 private:
  std::size_t cap_ = 0;  // power of two
  std::vector<double> tree_;
};

// Ring buffer of transitions; optional proportional prioritization.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, bool prioritized, double alpha, double epsilon);

  void add(Transition t);
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const Transition& at(std::size_t i) const { return data_.at(i); }

  struct Sample {
    std::vector<std::size_t> indices;
    std::vector<double> weights;  // importance weights, max-normalized; all 1 when uniform
  };
  Sample sample(std::size_t batch, double beta, Rng& rng) const;
  /// Sets priority (|td| + epsilon)^alpha for sampled entries.
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

 private:
  std::size_t capacity_;
  bool prioritized_;
  double alpha_;
  double epsilon_;
  std::vector<Transition> data_;
  std::size_t next_ = 0;
  SumTree tree_;
  double max_priority_ = 1.0;
};

class DqnPolicy final : public Policy {
 public:
  DqnPolicy(Mlp net, std::optional<ObservationBounds> input_bounds)
      : net_(std::move(net)), bounds_(std::move(input_bounds)) {}
  std::string kind() const override { return "dqn"; }
  std::size_t select(std::span<const double> raw_obs) override;

  std::vector<double> q_values(std::span<const double> raw_obs) const;
  const Mlp& network() const noexcept { return net_; }
  const std::optional<ObservationBounds>& input_bounds() const noexcept { return bounds_; }

 private:
  Mlp net_;
  std::optional<ObservationBounds> bounds_;
};

/// DQN with n-step returns, optional prioritized replay and a periodically
/// synced target network.
std::pair<DqnPolicy, TrainingCurve> train_dqn(Env& env, std::int64_t iterations, const DqnConfig& cfg,
                                              std::uint64_t seed);

}  // namespace qsim
