#include "qsim/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace qsim {

void DqnConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidHyperparameters("learning_rate must be positive");
  if (batch_size < 1) throw InvalidHyperparameters("batch_size must be positive");
  if (replay_capacity < batch_size) throw InvalidHyperparameters("replay_capacity must be at least batch_size");
  if (n_step < 1) throw InvalidHyperparameters("n_step must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidHyperparameters("gamma must be in (0, 1]");
  if (pr_alpha < 0.0 || pr_beta < 0.0 || !(pr_epsilon > 0.0)) {
    throw InvalidHyperparameters("prioritized replay alpha/beta must be non-negative and epsilon positive");
  }
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw InvalidHyperparameters("epsilon must be in [0, 1]");
  }
  if (epsilon_decay_steps < 0) throw InvalidHyperparameters("epsilon_decay_steps must be non-negative");
  if (target_sync_every < 1 || train_every < 1 || steps_per_iteration < 1 || learning_starts < 0) {
    throw InvalidHyperparameters("step counts must be positive");
  }
  for (auto w : hidden_layers) {
    if (w < 1) throw InvalidHyperparameters("hidden layer widths must be positive");
  }
  if (!(grad_clip_norm > 0.0)) throw InvalidHyperparameters("grad_clip_norm must be positive");
}

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(std::vector<std::size_t> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw InvalidParams("network needs an input and an output layer");
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes_[l - 1]));
    for (std::size_t k = 0; k < sizes_[l] * sizes_[l - 1]; ++k) params_.push_back(rng.uniform(-limit, limit));
    params_.insert(params_.end(), sizes_[l], 0.0);
  }
}

Mlp::Mlp(std::vector<std::size_t> sizes, std::vector<double> params) : sizes_(std::move(sizes)), params_(std::move(params)) {
  if (sizes_.size() < 2) throw InvalidParams("network needs an input and an output layer");
  if (params_.size() != layer_offset(sizes_.size())) throw InvalidParams("parameter count does not match layer sizes");
}

std::size_t Mlp::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 1; l < layer; ++l) off += sizes_[l] * sizes_[l - 1] + sizes_[l];
  return off;
}

std::vector<std::vector<double>> Mlp::activations(std::span<const double> x) const {
  if (x.size() != sizes_.front()) throw InvalidParams("network input has the wrong size");
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l - 1];
    const std::size_t out = sizes_[l];
    const auto& a = acts.back();
    std::vector<double> z(out);
    const double* w = params_.data() + off;
    const double* b = w + in * out;
    const bool hidden = l + 1 < sizes_.size();
    for (std::size_t o = 0; o < out; ++o) {
      double sum = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) sum += row[i] * a[i];
      z[o] = hidden ? std::max(0.0, sum) : sum;
    }
    off += in * out + out;
    acts.push_back(std::move(z));
  }
  return acts;
}

std::vector<double> Mlp::forward(std::span<const double> x) const { return activations(x).back(); }

void Mlp::backward(const std::vector<std::vector<double>>& acts, std::vector<double> delta,
                   std::vector<double>& grad) const {
  for (std::size_t l = sizes_.size() - 1; l >= 1; --l) {
    const std::size_t in = sizes_[l - 1];
    const std::size_t out = sizes_[l];
    const std::size_t w0 = layer_offset(l);
    const std::size_t b0 = w0 + in * out;
    const auto& a_in = acts[l - 1];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = grad.data() + w0 + o * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += d * a_in[i];
      grad[b0 + o] += d;
    }
    if (l == 1) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = params_.data() + w0 + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += d * w[i];
    }
    for (std::size_t i = 0; i < in; ++i) {
      if (a_in[i] <= 0.0) prev[i] = 0.0;  // ReLU
    }
    delta = std::move(prev);
  }
}

void Adam::step(std::vector<double>& params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

// ---------------------------------------------------------------- replay

std::vector<Transition> NStepAccumulator::push(std::vector<double> obs, std::size_t action, double reward,
                                               const std::vector<double>& next_obs, bool terminated, bool truncated) {
  window_.push_back({std::move(obs), action, reward});
  std::vector<Transition> out;
  if (terminated || truncated) {
    while (!window_.empty()) {
      out.push_back(fold(window_.size(), next_obs, terminated));
      window_.pop_front();
    }
  } else if (window_.size() == n_) {
    out.push_back(fold(n_, next_obs, false));
    window_.pop_front();
  }
  return out;
}

Transition NStepAccumulator::fold(std::size_t count, const std::vector<double>& next_obs, bool done) const {
  Transition t;
  t.obs = window_.front().obs;
  t.action = window_.front().action;
  double g = 1.0;
  for (std::size_t k = 0; k < count; ++k) {
    t.reward += g * window_[k].reward;
    g *= gamma_;
  }
  t.next_obs = next_obs;
  t.done = done;
  t.discount = g;
  return t;
}

SumTree::SumTree(std::size_t capacity) {
  cap_ = 1;
  while (cap_ < capacity) cap_ <<= 1;
  tree_.assign(2 * cap_, 0.0);
}

void SumTree::set(std::size_t leaf, double priority) {
  std::size_t i = leaf + cap_;
  tree_[i] = priority;
  for (i >>= 1; i >= 1; i >>= 1) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

std::size_t SumTree::find(double mass) const {
  std::size_t i = 1;
  while (i < cap_) {
    const std::size_t left = 2 * i;
    if (mass < tree_[left] || tree_[left + 1] == 0.0) {
      i = left;
    } else {
      mass -= tree_[left];
      i = left + 1;
    }
  }
  return i - cap_;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, bool prioritized, double alpha, double epsilon)
    : capacity_(capacity), prioritized_(prioritized), alpha_(alpha), epsilon_(epsilon),
      tree_(prioritized ? capacity : 0) {
  if (capacity_ == 0) throw InvalidParams("replay capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::add(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  if (prioritized_) tree_.set(next_, max_priority_);
  next_ = (next_ + 1) % capacity_;
}

ReplayBuffer::Sample ReplayBuffer::sample(std::size_t batch, double beta, Rng& rng) const {
  if (data_.empty()) throw InvalidParams("sampling from an empty replay buffer");
  Sample s;
  s.indices.reserve(batch);
  s.weights.assign(batch, 1.0);
  if (!prioritized_) {
    for (std::size_t k = 0; k < batch; ++k) s.indices.push_back(rng.index(data_.size()));
    return s;
  }
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch);
  double max_w = 0.0;
  for (std::size_t k = 0; k < batch; ++k) {
    const double mass = std::min(segment * (static_cast<double>(k) + rng.uniform01()), std::nextafter(total, 0.0));
    std::size_t idx = tree_.find(mass);
    if (idx >= data_.size()) idx = data_.size() - 1;
    s.indices.push_back(idx);
    const double p = tree_.get(idx) / total;
    const double w = std::pow(static_cast<double>(data_.size()) * p, -beta);
    s.weights[k] = w;
    max_w = std::max(max_w, w);
  }
  for (auto& w : s.weights) w /= max_w;
  return s;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) {
  if (!prioritized_) return;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double p = std::pow(std::abs(td_errors[k]) + epsilon_, alpha_);
    tree_.set(indices[k], p);
    max_priority_ = std::max(max_priority_, p);
  }
}

// ---------------------------------------------------------------- policy

namespace {

std::vector<double> prepare(std::span<const double> raw, const std::optional<ObservationBounds>& bounds) {
  if (bounds) return normalize(raw, *bounds);
  return {raw.begin(), raw.end()};
}

std::size_t argmax(const std::vector<double>& q) {
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

double huber_grad(double td) { return std::clamp(td, -1.0, 1.0); }

}  // namespace

std::vector<double> DqnPolicy::q_values(std::span<const double> raw_obs) const {
  return net_.forward(prepare(raw_obs, bounds_));
}

std::size_t DqnPolicy::select(std::span<const double> raw_obs) { return argmax(q_values(raw_obs)); }

std::pair<DqnPolicy, TrainingCurve> train_dqn(Env& env, std::int64_t iterations, const DqnConfig& cfg,
                                              std::uint64_t seed) {
  if (iterations < 1) throw InvalidHyperparameters("iterations must be at least 1");
  cfg.validate();
  if (cfg.num_atoms) {
    std::cerr << "warning: num_atoms=" << *cfg.num_atoms << " ignored; distributional DQN is not implemented\n";
  }
  Rng rng(seed);
  std::optional<ObservationBounds> bounds;
  if (cfg.normalize_inputs) bounds = env.bounds();

  std::vector<std::size_t> sizes{env.obs_dim()};
  for (auto w : cfg.hidden_layers) sizes.push_back(static_cast<std::size_t>(w));
  sizes.push_back(env.n_actions());
  Mlp online(sizes, rng);
  Mlp target = online;
  Adam adam(online.params().size(), cfg.learning_rate);
  ReplayBuffer replay(static_cast<std::size_t>(cfg.replay_capacity), cfg.prioritized, cfg.pr_alpha, cfg.pr_epsilon);
  NStepAccumulator nstep(static_cast<std::size_t>(cfg.n_step), cfg.gamma);
  CurveRecorder recorder;

  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  std::vector<double> grad(online.params().size());
  std::vector<double> td(batch);

  auto learn = [&] {
    const auto s = replay.sample(batch, cfg.pr_beta, rng);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < batch; ++k) {
      const Transition& t = replay.at(s.indices[k]);
      double y = t.reward;
      if (!t.done) {
        const auto next_q = target.forward(t.next_obs);
        y += t.discount * *std::max_element(next_q.begin(), next_q.end());
      }
      const auto acts = online.activations(t.obs);
      td[k] = acts.back()[t.action] - y;
      std::vector<double> dout(online.output_dim(), 0.0);
      dout[t.action] = s.weights[k] * huber_grad(td[k]) / static_cast<double>(batch);
      online.backward(acts, std::move(dout), grad);
    }
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > cfg.grad_clip_norm) {
      for (double& g : grad) g *= cfg.grad_clip_norm / norm;
    }
    adam.step(online.params(), grad);
    replay.update_priorities(s.indices, td);
  };

  env.reset(seed);
  std::int64_t step = 0;
  for (std::int64_t it = 0; it < iterations; ++it) {
    for (std::int64_t k = 0; k < cfg.steps_per_iteration; ++k) {
      std::vector<double> x = prepare(env.raw_observation(), bounds);
      const double eps = linear_epsilon(cfg.epsilon_start, cfg.epsilon_end, cfg.epsilon_decay_steps, step);
      std::size_t action;
      if (rng.uniform01() < eps) {
        action = rng.index(env.n_actions());
      } else {
        action = argmax(online.forward(x));
      }
      const StepResult res = env.step(action);
      const std::vector<double> x_next = prepare(env.raw_observation(), bounds);
      for (auto& t : nstep.push(std::move(x), action, res.reward, x_next, res.terminated, res.truncated)) {
        replay.add(std::move(t));
      }
      ++step;
      if (env.episode_over()) {
        recorder.episode_finished(env.episode_stats());
        env.reset(seed);
      }
      if (step >= cfg.learning_starts && replay.size() >= batch && step % cfg.train_every == 0) learn();
      if (step % cfg.target_sync_every == 0) target = online;
    }
    recorder.end_iteration();
  }
  return {DqnPolicy(std::move(online), std::move(bounds)), recorder.take()};
}

}  // namespace qsim
