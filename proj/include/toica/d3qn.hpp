#pragma once

// Dueling double deep-Q agent: two-layer ReLU trunk with value and
// advantage heads, uniform replay, epsilon-greedy exploration and a
// quasi-static target network, trained with hand-written backprop.

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "toica/nn.hpp"

namespace toica {

constexpr int kStateDim = 4;  // 2-D position + pending bits + pending cycles

struct AgentConfig {
  double learning_rate = 3e-4;
  double gamma = 0.99;
  double epsilon_decay = 1.5e-5;
  double epsilon_min = 0.03;
  std::size_t buffer_capacity = 1000000;
  int batch_size = 128;
  int target_sync_every = 30;
  bool sync_on_episodes = false;  // false: count learning steps (default)
  int hidden_units = 128;
  int updates_per_slot = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("AgentConfig: learning rate must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("AgentConfig: gamma must lie in (0, 1)");
    if (!(epsilon_decay > 0.0) || !(epsilon_min >= 0.0 && epsilon_min <= 1.0))
      throw std::invalid_argument("AgentConfig: bad epsilon schedule");
    if (buffer_capacity < 1 || batch_size < 1 || target_sync_every < 1 || hidden_units < 1 ||
        updates_per_slot < 1)
      throw std::invalid_argument("AgentConfig: counts must be positive");
  }
};

class DuelingQNet {
 public:
  DuelingQNet() = default;

  DuelingQNet(int state_dim, int n_actions, int hidden, Rng& rng) {
    if (state_dim < 1 || n_actions < 1 || hidden < 1)
      throw std::invalid_argument("DuelingQNet: bad dimensions");
    state_dim_ = state_dim;
    n_actions_ = n_actions;
    hidden_ = hidden;
    fc1_.init(state_dim, hidden, rng);
    fc2_.init(hidden, hidden, rng);
    value_.init(hidden, 1, rng);
    adv_.init(hidden, n_actions, rng);
  }

  int state_dim() const { return state_dim_; }
  int n_actions() const { return n_actions_; }
  int hidden() const { return hidden_; }

  struct Workspace {
    std::vector<double> z1, a1, z2, a2, adv, q;
    std::vector<double> d_a2, d_z2, d_a1, d_z1, d_adv;
    double value = 0.0;

    void resize(int hidden, int actions) {
      z1.resize(hidden);
      a1.resize(hidden);
      z2.resize(hidden);
      a2.resize(hidden);
      adv.resize(actions);
      q.resize(actions);
      d_a2.resize(hidden);
      d_z2.resize(hidden);
      d_a1.resize(hidden);
      d_z1.resize(hidden);
      d_adv.resize(actions);
    }
  };

  // Q(s, a) = V(s) + (A(s, a) - mean_a' A(s, a')).
  void forward(std::span<const double> state, Workspace& ws) const {
    if (static_cast<int>(state.size()) != state_dim_)
      throw std::invalid_argument("DuelingQNet: state dimension mismatch");
    ws.resize(hidden_, n_actions_);
    fc1_.forward(state.data(), ws.z1.data());
    ws.a1 = ws.z1;
    relu_inplace(ws.a1.data(), hidden_);
    fc2_.forward(ws.a1.data(), ws.z2.data());
    ws.a2 = ws.z2;
    relu_inplace(ws.a2.data(), hidden_);
    double v = 0.0;
    value_.forward(ws.a2.data(), &v);
    ws.value = v;
    adv_.forward(ws.a2.data(), ws.adv.data());
    double mean = 0.0;
    for (double a : ws.adv) mean += a;
    mean /= n_actions_;
    for (int a = 0; a < n_actions_; ++a) ws.q[a] = v + ws.adv[a] - mean;
  }

  std::vector<double> q_values(std::span<const double> state) const {
    Workspace ws;
    forward(state, ws);
    return ws.q;
  }

  // Accumulates gradients for d(loss)/dQ(s, action) = upstream. Only the
  // taken action's Q output receives gradient; the mean-subtraction spreads
  // it over the advantage head.
  void backward(std::span<const double> state, Workspace& ws, int action, double upstream) {
    const double inv_actions = 1.0 / n_actions_;
    for (int a = 0; a < n_actions_; ++a)
      ws.d_adv[a] = upstream * ((a == action ? 1.0 : 0.0) - inv_actions);
    const double d_value = upstream;

    std::fill(ws.d_a2.begin(), ws.d_a2.end(), 0.0);
    adv_.backward(ws.a2.data(), ws.d_adv.data(), ws.d_z2.data());
    for (int i = 0; i < hidden_; ++i) ws.d_a2[i] = ws.d_z2[i];
    value_.backward(ws.a2.data(), &d_value, ws.d_z2.data());
    for (int i = 0; i < hidden_; ++i) ws.d_a2[i] += ws.d_z2[i];

    relu_backward(ws.z2.data(), ws.d_a2.data(), hidden_);
    fc2_.backward(ws.a1.data(), ws.d_a2.data(), ws.d_a1.data());
    relu_backward(ws.z1.data(), ws.d_a1.data(), hidden_);
    fc1_.backward(state.data(), ws.d_a1.data(), nullptr);
  }

  void zero_grads() {
    fc1_.zero_grad();
    fc2_.zero_grad();
    value_.zero_grad();
    adv_.zero_grad();
  }

  void apply_adam(long t, const AdamParams& p) {
    fc1_.apply_adam(t, p);
    fc2_.apply_adam(t, p);
    value_.apply_adam(t, p);
    adv_.apply_adam(t, p);
  }

  // Hard copy of parameters only; optimizer state stays put.
  void copy_parameters_from(const DuelingQNet& other) {
    state_dim_ = other.state_dim_;
    n_actions_ = other.n_actions_;
    hidden_ = other.hidden_;
    copy_layer(fc1_, other.fc1_);
    copy_layer(fc2_, other.fc2_);
    copy_layer(value_, other.value_);
    copy_layer(adv_, other.adv_);
  }

  template <typename Fn>
  void for_each_param(Fn&& fn) {
    for (DenseLayer* layer : {&fc1_, &fc2_, &value_, &adv_}) {
      for (double& x : layer->w) fn(x);
      for (double& x : layer->b) fn(x);
    }
  }

  template <typename Fn>
  void for_each_grad(Fn&& fn) const {
    for (const DenseLayer* layer : {&fc1_, &fc2_, &value_, &adv_}) {
      for (double x : layer->gw) fn(x);
      for (double x : layer->gb) fn(x);
    }
  }

  const DenseLayer& fc1() const { return fc1_; }
  const DenseLayer& fc2() const { return fc2_; }
  const DenseLayer& value_head() const { return value_; }
  const DenseLayer& advantage_head() const { return adv_; }
  DenseLayer& mutable_fc1() { return fc1_; }
  DenseLayer& mutable_fc2() { return fc2_; }
  DenseLayer& mutable_value_head() { return value_; }
  DenseLayer& mutable_advantage_head() { return adv_; }

  void save(std::ostream& os) const {
    os.precision(17);
    save_layer(os, "fc1", fc1_);
    save_layer(os, "fc2", fc2_);
    save_layer(os, "value", value_);
    save_layer(os, "advantage", adv_);
  }

  void load(std::istream& is) {
    load_layer(is, "fc1", fc1_);
    load_layer(is, "fc2", fc2_);
    load_layer(is, "value", value_);
    load_layer(is, "advantage", adv_);
    state_dim_ = fc1_.in;
    hidden_ = fc1_.out;
    n_actions_ = adv_.out;
  }

 private:
  static void copy_layer(DenseLayer& dst, const DenseLayer& src) {
    dst.in = src.in;
    dst.out = src.out;
    dst.w = src.w;
    dst.b = src.b;
    if (dst.gw.size() != src.w.size()) {
      dst.gw.assign(src.w.size(), 0.0);
      dst.gb.assign(src.b.size(), 0.0);
      dst.aw.resize(src.w.size());
      dst.ab.resize(src.b.size());
    }
  }

  static void save_layer(std::ostream& os, const std::string& name, const DenseLayer& layer) {
    os << "layer " << name << " " << layer.out << " " << layer.in << "\n";
    os << "w";
    for (double x : layer.w) os << " " << x;
    os << "\nb";
    for (double x : layer.b) os << " " << x;
    os << "\n";
  }

  static void load_layer(std::istream& is, const std::string& name, DenseLayer& layer) {
    std::string word, got;
    int out = 0, in = 0;
    if (!(is >> word >> got >> out >> in) || word != "layer" || got != name || out < 1 || in < 1)
      throw std::runtime_error("DuelingQNet: bad layer header for " + name);
    layer.in = in;
    layer.out = out;
    layer.w.resize(static_cast<std::size_t>(in) * out);
    layer.b.resize(out);
    if (!(is >> word) || word != "w") throw std::runtime_error("DuelingQNet: missing weights");
    for (double& x : layer.w)
      if (!(is >> x)) throw std::runtime_error("DuelingQNet: truncated weights");
    if (!(is >> word) || word != "b") throw std::runtime_error("DuelingQNet: missing biases");
    for (double& x : layer.b)
      if (!(is >> x)) throw std::runtime_error("DuelingQNet: truncated biases");
    layer.gw.assign(layer.w.size(), 0.0);
    layer.gb.assign(layer.b.size(), 0.0);
    layer.aw.resize(layer.w.size());
    layer.ab.resize(layer.b.size());
  }

  int state_dim_ = 0;
  int n_actions_ = 0;
  int hidden_ = 0;
  DenseLayer fc1_, fc2_, value_, adv_;
};

inline int argmax_action(std::span<const double> q) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

// With probability eps a uniform action, otherwise greedy; greedy ties go
// to the lowest action index and consume no randomness when eps == 0.
inline int epsilon_greedy(const DuelingQNet& net, std::span<const double> state, double eps,
                          Rng& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("epsilon_greedy: eps must lie in [0, 1]");
  if (eps > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < eps) {
      std::uniform_int_distribution<int> pick(0, net.n_actions() - 1);
      return pick(rng);
    }
  }
  return argmax_action(net.q_values(state));
}

// Double-DQN target: the main net selects the next action, the target net
// values it; no bootstrap on terminal transitions.
inline double double_q_target(const DuelingQNet& main_net, const DuelingQNet& target_net,
                              double reward, std::span<const double> next_state, bool terminal,
                              double gamma) {
  if (terminal) return reward;
  const int pick = argmax_action(main_net.q_values(next_state));
  return reward + gamma * target_net.q_values(next_state)[pick];
}

struct Transition {
  std::array<double, kStateDim> state{};
  int action = 0;
  double reward = 0.0;
  std::array<double, kStateDim> next_state{};
  bool terminal = false;
};

// Fixed-capacity ring buffer with uniform batch sampling (distinct indices
// within a batch, oldest entries evicted first).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }

  void push(const Transition& t) {
    if (data_.size() < capacity_) {
      data_.push_back(t);
    } else {
      data_[write_] = t;
    }
    write_ = (write_ + 1) % capacity_;
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return data_[i]; }

  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    if (batch > data_.size())
      throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    std::uniform_int_distribution<std::size_t> u(0, data_.size() - 1);
    while (picked.size() < batch) {
      const std::size_t candidate = u(rng);
      if (std::find(picked.begin(), picked.end(), candidate) == picked.end())
        picked.push_back(candidate);
    }
    return picked;
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<Transition> data_;
};

class D3qnAgent {
 public:
  D3qnAgent(const AgentConfig& cfg, int n_actions, std::uint64_t seed)
      : cfg_(cfg), rng_(mix_seed(seed, 0xd3f1u)), buffer_(cfg.buffer_capacity) {
    cfg_.validate();
    main_ = DuelingQNet(kStateDim, n_actions, cfg_.hidden_units, rng_);
    target_ = main_;  // target starts equal to main
  }

  const AgentConfig& config() const { return cfg_; }
  const DuelingQNet& net() const { return main_; }
  const DuelingQNet& target_net() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  std::size_t action_steps() const { return action_steps_; }
  std::size_t learn_steps() const { return learn_steps_; }

  double epsilon() const {
    return std::max(cfg_.epsilon_min, 1.0 - static_cast<double>(action_steps_) * cfg_.epsilon_decay);
  }

  // explore=true follows the decaying epsilon schedule (and advances it);
  // explore=false is the pure greedy policy used for evaluation.
  int act(std::span<const double> state, bool explore) {
    if (!explore) return argmax_action(main_.q_values(state));
    const double eps = epsilon();
    ++action_steps_;
    return epsilon_greedy(main_, state, eps, rng_);
  }

  void remember(const Transition& t) { buffer_.push(t); }

  bool can_learn() const { return buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size); }

  // One batched TD step on the main net; returns the mean squared TD error.
  double learn() {
    if (!can_learn()) throw std::runtime_error("D3qnAgent: buffer below batch size");
    const auto indices = buffer_.sample_indices(cfg_.batch_size, rng_);
    main_.zero_grads();
    double loss = 0.0;
    DuelingQNet::Workspace ws;
    const double inv_batch = 1.0 / cfg_.batch_size;
    for (std::size_t idx : indices) {
      const Transition& tr = buffer_[idx];
      const double y = double_q_target(main_, target_, tr.reward, tr.next_state, tr.terminal, cfg_.gamma);
      main_.forward(tr.state, ws);
      const double diff = ws.q[tr.action] - y;
      loss += 0.5 * diff * diff;
      main_.backward(tr.state, ws, tr.action, diff * inv_batch);
    }
    loss *= inv_batch;
    if (!std::isfinite(loss)) throw std::runtime_error("D3qnAgent: non-finite training loss");
    AdamParams adam;
    adam.lr = cfg_.learning_rate;
    main_.apply_adam(++adam_t_, adam);
    ++learn_steps_;
    if (!cfg_.sync_on_episodes && learn_steps_ % cfg_.target_sync_every == 0) sync_target();
    return loss;
  }

  void sync_target() { target_.copy_parameters_from(main_); }

  // Called once per finished episode; only relevant when the sync unit is
  // episodes rather than learning steps.
  void end_episode() {
    ++episodes_;
    if (cfg_.sync_on_episodes && episodes_ % cfg_.target_sync_every == 0) sync_target();
  }

  void save(std::ostream& os) const {
    os << "toica-checkpoint v1\n";
    os.precision(17);
    os << "learning_rate " << cfg_.learning_rate << "\n";
    os << "gamma " << cfg_.gamma << "\n";
    os << "epsilon_decay " << cfg_.epsilon_decay << "\n";
    os << "epsilon_min " << cfg_.epsilon_min << "\n";
    os << "buffer_capacity " << cfg_.buffer_capacity << "\n";
    os << "batch_size " << cfg_.batch_size << "\n";
    os << "target_sync_every " << cfg_.target_sync_every << "\n";
    os << "sync_on_episodes " << (cfg_.sync_on_episodes ? 1 : 0) << "\n";
    os << "hidden_units " << cfg_.hidden_units << "\n";
    os << "updates_per_slot " << cfg_.updates_per_slot << "\n";
    os << "state_dim " << main_.state_dim() << "\n";
    os << "n_actions " << main_.n_actions() << "\n";
    os << "action_steps " << action_steps_ << "\n";
    main_.save(os);
    os << "end\n";
  }

  static D3qnAgent load(std::istream& is, std::uint64_t seed) {
    std::string word, version;
    if (!(is >> word >> version) || word != "toica-checkpoint" || version != "v1")
      throw std::runtime_error("D3qnAgent: bad checkpoint header");
    AgentConfig cfg;
    int sync_on_episodes = 0, state_dim = 0, n_actions = 0;
    std::size_t action_steps = 0;
    auto expect = [&is](const char* key) {
      std::string k;
      if (!(is >> k) || k != key) throw std::runtime_error(std::string("D3qnAgent: expected ") + key);
    };
    expect("learning_rate");
    is >> cfg.learning_rate;
    expect("gamma");
    is >> cfg.gamma;
    expect("epsilon_decay");
    is >> cfg.epsilon_decay;
    expect("epsilon_min");
    is >> cfg.epsilon_min;
    expect("buffer_capacity");
    is >> cfg.buffer_capacity;
    expect("batch_size");
    is >> cfg.batch_size;
    expect("target_sync_every");
    is >> cfg.target_sync_every;
    expect("sync_on_episodes");
    is >> sync_on_episodes;
    cfg.sync_on_episodes = sync_on_episodes != 0;
    expect("hidden_units");
    is >> cfg.hidden_units;
    expect("updates_per_slot");
    is >> cfg.updates_per_slot;
    expect("state_dim");
    is >> state_dim;
    expect("n_actions");
    is >> n_actions;
    expect("action_steps");
    is >> action_steps;
    if (!is || state_dim != kStateDim) throw std::runtime_error("D3qnAgent: bad checkpoint dimensions");
    D3qnAgent agent(cfg, n_actions, seed);
    agent.main_.load(is);
    std::string tail;
    if (!(is >> tail) || tail != "end") throw std::runtime_error("D3qnAgent: missing checkpoint trailer");
    if (agent.main_.n_actions() != n_actions) throw std::runtime_error("D3qnAgent: action count mismatch");
    agent.target_ = agent.main_;
    agent.action_steps_ = action_steps;
    return agent;
  }

 private:
  AgentConfig cfg_;
  Rng rng_;
  ReplayBuffer buffer_;
  DuelingQNet main_, target_;
  std::size_t action_steps_ = 0;
  std::size_t learn_steps_ = 0;
  std::size_t episodes_ = 0;
  long adam_t_ = 0;
};

}  // namespace toica
