#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ascetic/rng.hpp"
#include "ascetic/workload.hpp"

namespace ascetic {

// sorted distinct service ids, |set| = top_z for agent predictions
using ServiceSet = std::vector<ServiceId>;

struct AgentConfig {
  int n_services = 20;
  int window = 10;  // slots of arrival history the agent sees
  int top_z = 3;    // services predicted per slot
  int hidden = 64;
  double gamma = 0.9;
  double lr = 1e-3;
  int replay_capacity = 10000;
  int batch = 32;
  int target_sync = 200;  // training steps between hard target copies
  double eps0 = 1.0;
  double eps_decrement = 5e-4;
  double eps_floor = 0.05;
};

struct EpsilonSchedule {
  double eps = 1.0;
  double decrement = 5e-4;
  double floor_value = 0.05;
};
// one annealing step: decrement only while above the floor, clamp at it
EpsilonSchedule epsilon_step(EpsilonSchedule s);

// |predicted ∩ arrived-service set|
double prediction_reward(const ServiceSet& predicted, const std::vector<ServiceId>& arrived);

// Double-Q regression target: reward/z + gamma * Q_target[argmax Q_online],
// argmax ties broken toward the lowest id.
double ddql_target(double reward, int top_z, double gamma, const std::vector<double>& q_online_next,
                   const std::vector<double>& q_target_next);

// Rolling multi-hot arrival history, bit-packed; rows shift so the newest
// slot is always last, zero rows pad the front until `window` pushes happened.
class ArrivalWindow {
 public:
  ArrivalWindow() = default;
  ArrivalWindow(int n_services, int window);
  void push(const std::vector<ServiceId>& arrived);
  int filled() const { return filled_; }
  int window() const { return window_; }
  int n_services() const { return n_services_; }
  bool bit(int row, ServiceId sv) const;  // row 0 = oldest
  std::vector<float> dense() const;       // row-major window x n_services
  const std::vector<std::uint64_t>& words() const { return rows_; }
  void set_words(std::vector<std::uint64_t> w, int filled);
  bool operator==(const ArrivalWindow&) const = default;

 private:
  int n_services_ = 0, window_ = 0, words_per_row_ = 0, filled_ = 0;
  std::vector<std::uint64_t> rows_;
};

struct Transition {
  ArrivalWindow before;
  ServiceSet action;
  double reward = 0.0;
  ArrivalWindow after;
};

// fixed-capacity ring, uniform sampling with replacement
class ReplayMemory {
 public:
  explicit ReplayMemory(int capacity);
  void push(Transition t);
  int size() const { return static_cast<int>(buf_.size()); }
  int capacity() const { return capacity_; }
  const Transition& sample(Rng& rng) const;

 private:
  int capacity_ = 0, next_ = 0;  // next_ = overwrite cursor once full
  std::vector<Transition> buf_;
};

// Elman recurrent Q-approximator: h_t = tanh(Wxh x_t + Whh h_{t-1} + bh),
// q = Who h_T + bo. Flat parameter buffer, weights init U(-0.08, 0.08).
class RecurrentQNet {
 public:
  RecurrentQNet() = default;
  RecurrentQNet(int n_services, int hidden, std::uint64_t seed);
  std::vector<float> forward(const ArrivalWindow& w) const;
  void sync_from(const RecurrentQNet& other) { theta_ = other.theta_; }
  int n_services() const { return S_; }
  int hidden() const { return H_; }
  std::vector<float>& params() { return theta_; }
  const std::vector<float>& params() const { return theta_; }
  // gradient of 0.5 * sum_a grad_q[a]-weighted outputs via BPTT
  void backward(const ArrivalWindow& w, const std::vector<float>& grad_q,
                std::vector<float>& grad_out) const;

 private:
  int S_ = 0, H_ = 0;
  std::vector<float> theta_;
  friend class DdqlAgent;
};

// Per-PoA predictor: twin recurrent Q-nets, replay memory, epsilon-greedy
// action selection over service subsets of size top_z.
class DdqlAgent {
 public:
  DdqlAgent(const AgentConfig& cfg, std::uint64_t seed);

  // feed the services that actually arrived this slot; completes the pending
  // (state, action) pair into a stored transition with its realized reward
  void observe(const std::vector<ServiceId>& arrived);
  // epsilon-greedy prediction for the next slot (random until the window
  // holds a full history)
  ServiceSet act();
  // one minibatch of double-Q training; returns the batch loss, 0 before the
  // memory holds a full batch; throws on non-finite loss
  double train_step();

  double epsilon() const { return sched_.eps; }
  int train_steps() const { return train_steps_; }
  int memory_size() const { return memory_.size(); }
  double last_reward() const { return last_reward_; }
  const AgentConfig& config() const { return cfg_; }
  std::vector<float> q_values() const { return online_.forward(window_); }

  std::string save() const;  // ascetic-agent v1
  static DdqlAgent load(const std::string& text);

 private:
  AgentConfig cfg_;
  Rng rng_;
  ArrivalWindow window_;
  RecurrentQNet online_, target_;
  std::vector<float> adam_m_, adam_v_;
  EpsilonSchedule sched_;
  ReplayMemory memory_;
  bool has_pending_ = false;
  ServiceSet pending_action_;
  ArrivalWindow pending_window_;
  int train_steps_ = 0;
  long long slots_seen_ = 0;
  long long memory_stat_ = 0;  // informational high-water mark kept by checkpoints
  double last_reward_ = 0.0;
};

// frequency baseline: predicts the top_z most common services seen so far
class FrequencyPredictor {
 public:
  explicit FrequencyPredictor(int n_services) : counts_(n_services, 0) {}
  void observe(const std::vector<ServiceId>& arrived);
  ServiceSet predict(int top_z) const;

 private:
  std::vector<long long> counts_;
};

// uniform random distinct subset of size top_z
ServiceSet random_prediction(int n_services, int top_z, Rng& rng);

// top_z services by descending Q value, ties toward the lowest id, sorted
ServiceSet greedy_prediction(const std::vector<float>& q, int top_z);

}  // namespace ascetic
