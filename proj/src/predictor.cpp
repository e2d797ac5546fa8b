#include "ascetic/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ascetic {

EpsilonSchedule epsilon_step(EpsilonSchedule s) {
  if (s.eps > s.floor_value) {
    s.eps = std::max(s.floor_value, s.eps - s.decrement);
    // absorb accumulated rounding so the schedule lands exactly on the floor
    // after ceil((eps0 - floor) / decrement) steps
    if (s.eps - s.floor_value < 1e-12) s.eps = s.floor_value;
  }
  return s;
}

double prediction_reward(const ServiceSet& predicted, const std::vector<ServiceId>& arrived) {
  double hits = 0.0;
  for (ServiceId p : predicted) {
    if (std::find(arrived.begin(), arrived.end(), p) != arrived.end()) hits += 1.0;
  }
  return hits;
}

double ddql_target(double reward, int top_z, double gamma, const std::vector<double>& q_online_next,
                   const std::vector<double>& q_target_next) {
  if (top_z < 1) throw std::invalid_argument("ddql_target: top_z must be >= 1");
  if (q_online_next.empty() || q_online_next.size() != q_target_next.size())
    throw std::invalid_argument("ddql_target: mismatched Q vectors");
  std::size_t astar = 0;
  for (std::size_t i = 1; i < q_online_next.size(); ++i)
    if (q_online_next[i] > q_online_next[astar]) astar = i;
  return reward / top_z + gamma * q_target_next[astar];
}

ArrivalWindow::ArrivalWindow(int n_services, int window)
    : n_services_(n_services), window_(window), words_per_row_((n_services + 63) / 64) {
  if (n_services < 1 || window < 1) throw std::invalid_argument("ArrivalWindow: bad dims");
  rows_.assign(static_cast<std::size_t>(window_) * words_per_row_, 0);
}

void ArrivalWindow::push(const std::vector<ServiceId>& arrived) {
  // drop the oldest row, append the new one at the back
  std::memmove(rows_.data(), rows_.data() + words_per_row_,
               sizeof(std::uint64_t) * words_per_row_ * (window_ - 1));
  std::uint64_t* last = rows_.data() + static_cast<std::size_t>(window_ - 1) * words_per_row_;
  std::fill(last, last + words_per_row_, 0);
  for (ServiceId sv : arrived) {
    if (sv < 0 || sv >= n_services_) throw std::out_of_range("ArrivalWindow: bad service id");
    last[sv >> 6] |= std::uint64_t(1) << (sv & 63);
  }
  filled_ = std::min(filled_ + 1, window_);
}

bool ArrivalWindow::bit(int row, ServiceId sv) const {
  if (row < 0 || row >= window_ || sv < 0 || sv >= n_services_)
    throw std::out_of_range("ArrivalWindow: bad index");
  return (rows_[static_cast<std::size_t>(row) * words_per_row_ + (sv >> 6)] >>
          (sv & 63)) & 1;
}

std::vector<float> ArrivalWindow::dense() const {
  std::vector<float> out(static_cast<std::size_t>(window_) * n_services_, 0.f);
  for (int r = 0; r < window_; ++r)
    for (int s = 0; s < n_services_; ++s)
      if ((rows_[static_cast<std::size_t>(r) * words_per_row_ + (s >> 6)] >> (s & 63)) & 1)
        out[static_cast<std::size_t>(r) * n_services_ + s] = 1.f;
  return out;
}

void ArrivalWindow::set_words(std::vector<std::uint64_t> w, int filled) {
  if (w.size() != rows_.size() || filled < 0 || filled > window_)
    throw std::invalid_argument("ArrivalWindow: bad raw state");
  rows_ = std::move(w);
  filled_ = filled;
}

ReplayMemory::ReplayMemory(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayMemory: capacity must be >= 1");
  buf_.reserve(capacity);
}

void ReplayMemory::push(Transition t) {
  if (static_cast<int>(buf_.size()) < capacity_) {
    buf_.push_back(std::move(t));
  } else {
    buf_[next_] = std::move(t);  // overwrite the oldest
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayMemory::sample(Rng& rng) const {
  if (buf_.empty()) throw std::runtime_error("ReplayMemory: sampling from empty memory");
  return buf_[rng.bounded(buf_.size())];
}

namespace {
// flat layout offsets: Wxh [H*S] | Whh [H*H] | bh [H] | Who [S*H] | bo [S]
struct NetView {
  const float *wxh, *whh, *bh, *who, *bo;
  NetView(const std::vector<float>& p, int S, int H)
      : wxh(p.data()),
        whh(p.data() + static_cast<std::size_t>(H) * S),
        bh(whh + static_cast<std::size_t>(H) * H),
        who(bh + H),
        bo(who + static_cast<std::size_t>(S) * H) {}
};
std::size_t param_count(int S, int H) {
  return static_cast<std::size_t>(H) * S + static_cast<std::size_t>(H) * H + H +
         static_cast<std::size_t>(S) * H + S;
}
}  // namespace

RecurrentQNet::RecurrentQNet(int n_services, int hidden, std::uint64_t seed)
    : S_(n_services), H_(hidden) {
  if (n_services < 1 || hidden < 1) throw std::invalid_argument("RecurrentQNet: bad dims");
  theta_.resize(param_count(S_, H_));
  Rng rng(seed);
  for (float& w : theta_) w = static_cast<float>(rng.uniform_real(-0.08, 0.08));
}

std::vector<float> RecurrentQNet::forward(const ArrivalWindow& w) const {
  if (w.n_services() != S_) throw std::invalid_argument("forward: window/net width mismatch");
  NetView v(theta_, S_, H_);
  std::vector<float> x = w.dense();
  std::vector<float> h(H_, 0.f), hprev(H_, 0.f);
  int T = w.window();
  for (int t = 0; t < T; ++t) {
    const float* xr = x.data() + static_cast<std::size_t>(t) * S_;
    for (int i = 0; i < H_; ++i) {
      float acc = v.bh[i];
      const float* wx = v.wxh + static_cast<std::size_t>(i) * S_;
      for (int j = 0; j < S_; ++j) acc += wx[j] * xr[j];
      const float* wh = v.whh + static_cast<std::size_t>(i) * H_;
      for (int j = 0; j < H_; ++j) acc += wh[j] * hprev[j];
      h[i] = std::tanh(acc);
    }
    std::swap(h, hprev);
  }
  std::vector<float> q(S_);
  for (int a = 0; a < S_; ++a) {
    float acc = v.bo[a];
    const float* wo = v.who + static_cast<std::size_t>(a) * H_;
    for (int i = 0; i < H_; ++i) acc += wo[i] * hprev[i];
    q[a] = acc;
  }
  return q;
}

void RecurrentQNet::backward(const ArrivalWindow& w, const std::vector<float>& grad_q,
                             std::vector<float>& grad_out) const {
  if (grad_out.size() != theta_.size()) throw std::invalid_argument("backward: bad grad buffer");
  NetView v(theta_, S_, H_);
  std::vector<float> x = w.dense();
  int T = w.window();
  // forward, keeping every hidden state for BPTT
  std::vector<float> hs(static_cast<std::size_t>(T + 1) * H_, 0.f);
  for (int t = 0; t < T; ++t) {
    const float* xr = x.data() + static_cast<std::size_t>(t) * S_;
    const float* hp = hs.data() + static_cast<std::size_t>(t) * H_;
    float* hc = hs.data() + static_cast<std::size_t>(t + 1) * H_;
    for (int i = 0; i < H_; ++i) {
      float acc = v.bh[i];
      const float* wx = v.wxh + static_cast<std::size_t>(i) * S_;
      for (int j = 0; j < S_; ++j) acc += wx[j] * xr[j];
      const float* wh = v.whh + static_cast<std::size_t>(i) * H_;
      for (int j = 0; j < H_; ++j) acc += wh[j] * hp[j];
      hc[i] = std::tanh(acc);
    }
  }
  float* g_wxh = grad_out.data();
  float* g_whh = g_wxh + static_cast<std::size_t>(H_) * S_;
  float* g_bh = g_whh + static_cast<std::size_t>(H_) * H_;
  float* g_who = g_bh + H_;
  float* g_bo = g_who + static_cast<std::size_t>(S_) * H_;
  const float* h_last = hs.data() + static_cast<std::size_t>(T) * H_;
  std::vector<float> dh(H_, 0.f);
  for (int a = 0; a < S_; ++a) {
    float g = grad_q[a];
    if (g == 0.f) continue;
    g_bo[a] += g;
    float* gw = g_who + static_cast<std::size_t>(a) * H_;
    const float* wo = v.who + static_cast<std::size_t>(a) * H_;
    for (int i = 0; i < H_; ++i) {
      gw[i] += g * h_last[i];
      dh[i] += g * wo[i];
    }
  }
  std::vector<float> dpre(H_), dh_next(H_);
  for (int t = T - 1; t >= 0; --t) {
    const float* hc = hs.data() + static_cast<std::size_t>(t + 1) * H_;
    const float* hp = hs.data() + static_cast<std::size_t>(t) * H_;
    const float* xr = x.data() + static_cast<std::size_t>(t) * S_;
    for (int i = 0; i < H_; ++i) dpre[i] = dh[i] * (1.f - hc[i] * hc[i]);
    std::fill(dh_next.begin(), dh_next.end(), 0.f);
    for (int i = 0; i < H_; ++i) {
      float g = dpre[i];
      if (g == 0.f) continue;
      g_bh[i] += g;
      float* gx = g_wxh + static_cast<std::size_t>(i) * S_;
      for (int j = 0; j < S_; ++j) gx[j] += g * xr[j];
      float* gh = g_whh + static_cast<std::size_t>(i) * H_;
      const float* wh = v.whh + static_cast<std::size_t>(i) * H_;
      for (int j = 0; j < H_; ++j) {
        gh[j] += g * hp[j];
        dh_next[j] += g * wh[j];
      }
    }
    std::swap(dh, dh_next);
  }
}

DdqlAgent::DdqlAgent(const AgentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      rng_(Rng(seed).sub(0xA6EB7)),
      window_(cfg.n_services, cfg.window),
      online_(cfg.n_services, cfg.hidden, Rng(seed).sub(1).next_u64()),
      target_(cfg.n_services, cfg.hidden, Rng(seed).sub(2).next_u64()),
      sched_{cfg.eps0, cfg.eps_decrement, cfg.eps_floor},
      memory_(cfg.replay_capacity) {
  if (cfg.top_z < 1 || cfg.top_z > cfg.n_services)
    throw std::invalid_argument("DdqlAgent: top_z must be in [1, n_services]");
  if (cfg.batch < 1) throw std::invalid_argument("DdqlAgent: batch must be >= 1");
  target_.sync_from(online_);
  adam_m_.assign(online_.params().size(), 0.f);
  adam_v_.assign(online_.params().size(), 0.f);
}

void DdqlAgent::observe(const std::vector<ServiceId>& arrived) {
  window_.push(arrived);
  ++slots_seen_;
  if (has_pending_) {
    double rho = prediction_reward(pending_action_, arrived);
    last_reward_ = rho;
    memory_.push({pending_window_, pending_action_, rho, window_});
    memory_stat_ = std::max(memory_stat_, static_cast<long long>(memory_.size()));
    has_pending_ = false;
  }
}

ServiceSet DdqlAgent::act() {
  ServiceSet a;
  bool explore = window_.filled() < cfg_.window || rng_.uniform01() < sched_.eps;
  if (explore) {
    a = random_prediction(cfg_.n_services, cfg_.top_z, rng_);
  } else {
    a = greedy_prediction(online_.forward(window_), cfg_.top_z);
  }
  sched_ = epsilon_step(sched_);
  pending_action_ = a;
  pending_window_ = window_;
  has_pending_ = true;
  return a;
}

double DdqlAgent::train_step() {
  if (memory_.size() < cfg_.batch) return 0.0;
  std::vector<float> grad(online_.params().size(), 0.f);
  double loss = 0.0;
  std::vector<float> gq(cfg_.n_services);
  for (int b = 0; b < cfg_.batch; ++b) {
    const Transition& tr = memory_.sample(rng_);
    std::vector<float> qo = online_.forward(tr.after);
    std::vector<float> qt = target_.forward(tr.after);
    int astar = 0;
    for (int i = 1; i < cfg_.n_services; ++i)
      if (qo[i] > qo[astar]) astar = i;
    double y = tr.reward / cfg_.top_z + cfg_.gamma * qt[astar];
    std::vector<float> qb = online_.forward(tr.before);
    std::fill(gq.begin(), gq.end(), 0.f);
    double denom = static_cast<double>(cfg_.batch) * cfg_.top_z;
    for (ServiceId a : tr.action) {
      double diff = qb[a] - y;
      loss += diff * diff / denom;
      gq[a] = static_cast<float>(2.0 * diff / denom);
    }
    online_.backward(tr.before, gq, grad);
  }
  if (!std::isfinite(loss)) throw std::runtime_error("DdqlAgent: training loss diverged");
  ++train_steps_;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double bc1 = 1.0 - std::pow(b1, train_steps_);
  double bc2 = 1.0 - std::pow(b2, train_steps_);
  std::vector<float>& p = online_.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    adam_m_[i] = static_cast<float>(b1 * adam_m_[i] + (1 - b1) * grad[i]);
    adam_v_[i] = static_cast<float>(b2 * adam_v_[i] + (1 - b2) * grad[i] * grad[i]);
    double mhat = adam_m_[i] / bc1;
    double vhat = adam_v_[i] / bc2;
    p[i] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + eps));
  }
  if (train_steps_ % cfg_.target_sync == 0) target_.sync_from(online_);
  return loss;
}

namespace {
void write_floats(std::ostringstream& os, const char* tag, const std::vector<float>& v) {
  os << tag;
  char buf[32];
  for (float f : v) {
    std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(f));
    os << buf;
  }
  os << '\n';
}
std::vector<float> read_floats(std::istringstream& ls, std::size_t expect, const char* tag) {
  std::vector<float> v;
  v.reserve(expect);
  double d;
  while (ls >> d) v.push_back(static_cast<float>(d));
  if (v.size() != expect)
    throw std::runtime_error(std::string("agent checkpoint: bad ") + tag + " length");
  return v;
}
}  // namespace

std::string DdqlAgent::save() const {
  std::ostringstream os;
  os << "ascetic-agent v1\n";
  os << "dims " << cfg_.n_services << ' ' << cfg_.hidden << ' ' << cfg_.window << ' '
     << cfg_.top_z << '\n';
  char buf[128];
  std::snprintf(buf, sizeof(buf), "hyper %.17g %.17g %d %d %d\n", cfg_.gamma, cfg_.lr,
                cfg_.replay_capacity, cfg_.batch, cfg_.target_sync);
  os << buf;
  std::snprintf(buf, sizeof(buf), "schedule %.17g %.17g %.17g\n", sched_.eps, sched_.decrement,
                sched_.floor_value);
  os << buf;
  os << "counters " << train_steps_ << ' ' << slots_seen_ << ' '
     << std::max(memory_stat_, static_cast<long long>(memory_.size())) << '\n';
  write_floats(os, "online", online_.params());
  write_floats(os, "target", target_.params());
  write_floats(os, "adam_m", adam_m_);
  write_floats(os, "adam_v", adam_v_);
  return os.str();
}

DdqlAgent DdqlAgent::load(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "ascetic-agent v1")
    throw std::runtime_error("agent checkpoint: bad or missing version header");
  AgentConfig cfg;
  EpsilonSchedule sched;
  int train_steps = 0;
  long long slots_seen = 0, mem_stat = 0;
  std::vector<float> online, target, am, av;
  bool have_dims = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "dims") {
      if (!(ls >> cfg.n_services >> cfg.hidden >> cfg.window >> cfg.top_z))
        throw std::runtime_error("agent checkpoint: malformed dims");
      have_dims = true;
    } else if (kind == "hyper") {
      if (!(ls >> cfg.gamma >> cfg.lr >> cfg.replay_capacity >> cfg.batch >> cfg.target_sync))
        throw std::runtime_error("agent checkpoint: malformed hyper");
    } else if (kind == "schedule") {
      if (!(ls >> sched.eps >> sched.decrement >> sched.floor_value))
        throw std::runtime_error("agent checkpoint: malformed schedule");
    } else if (kind == "counters") {
      if (!(ls >> train_steps >> slots_seen >> mem_stat))
        throw std::runtime_error("agent checkpoint: malformed counters");
    } else if (kind == "online" || kind == "target" || kind == "adam_m" || kind == "adam_v") {
      if (!have_dims) throw std::runtime_error("agent checkpoint: weights before dims");
      std::size_t expect = param_count(cfg.n_services, cfg.hidden);
      auto v = read_floats(ls, expect, kind.c_str());
      if (kind == "online")
        online = std::move(v);
      else if (kind == "target")
        target = std::move(v);
      else if (kind == "adam_m")
        am = std::move(v);
      else
        av = std::move(v);
    } else {
      throw std::runtime_error("agent checkpoint: unknown record '" + kind + "'");
    }
  }
  if (!have_dims || online.empty() || target.empty() || am.empty() || av.empty())
    throw std::runtime_error("agent checkpoint: incomplete");
  cfg.eps0 = sched.eps;
  cfg.eps_decrement = sched.decrement;
  cfg.eps_floor = sched.floor_value;
  DdqlAgent agent(cfg, 0);
  agent.sched_ = sched;
  agent.online_.params() = std::move(online);
  agent.target_.params() = std::move(target);
  agent.adam_m_ = std::move(am);
  agent.adam_v_ = std::move(av);
  agent.train_steps_ = train_steps;
  agent.slots_seen_ = slots_seen;
  agent.memory_stat_ = mem_stat;
  return agent;
}

void FrequencyPredictor::observe(const std::vector<ServiceId>& arrived) {
  for (ServiceId s : arrived) {
    if (s < 0 || s >= static_cast<int>(counts_.size()))
      throw std::out_of_range("FrequencyPredictor: bad service id");
    ++counts_[s];
  }
}

ServiceSet FrequencyPredictor::predict(int top_z) const {
  int n = static_cast<int>(counts_.size());
  if (top_z < 1 || top_z > n) throw std::invalid_argument("FrequencyPredictor: bad top_z");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return counts_[a] > counts_[b]; });
  ServiceSet out(idx.begin(), idx.begin() + top_z);
  std::sort(out.begin(), out.end());
  return out;
}

ServiceSet random_prediction(int n_services, int top_z, Rng& rng) {
  if (top_z < 1 || top_z > n_services) throw std::invalid_argument("random_prediction: bad top_z");
  std::vector<ServiceId> ids(n_services);
  std::iota(ids.begin(), ids.end(), 0);
  rng.shuffle(ids);
  ServiceSet out(ids.begin(), ids.begin() + top_z);
  std::sort(out.begin(), out.end());
  return out;
}

ServiceSet greedy_prediction(const std::vector<float>& q, int top_z) {
  int n = static_cast<int>(q.size());
  if (top_z < 1 || top_z > n) throw std::invalid_argument("greedy_prediction: bad top_z");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return q[x] > q[y]; });
  ServiceSet out(idx.begin(), idx.begin() + top_z);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ascetic
