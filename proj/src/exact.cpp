#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ascetic/orchestrator.hpp"

namespace ascetic {

namespace {

constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Option {
  int flat = -1;  // -1 = leave the request unsupported
  NodeId node = -1;
  PathId inquiry = -1, response = -1;
  double direct_cost = 0.0;  // assignment + path cost; placement is refcounted
};

struct SlotProblem {
  Slot t = 0;
  std::vector<RequestId> active;
  std::vector<std::vector<Option>> options;  // canonical order, unsupported last
  std::vector<double> option_lower;          // cheapest possible charge per request
};

// Exhaustive DFS with branch-and-bound. Options are explored in canonical
// (instance, node, inquiry, response) order with "unsupported" last, and the
// incumbent is only replaced on strict improvement, so the reported optimum
// is the lexicographically first among cost ties.
class ExactSearch {
 public:
  ExactSearch(const Scenario& scn, const Topology& topo, const OrchestratorConfig& cfg)
      : scn_(scn), topo_(topo), cfg_(cfg), mc_{cfg.delay_model} {
    T_ = scn.horizon;
    N_ = topo.n_nodes();
    I_ = scn.catalog.total();
    build_problems();
    cur_.resize(T_);
    for (auto& sl : cur_) sl.init(scn.n_requests(), I_);
    sla_used_.assign(scn.n_requests(), 0.0);
    inst_res_.resize(I_);
    node_res_.resize(N_);
    bw_res_.resize(topo.n_links());
    burst_.resize(topo.n_links());
    place_ref_.assign(static_cast<std::size_t>(I_) * N_, 0);
  }

  ExactResult run() {
    // phase 1: each slot independently (per-slot caps only)
    std::vector<AllocationSlice> slot_best(T_);
    std::vector<double> slot_min(T_, 0.0);
    std::vector<std::vector<double>> slot_delay(T_);
    for (int ti = 0; ti < T_; ++ti) {
      first_ = last_ = ti;
      use_sla_ = false;
      suffix_ = nullptr;
      best_ = kInf;
      best_slices_.clear();
      reset_slot_residuals();
      dfs(ti, 0);
      slot_best[ti] = best_slices_.empty() ? cur_[ti] : best_slices_[0];
      slot_min[ti] = best_;
      slot_delay[ti] = slot_delays(slot_best[ti], scn_, topo_, ti + 1, mc_);
    }
    // if the composed per-slot optima already respect every SLA budget they
    // are jointly optimal (the budgets are the only cross-slot coupling)
    bool composable = true;
    for (RequestId r = 0; r < scn_.n_requests() && composable; ++r) {
      double used = 0.0;
      for (int ti = 0; ti < T_; ++ti) {
        double d = slot_delay[ti][r];
        if (!std::isnan(d)) used += d;
      }
      if (used > scn_.requests[r].sla_budget_ms + kTol) composable = false;
    }
    ExactResult result;
    if (composable) {
      result.allocation.slices = slot_best;
      result.penalized = 0.0;
      for (int ti = 0; ti < T_; ++ti) result.penalized += slot_min[ti];
    } else {
      // phase 2: joint search over all slots with per-slot minima as an
      // admissible bound on the unexplored suffix
      std::vector<double> suffix(T_ + 1, 0.0);
      for (int ti = T_ - 1; ti >= 0; --ti) suffix[ti] = suffix[ti + 1] + slot_min[ti];
      first_ = 0;
      last_ = T_ - 1;
      use_sla_ = true;
      suffix_ = &suffix;
      best_ = kInf;
      best_slices_.clear();
      std::fill(sla_used_.begin(), sla_used_.end(), 0.0);
      cost_ = 0.0;
      reset_slot_residuals();
      dfs(0, 0);
      result.allocation.slices = best_slices_;
      result.penalized = best_;
    }
    result.objective = objective_cost(result.allocation, scn_, topo_);
    result.leaves = leaves_;
    return result;
  }

 private:
  void build_problems() {
    probs_.resize(T_);
    for (int ti = 0; ti < T_; ++ti) {
      SlotProblem& sp = probs_[ti];
      sp.t = ti + 1;
      sp.active = scn_.active_at(sp.t);
      for (RequestId r : sp.active) {
        const Request& q = scn_.requests[r];
        NodeId poa = scn_.poa_at(r, sp.t);
        std::vector<Option> opts;
        for (int idx = 0; idx < scn_.catalog.instances_per_service; ++idx) {
          int flat = scn_.catalog.flat(q.service, idx);
          if (scn_.catalog.instances[flat].capacity < q.min_instance_capacity - kTol) continue;
          for (NodeId n = 0; n < N_; ++n) {
            if (topo_.nodes[n].compute_capacity < q.min_instance_capacity - kTol) continue;
            for (PathId p1 : topo_.paths_between(poa, n)) {
              for (PathId p2 : topo_.paths_between(n, poa)) {
                // a request alone must fit the links it uses
                bool fits = true;
                for (LinkId l : topo_.paths[p1].links)
                  if (topo_.links[l].bandwidth_capacity < q.min_bandwidth - kTol) fits = false;
                for (LinkId l : topo_.paths[p2].links)
                  if (topo_.links[l].bandwidth_capacity < q.min_bandwidth - kTol) fits = false;
                if (!fits) continue;
                if (q.max_packet_size / q.min_instance_capacity > q.max_e2e_delay_ms + kTol)
                  continue;  // compute term alone busts the cap
                Option o;
                o.flat = flat;
                o.node = n;
                o.inquiry = p1;
                o.response = p2;
                o.direct_cost = scn_.catalog.instances[flat].cost + topo_.path_link_cost(p1) +
                                topo_.path_link_cost(p2);
                opts.push_back(o);
              }
            }
          }
        }
        opts.push_back(Option{});  // unsupported, canonical last
        double lower = cfg_.unsupported_penalty;
        for (const Option& o : opts)
          if (o.flat >= 0) lower = std::min(lower, o.direct_cost);
        sp.options.push_back(std::move(opts));
        sp.option_lower.push_back(lower);
      }
    }
  }

  void reset_slot_residuals() {
    for (int i = 0; i < I_; ++i) inst_res_[i] = scn_.catalog.instances[i].capacity;
    for (NodeId n = 0; n < N_; ++n) node_res_[n] = topo_.nodes[n].compute_capacity;
    for (LinkId l = 0; l < topo_.n_links(); ++l) bw_res_[l] = topo_.links[l].bandwidth_capacity;
    std::fill(burst_.begin(), burst_.end(), 0.0);
    std::fill(place_ref_.begin(), place_ref_.end(), 0);
  }

  bool admissible(const Option& o, RequestId r) const {
    if (o.flat < 0) return true;
    const Request& q = scn_.requests[r];
    if (inst_res_[o.flat] < q.min_instance_capacity - kTol) return false;
    if (node_res_[o.node] < q.min_instance_capacity - kTol) return false;
    double est = q.max_packet_size / q.min_instance_capacity;
    for (PathId p : {o.inquiry, o.response})
      for (LinkId l : topo_.paths[p].links) {
        est += burst_[l] / topo_.links[l].bandwidth_capacity;
        if (bw_res_[l] < q.min_bandwidth - kTol) return false;
      }
    // links shared by both paths carry the request twice
    for (LinkId l : topo_.paths[o.inquiry].links)
      for (LinkId l2 : topo_.paths[o.response].links)
        if (l == l2 && bw_res_[l] < 2 * q.min_bandwidth - kTol) return false;
    double budget = q.max_e2e_delay_ms;
    if (use_sla_) budget = std::min(budget, q.sla_budget_ms - sla_used_[r]);
    // congestion only grows as more requests commit, so this est is a lower
    // bound on the leaf delay and pruning on it is exact
    return est <= budget + kTol;
  }

  double apply(int ti, const Option& o, RequestId r) {
    if (o.flat < 0) {
      cost_ += cfg_.unsupported_penalty;
      return cfg_.unsupported_penalty;
    }
    const Request& q = scn_.requests[r];
    inst_res_[o.flat] -= q.min_instance_capacity;
    node_res_[o.node] -= q.min_instance_capacity;
    for (PathId p : {o.inquiry, o.response})
      for (LinkId l : topo_.paths[p].links) bw_res_[l] -= q.min_bandwidth;
    std::vector<LinkId> mine;
    for (PathId p : {o.inquiry, o.response})
      for (LinkId l : topo_.paths[p].links) mine.push_back(l);
    std::sort(mine.begin(), mine.end());
    mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
    for (LinkId l : mine) burst_[l] += q.burstiness + q.max_packet_size;
    double delta = o.direct_cost;
    if (place_ref_[static_cast<std::size_t>(o.flat) * N_ + o.node]++ == 0) {
      cur_[ti].place[o.flat].push_back(o.node);
      delta += topo_.nodes[o.node].compute_cost;
    }
    const InstanceSpec& inst = scn_.catalog.instances[o.flat];
    cur_[ti].assign[r].push_back({{inst.service, inst.index}, o.inquiry, o.response});
    cost_ += delta;
    return delta;
  }

  void undo(int ti, const Option& o, RequestId r, double delta) {
    cost_ -= delta;
    if (o.flat < 0) return;
    const Request& q = scn_.requests[r];
    inst_res_[o.flat] += q.min_instance_capacity;
    node_res_[o.node] += q.min_instance_capacity;
    for (PathId p : {o.inquiry, o.response})
      for (LinkId l : topo_.paths[p].links) bw_res_[l] += q.min_bandwidth;
    std::vector<LinkId> mine;
    for (PathId p : {o.inquiry, o.response})
      for (LinkId l : topo_.paths[p].links) mine.push_back(l);
    std::sort(mine.begin(), mine.end());
    mine.erase(std::unique(mine.begin(), mine.end()), mine.end());
    for (LinkId l : mine) burst_[l] -= q.burstiness + q.max_packet_size;
    if (--place_ref_[static_cast<std::size_t>(o.flat) * N_ + o.node] == 0)
      cur_[ti].place[o.flat].pop_back();
    cur_[ti].assign[r].pop_back();
  }

  double suffix_after(int ti) const { return suffix_ ? (*suffix_)[ti + 1] : 0.0; }

  void dfs(int ti, int ri) {
    SlotProblem& sp = probs_[ti];
    if (ri == static_cast<int>(sp.active.size())) {
      close_slot(ti);
      return;
    }
    double lb = cost_ + suffix_after(ti);
    for (int j = ri; j < static_cast<int>(sp.active.size()); ++j) lb += sp.option_lower[j];
    if (lb >= best_) return;
    RequestId r = sp.active[ri];
    for (const Option& o : sp.options[ri]) {
      if (!admissible(o, r)) continue;
      double delta = apply(ti, o, r);
      dfs(ti, ri + 1);
      undo(ti, o, r, delta);
    }
  }

  void close_slot(int ti) {
    std::vector<double> delays = slot_delays(cur_[ti], scn_, topo_, ti + 1, mc_);
    for (RequestId r : probs_[ti].active) {
      if (!cur_[ti].supported(r)) continue;
      const Request& q = scn_.requests[r];
      if (delays[r] > q.max_e2e_delay_ms + kTol) return;
      if (use_sla_ && sla_used_[r] + delays[r] > q.sla_budget_ms + kTol) return;
    }
    if (ti == last_) {
      ++leaves_;
      if (cost_ < best_) {
        best_ = cost_;
        best_slices_.assign(cur_.begin() + first_, cur_.begin() + last_ + 1);
      }
      return;
    }
    // recurse into the next slot; each slot starts from full residuals
    std::vector<double> save_inst = inst_res_, save_node = node_res_, save_bw = bw_res_,
                        save_burst = burst_;
    std::vector<int> save_ref = place_ref_;
    std::vector<double> save_sla = sla_used_;
    for (RequestId r : probs_[ti].active)
      if (cur_[ti].supported(r)) sla_used_[r] += delays[r];
    reset_slot_residuals();
    dfs(ti + 1, 0);
    inst_res_ = std::move(save_inst);
    node_res_ = std::move(save_node);
    bw_res_ = std::move(save_bw);
    burst_ = std::move(save_burst);
    place_ref_ = std::move(save_ref);
    sla_used_ = std::move(save_sla);
  }

  const Scenario& scn_;
  const Topology& topo_;
  const OrchestratorConfig& cfg_;
  ModelConfig mc_;
  int T_ = 0, N_ = 0, I_ = 0;
  std::vector<SlotProblem> probs_;
  std::vector<double> inst_res_, node_res_, bw_res_, burst_, sla_used_;
  std::vector<int> place_ref_;
  std::vector<AllocationSlice> cur_, best_slices_;
  double cost_ = 0.0, best_ = kInf;
  long long leaves_ = 0;
  int first_ = 0, last_ = 0;
  bool use_sla_ = false;
  const std::vector<double>* suffix_ = nullptr;
};

}  // namespace

ExactResult exact_solve(const Scenario& scn, const Topology& topo, const ExactLimits& limits,
                        const OrchestratorConfig& cfg) {
  if (scn.n_requests() > limits.max_requests)
    throw std::invalid_argument("exact_solve: too many requests for exhaustive search");
  if (scn.horizon > limits.max_slots)
    throw std::invalid_argument("exact_solve: horizon too long for exhaustive search");
  if (topo.n_nodes() > limits.max_nodes)
    throw std::invalid_argument("exact_solve: too many nodes for exhaustive search");
  if (scn.catalog.n_services > limits.max_services)
    throw std::invalid_argument("exact_solve: too many services for exhaustive search");
  for (NodeId a = 0; a < topo.n_nodes(); ++a)
    for (NodeId b = 0; b < topo.n_nodes(); ++b)
      if (a != b &&
          static_cast<int>(topo.paths_between(a, b).size()) > limits.max_paths_per_pair)
        throw std::invalid_argument("exact_solve: too many paths per pair for exhaustive search");
  ExactSearch search(scn, topo, cfg);
  return search.run();
}

}  // namespace ascetic
