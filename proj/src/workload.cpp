#include "ascetic/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ascetic/rng.hpp"

namespace ascetic {

namespace {
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

bool Scenario::active(RequestId r, Slot t) const {
  const Request& q = requests[r];
  return t >= q.arrival && t <= horizon;
}

NodeId Scenario::poa_at(RequestId r, Slot t) const {
  if (r < 0 || r >= n_requests()) throw std::out_of_range("poa_at: bad request id");
  const Request& q = requests[r];
  if (t < q.arrival || t > horizon) throw std::out_of_range("poa_at: request not active at slot");
  return q.poa_trace[t - q.arrival];
}

std::vector<RequestId> Scenario::active_at(Slot t) const {
  std::vector<RequestId> out;
  for (const Request& q : requests)
    if (t >= q.arrival && t <= horizon) out.push_back(q.id);
  return out;
}

std::vector<RequestId> Scenario::arrivals_at(NodeId poa, Slot t) const {
  std::vector<RequestId> out;
  for (const Request& q : requests)
    if (t >= q.arrival && t <= horizon && q.poa_trace[t - q.arrival] == poa) out.push_back(q.id);
  return out;
}

std::string Scenario::serialize() const {
  std::ostringstream os;
  os << "ascetic-scn v1\n";
  os << "horizon " << horizon << '\n';
  os << "services " << catalog.n_services << ' ' << catalog.instances_per_service << '\n';
  for (const InstanceSpec& i : catalog.instances)
    os << "instance " << i.service << ' ' << i.index << ' ' << fmt_double(i.capacity) << ' '
       << fmt_double(i.cost) << '\n';
  for (const Request& q : requests) {
    os << "request " << q.id << ' ' << q.arrival << ' ' << q.service << ' '
       << fmt_double(q.min_instance_capacity) << ' ' << fmt_double(q.min_bandwidth) << ' '
       << fmt_double(q.max_e2e_delay_ms) << ' ' << fmt_double(q.burstiness) << ' '
       << fmt_double(q.max_packet_size) << ' ' << fmt_double(q.sla_budget_ms) << '\n';
    os << "trace " << q.id;
    for (NodeId n : q.poa_trace) os << ' ' << n;
    os << '\n';
  }
  return os.str();
}

Scenario Scenario::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "ascetic-scn v1")
    throw std::runtime_error("scenario: bad or missing version header");
  Scenario s;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    auto bad = [&](const std::string& msg) {
      throw std::runtime_error("scenario line " + std::to_string(lineno) + ": " + msg);
    };
    if (kind == "horizon") {
      if (!(ls >> s.horizon)) bad("malformed horizon");
    } else if (kind == "services") {
      if (!(ls >> s.catalog.n_services >> s.catalog.instances_per_service)) bad("malformed services");
    } else if (kind == "instance") {
      InstanceSpec i;
      if (!(ls >> i.service >> i.index >> i.capacity >> i.cost)) bad("malformed instance");
      s.catalog.instances.push_back(i);
    } else if (kind == "request") {
      Request q;
      if (!(ls >> q.id >> q.arrival >> q.service >> q.min_instance_capacity >> q.min_bandwidth >>
            q.max_e2e_delay_ms >> q.burstiness >> q.max_packet_size >> q.sla_budget_ms))
        bad("malformed request");
      s.requests.push_back(q);
    } else if (kind == "trace") {
      RequestId id;
      if (!(ls >> id)) bad("malformed trace");
      if (id < 0 || id >= s.n_requests() || s.requests[id].id != id)
        bad("trace before matching request");
      NodeId n;
      while (ls >> n) s.requests[id].poa_trace.push_back(n);
    } else {
      bad("unknown record '" + kind + "'");
    }
  }
  if (s.horizon < 1) throw std::runtime_error("scenario: missing horizon");
  if (static_cast<int>(s.catalog.instances.size()) != s.catalog.total())
    throw std::runtime_error("scenario: instance count mismatch");
  for (const Request& q : s.requests) {
    if (q.arrival < 1 || q.arrival > s.horizon) throw std::runtime_error("scenario: bad arrival");
    if (static_cast<int>(q.poa_trace.size()) != s.horizon - q.arrival + 1)
      throw std::runtime_error("scenario: trace length mismatch for request " + std::to_string(q.id));
    if (q.service < 0 || q.service >= s.catalog.n_services)
      throw std::runtime_error("scenario: unknown service");
  }
  return s;
}

std::string Scenario::to_csv() const {
  std::ostringstream os;
  os << "id,arrival,service,min_cap,min_bw,max_delay_ms,burst,pkt,sla_ms,poa_trace\n";
  for (const Request& q : requests) {
    os << q.id << ',' << q.arrival << ',' << q.service << ',' << fmt_double(q.min_instance_capacity)
       << ',' << fmt_double(q.min_bandwidth) << ',' << fmt_double(q.max_e2e_delay_ms) << ','
       << fmt_double(q.burstiness) << ',' << fmt_double(q.max_packet_size) << ','
       << fmt_double(q.sla_budget_ms) << ',';
    for (std::size_t i = 0; i < q.poa_trace.size(); ++i) {
      if (i) os << '|';
      os << q.poa_trace[i];
    }
    os << '\n';
  }
  return os.str();
}

Scenario generate_scenario(const Topology& topo, const ScenarioParams& params, int n_requests,
                           int horizon, std::uint64_t seed) {
  if (n_requests < 0) throw std::invalid_argument("generate_scenario: negative request count");
  if (horizon < 1) throw std::invalid_argument("generate_scenario: horizon must be >= 1");
  if (params.n_services < 1 || params.instances_per_service < 1)
    throw std::invalid_argument("generate_scenario: empty service catalog");
  if (topo.poa_nodes.empty())
    throw std::invalid_argument("generate_scenario: topology has no PoA nodes");
  if (params.qos_cap_lo < 1 || params.qos_cap_lo > params.qos_cap_hi ||
      params.qos_bw_lo < 1 || params.qos_bw_lo > params.qos_bw_hi ||
      params.burst_lo < 1 || params.burst_lo > params.burst_hi ||
      params.pkt_lo < 1 || params.pkt_lo > params.pkt_hi)
    throw std::invalid_argument("generate_scenario: bad QoS ranges");
  if (params.delay_lo <= 0 || params.delay_lo > params.delay_hi)
    throw std::invalid_argument("generate_scenario: bad delay range");
  // the compute term alone is pkt/cap; an unreachable delay cap would make
  // every assignment infeasible
  if (params.delay_hi <= static_cast<double>(params.pkt_lo) / params.qos_cap_hi)
    throw std::invalid_argument("generate_scenario: delay caps below the compute-time floor");
  if (params.sla_factor > 0 && params.sla_factor * horizon < 1.0)
    throw std::invalid_argument(
        "generate_scenario: SLA budget below a single slot's delay cap (horizon too short)");
  int arrival_hi = params.arrival_hi > 0 ? std::min(params.arrival_hi, horizon) : horizon;
  if (params.arrival_lo < 1 || params.arrival_lo > arrival_hi)
    throw std::invalid_argument("generate_scenario: bad arrival window");
  if (params.mobility.kind == MobilityModel::Markov &&
      (params.mobility.self_loop < 0 || params.mobility.self_loop > 1))
    throw std::invalid_argument("generate_scenario: bad self-loop probability");

  Rng master(seed);
  Rng cat_rng = master.sub(1);
  Rng req_rng = master.sub(2);
  Rng mob_rng = master.sub(3);

  Scenario s;
  s.horizon = horizon;
  s.catalog.n_services = params.n_services;
  s.catalog.instances_per_service = params.instances_per_service;
  for (ServiceId sv = 0; sv < params.n_services; ++sv)
    for (int i = 0; i < params.instances_per_service; ++i) {
      InstanceSpec inst;
      inst.service = sv;
      inst.index = i;
      inst.capacity = std::max(1.0, std::round(params.inst_cap_base * cat_rng.uniform_real(1.0, 2.0)));
      inst.cost = std::pow(params.inst_cost_base, cat_rng.uniform_real(1.0, 2.0));
      s.catalog.instances.push_back(inst);
    }

  const std::vector<NodeId>& poas = topo.poa_nodes;
  int n_poas = static_cast<int>(poas.size());
  for (RequestId r = 0; r < n_requests; ++r) {
    Request q;
    q.id = r;
    q.arrival = req_rng.uniform_int(params.arrival_lo, arrival_hi);
    q.service = req_rng.uniform_int(0, params.n_services - 1);
    q.min_instance_capacity = req_rng.uniform_int(params.qos_cap_lo, params.qos_cap_hi);
    q.min_bandwidth = req_rng.uniform_int(params.qos_bw_lo, params.qos_bw_hi);
    q.burstiness = req_rng.uniform_int(params.burst_lo, params.burst_hi);
    q.max_packet_size = req_rng.uniform_int(params.pkt_lo, params.pkt_hi);
    q.max_e2e_delay_ms = req_rng.uniform_real(params.delay_lo, params.delay_hi);
    q.sla_budget_ms =
        params.sla_factor > 0 ? params.sla_factor * horizon * q.max_e2e_delay_ms : 1e18;

    int poa_idx = mob_rng.uniform_int(0, n_poas - 1);
    q.poa_trace.push_back(poas[poa_idx]);
    for (Slot t = q.arrival + 1; t <= horizon; ++t) {
      switch (params.mobility.kind) {
        case MobilityModel::Static:
          break;
        case MobilityModel::Markov:
          if (n_poas > 1 && !mob_rng.bernoulli(params.mobility.self_loop)) {
            int step = mob_rng.uniform_int(1, n_poas - 1);
            poa_idx = (poa_idx + step) % n_poas;
          }
          break;
        case MobilityModel::Cyclic: {
          int period = std::max(1, params.mobility.period);
          if ((t - q.arrival) % period == 0) poa_idx = (poa_idx + 1) % n_poas;
          break;
        }
      }
      q.poa_trace.push_back(poas[poa_idx]);
    }
    s.requests.push_back(std::move(q));
  }
  return s;
}

}  // namespace ascetic
