#include "ascetic/simctl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ascetic {

std::string to_string(OrchKind k) {
  switch (k) {
    case OrchKind::Wise: return "wise";
    case OrchKind::Random: return "random";
    case OrchKind::Ccam: return "ccam";
    case OrchKind::Exact: return "exact";
  }
  return "?";
}

std::string to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::Ddql: return "ddql";
    case PredictorKind::Frequency: return "frequency";
    case PredictorKind::Oracle: return "oracle";
    case PredictorKind::Random: return "random";
  }
  return "?";
}

OrchKind orch_from_string(const std::string& s) {
  if (s == "wise") return OrchKind::Wise;
  if (s == "random") return OrchKind::Random;
  if (s == "ccam") return OrchKind::Ccam;
  if (s == "exact") return OrchKind::Exact;
  throw std::invalid_argument("unknown orchestrator '" + s + "'");
}

PredictorKind predictor_from_string(const std::string& s) {
  if (s == "ddql") return PredictorKind::Ddql;
  if (s == "frequency") return PredictorKind::Frequency;
  if (s == "oracle") return PredictorKind::Oracle;
  if (s == "random") return PredictorKind::Random;
  throw std::invalid_argument("unknown predictor '" + s + "'");
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}
std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string mobility_name(MobilityModel::Kind k) {
  switch (k) {
    case MobilityModel::Static: return "static";
    case MobilityModel::Markov: return "markov";
    case MobilityModel::Cyclic: return "cyclic";
  }
  return "?";
}
MobilityModel::Kind mobility_from(const std::string& s) {
  if (s == "static") return MobilityModel::Static;
  if (s == "markov") return MobilityModel::Markov;
  if (s == "cyclic") return MobilityModel::Cyclic;
  throw std::invalid_argument("unknown mobility '" + s + "'");
}

std::string delay_model_name(DelayModel m) {
  return m == DelayModel::Literal ? "literal" : "restricted";
}
DelayModel delay_model_from(const std::string& s) {
  if (s == "restricted") return DelayModel::Restricted;
  if (s == "literal") return DelayModel::Literal;
  throw std::invalid_argument("unknown delay model '" + s + "'");
}

}  // namespace

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << "ascetic-cfg v1\n";
  os << "nodes " << n_nodes << '\n';
  os << "tiers " << tiers << '\n';
  os << "poas " << topo.n_poas << '\n';
  os << "links_lo " << topo.min_links << '\n';
  os << "links_hi " << topo.max_links << '\n';
  os << "paths_per_pair " << topo.paths_per_pair << '\n';
  os << "max_hops " << topo.max_hops << '\n';
  os << "requests " << n_requests << '\n';
  os << "horizon " << horizon << '\n';
  os << "services " << scenario.n_services << '\n';
  os << "instances_per_service " << scenario.instances_per_service << '\n';
  os << "sla_factor " << fmt17(scenario.sla_factor) << '\n';
  os << "delay_lo " << fmt17(scenario.delay_lo) << '\n';
  os << "delay_hi " << fmt17(scenario.delay_hi) << '\n';
  os << "mobility " << mobility_name(scenario.mobility.kind) << '\n';
  os << "self_loop " << fmt17(scenario.mobility.self_loop) << '\n';
  os << "mobility_period " << scenario.mobility.period << '\n';
  os << "arrival_lo " << scenario.arrival_lo << '\n';
  os << "arrival_hi " << scenario.arrival_hi << '\n';
  os << "orch " << to_string(orch) << '\n';
  os << "predictor " << to_string(predictor) << '\n';
  os << "window " << agent.window << '\n';
  os << "top_z " << agent.top_z << '\n';
  os << "hidden " << agent.hidden << '\n';
  os << "gamma " << fmt17(agent.gamma) << '\n';
  os << "lr " << fmt17(agent.lr) << '\n';
  os << "replay " << agent.replay_capacity << '\n';
  os << "batch " << agent.batch << '\n';
  os << "target_sync " << agent.target_sync << '\n';
  os << "eps0 " << fmt17(agent.eps0) << '\n';
  os << "eps_decrement " << fmt17(agent.eps_decrement) << '\n';
  os << "eps_floor " << fmt17(agent.eps_floor) << '\n';
  os << "w_delay " << fmt17(orchestrator.w_delay) << '\n';
  os << "delay_model " << delay_model_name(orchestrator.delay_model) << '\n';
  os << "penalty " << fmt17(orchestrator.unsupported_penalty) << '\n';
  os << "random_retries " << orchestrator.random_retries << '\n';
  os << "speculative " << (orchestrator.speculative_placement ? 1 : 0) << '\n';
  os << "seed " << seed << '\n';
  os << "sweep_axis " << sweep_axis << '\n';
  os << "axis_values";
  for (std::size_t i = 0; i < axis_values.size(); ++i)
    os << (i ? "," : " ") << axis_values[i];
  os << '\n';
  os << "repetitions " << repetitions << '\n';
  os << "sweep_orchs";
  for (std::size_t i = 0; i < sweep_orchs.size(); ++i)
    os << (i ? "," : " ") << to_string(sweep_orchs[i]);
  os << '\n';
  return os.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "ascetic-cfg v1")
    throw std::invalid_argument("config: bad or missing version header");
  ExperimentConfig c;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto bad = [&](const std::string& msg) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + msg);
    };
    auto want = [&](auto& dst) {
      if (!(ls >> dst)) bad("malformed value for '" + key + "'");
    };
    std::string sval;
    if (key == "nodes") want(c.n_nodes);
    else if (key == "tiers") want(c.tiers);
    else if (key == "poas") want(c.topo.n_poas);
    else if (key == "links_lo") want(c.topo.min_links);
    else if (key == "links_hi") want(c.topo.max_links);
    else if (key == "paths_per_pair") want(c.topo.paths_per_pair);
    else if (key == "max_hops") want(c.topo.max_hops);
    else if (key == "requests") want(c.n_requests);
    else if (key == "horizon") want(c.horizon);
    else if (key == "services") want(c.scenario.n_services);
    else if (key == "instances_per_service") want(c.scenario.instances_per_service);
    else if (key == "sla_factor") want(c.scenario.sla_factor);
    else if (key == "delay_lo") want(c.scenario.delay_lo);
    else if (key == "delay_hi") want(c.scenario.delay_hi);
    else if (key == "mobility") { want(sval); c.scenario.mobility.kind = mobility_from(sval); }
    else if (key == "self_loop") want(c.scenario.mobility.self_loop);
    else if (key == "mobility_period") want(c.scenario.mobility.period);
    else if (key == "arrival_lo") want(c.scenario.arrival_lo);
    else if (key == "arrival_hi") want(c.scenario.arrival_hi);
    else if (key == "orch") { want(sval); c.orch = orch_from_string(sval); }
    else if (key == "predictor") { want(sval); c.predictor = predictor_from_string(sval); }
    else if (key == "window") want(c.agent.window);
    else if (key == "top_z") want(c.agent.top_z);
    else if (key == "hidden") want(c.agent.hidden);
    else if (key == "gamma") want(c.agent.gamma);
    else if (key == "lr") want(c.agent.lr);
    else if (key == "replay") want(c.agent.replay_capacity);
    else if (key == "batch") want(c.agent.batch);
    else if (key == "target_sync") want(c.agent.target_sync);
    else if (key == "eps0") want(c.agent.eps0);
    else if (key == "eps_decrement") want(c.agent.eps_decrement);
    else if (key == "eps_floor") want(c.agent.eps_floor);
    else if (key == "w_delay") want(c.orchestrator.w_delay);
    else if (key == "delay_model") { want(sval); c.orchestrator.delay_model = delay_model_from(sval); }
    else if (key == "penalty") want(c.orchestrator.unsupported_penalty);
    else if (key == "random_retries") want(c.orchestrator.random_retries);
    else if (key == "speculative") { int v; want(v); c.orchestrator.speculative_placement = v != 0; }
    else if (key == "seed") want(c.seed);
    else if (key == "sweep_axis") want(c.sweep_axis);
    else if (key == "axis_values") {
      c.axis_values.clear();
      if (ls >> sval) {
        std::stringstream ss(sval);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.axis_values.push_back(std::stoi(tok));
      }
    } else if (key == "repetitions") want(c.repetitions);
    else if (key == "sweep_orchs") {
      c.sweep_orchs.clear();
      if (ls >> sval) {
        std::stringstream ss(sval);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.sweep_orchs.push_back(orch_from_string(tok));
      }
    } else {
      bad("unknown key '" + key + "'");
    }
  }
  return c;
}

void ExperimentConfig::apply_env() {
  if (const char* s = std::getenv("ASCETIC_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (!end || *end != '\0') throw std::invalid_argument("ASCETIC_SEED is not an integer");
    seed = v;
  }
}

double MetricsSeries::total_cost() const {
  double c = 0.0;
  for (const SlotMetrics& m : slots) c += m.cost;
  return c;
}

double MetricsSeries::mean_delay_ms() const {
  double sum = 0.0;
  long long n = 0;
  for (const SlotMetrics& m : slots) {
    sum += m.mean_delay_ms * m.supported;
    n += m.supported;
  }
  return n ? sum / n : 0.0;
}

double MetricsSeries::max_delay_ms() const {
  double mx = 0.0;
  for (const SlotMetrics& m : slots) mx = std::max(mx, m.mean_delay_ms);
  return mx;
}

int MetricsSeries::total_unsupported() const {
  int u = 0;
  for (const SlotMetrics& m : slots) u += m.unsupported;
  return u;
}

namespace {

std::vector<ServiceId> services_arriving(const Scenario& scn, NodeId poa, Slot t) {
  std::set<ServiceId> svs;
  if (t >= 1 && t <= scn.horizon)
    for (RequestId r : scn.arrivals_at(poa, t)) svs.insert(scn.requests[r].service);
  return {svs.begin(), svs.end()};
}

MetricsSeries series_from(const Allocation& alloc, const Scenario& scn, const Topology& topo,
                          const ModelConfig& mc) {
  MetricsSeries series;
  for (Slot t = 1; t <= scn.horizon; ++t) {
    const AllocationSlice& slice = alloc.at(t);
    SlotMetrics m;
    m.slot = t;
    m.cost = objective_slice(slice, scn, topo);
    std::vector<double> delays = slot_delays(slice, scn, topo, t, mc);
    double sum = 0.0;
    for (RequestId r : scn.active_at(t)) {
      if (slice.supported(r)) {
        sum += delays[r];
        ++m.supported;
      } else {
        ++m.unsupported;
      }
    }
    m.mean_delay_ms = m.supported ? sum / m.supported : 0.0;
    series.slots.push_back(m);
  }
  return series;
}

}  // namespace

RunArtifacts run_simulation(const ExperimentConfig& cfg0, std::uint64_t seed) {
  ExperimentConfig cfg = cfg0;
  cfg.agent.n_services = cfg.scenario.n_services;
  if (cfg.agent.top_z > cfg.agent.n_services) cfg.agent.top_z = cfg.agent.n_services;

  Rng master(seed);
  Topology topo = build_topology(cfg.n_nodes, cfg.tiers, master.sub(11).next_u64(), cfg.topo);
  Scenario scn =
      generate_scenario(topo, cfg.scenario, cfg.n_requests, cfg.horizon, master.sub(22).next_u64());
  ModelConfig mc{cfg.orchestrator.delay_model};

  auto t0 = std::chrono::steady_clock::now();
  RunArtifacts art;
  art.allocation = Allocation::empty(scn);

  if (cfg.orch == OrchKind::Exact) {
    ExactResult er = exact_solve(scn, topo, cfg.exact_limits, cfg.orchestrator);
    art.allocation = er.allocation;
  } else {
    ResidualState res = ResidualState::make(topo, scn);
    std::map<ServiceId, NodeId> sticky;
    Rng orch_rng = master.sub(33);
    Rng pred_rng = master.sub(44);

    std::vector<DdqlAgent> agents;
    std::vector<FrequencyPredictor> freqs;
    const std::vector<NodeId>& poas = topo.poa_nodes;
    if (cfg.orch == OrchKind::Wise) {
      for (std::size_t i = 0; i < poas.size(); ++i) {
        if (cfg.predictor == PredictorKind::Ddql)
          agents.emplace_back(cfg.agent, master.sub(100 + i).next_u64());
        else if (cfg.predictor == PredictorKind::Frequency)
          freqs.emplace_back(cfg.agent.n_services);
      }
    }

    PredictionTable table;  // empty before the first slot
    for (Slot t = 1; t <= scn.horizon; ++t) {
      switch (cfg.orch) {
        case OrchKind::Wise:
          art.allocation.at(t) = wise_place(table, topo, scn, t, res, cfg.orchestrator);
          break;
        case OrchKind::Random:
          art.allocation.at(t) = random_place(topo, scn, t, res, orch_rng, cfg.orchestrator);
          break;
        case OrchKind::Ccam:
          art.allocation.at(t) = ccam_place(topo, scn, t, res, sticky, cfg.orchestrator);
          break;
        case OrchKind::Exact:
          break;
      }

      if (cfg.orch == OrchKind::Wise) {
        // learn from this slot's arrivals, then predict the next slot
        table = PredictionTable();
        TrainPoint tp;
        tp.slot = t;
        for (std::size_t i = 0; i < poas.size(); ++i) {
          NodeId poa = poas[i];
          std::vector<ServiceId> arrived = services_arriving(scn, poa, t);
          switch (cfg.predictor) {
            case PredictorKind::Ddql: {
              agents[i].observe(arrived);
              tp.reward += agents[i].last_reward();
              tp.loss += agents[i].train_step();
              tp.epsilon += agents[i].epsilon();
              table.set(poa, agents[i].act());
              break;
            }
            case PredictorKind::Frequency:
              freqs[i].observe(arrived);
              table.set(poa, freqs[i].predict(cfg.agent.top_z));
              break;
            case PredictorKind::Oracle:
              table.set(poa, services_arriving(scn, poa, t + 1));
              break;
            case PredictorKind::Random:
              table.set(poa, random_prediction(cfg.agent.n_services, cfg.agent.top_z, pred_rng));
              break;
          }
        }
        if (cfg.predictor == PredictorKind::Ddql && !poas.empty()) {
          tp.reward /= static_cast<double>(poas.size());
          tp.loss /= static_cast<double>(poas.size());
          tp.epsilon /= static_cast<double>(poas.size());
          art.curve.push_back(tp);
        }
      }
    }
  }

  art.metrics = series_from(art.allocation, scn, topo, mc);
  art.metrics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  art.report = check_constraints(art.allocation, scn, topo, mc);
  if (!art.report.feasible) {
    std::ostringstream os;
    os << "simulation produced an infeasible allocation:";
    for (int c = 0; c < 12; ++c)
      if (!art.report.results[c].pass) {
        const ConstraintWitness& w = art.report.results[c].witnesses.front();
        os << " [C" << c + 1 << " entity " << w.entity << " slot " << w.slot << "]";
      }
    throw std::runtime_error(os.str());
  }
  return art;
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg) {
  if (cfg.axis_values.empty()) throw std::invalid_argument("sweep: no axis values");
  if (cfg.repetitions < 1) throw std::invalid_argument("sweep: repetitions must be >= 1");
  if (cfg.sweep_axis != "requests" && cfg.sweep_axis != "nodes")
    throw std::invalid_argument("sweep: axis must be 'requests' or 'nodes'");
  for (OrchKind k : cfg.sweep_orchs)
    if (k == OrchKind::Exact) {
      for (int v : cfg.axis_values) {
        int reqs = cfg.sweep_axis == "requests" ? v : cfg.n_requests;
        int nodes = cfg.sweep_axis == "nodes" ? v : cfg.n_nodes;
        if (reqs > cfg.exact_limits.max_requests || nodes > cfg.exact_limits.max_nodes ||
            cfg.horizon > cfg.exact_limits.max_slots)
          throw std::invalid_argument("sweep: exact orchestrator beyond its size limits");
      }
    }

  struct Cell {
    int axis;
    OrchKind orch;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  Rng base(cfg.seed);
  for (int av : cfg.axis_values)
    for (OrchKind k : cfg.sweep_orchs)
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        // seeds are paired: identical for every orchestrator at (axis, rep)
        std::uint64_t s =
            base.sub((static_cast<std::uint64_t>(av) << 20) | static_cast<std::uint64_t>(rep))
                .next_u64();
        cells.push_back({av, k, s});
      }

  std::vector<SweepRow> rows(cells.size());
  int n = static_cast<int>(cells.size());
#pragma omp parallel for schedule(dynamic) if (n >= 4)
  for (int i = 0; i < n; ++i) {
    ExperimentConfig c = cfg;
    c.orch = cells[i].orch;
    if (cfg.sweep_axis == "requests")
      c.n_requests = cells[i].axis;
    else
      c.n_nodes = cells[i].axis;
    RunArtifacts art = run_simulation(c, cells[i].seed);
    rows[i] = {cells[i].axis, cells[i].orch, cells[i].seed, std::move(art.metrics)};
  }
  return rows;
}

std::string metrics_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "axis,orch,seed,slot,cost,mean_delay_ms,unsupported\n";
  for (const SweepRow& row : rows)
    for (const SlotMetrics& m : row.metrics.slots)
      os << row.axis_value << ',' << to_string(row.orch) << ',' << row.seed << ',' << m.slot << ','
         << fmt(m.cost) << ',' << fmt(m.mean_delay_ms) << ',' << m.unsupported << '\n';
  return os.str();
}

std::string summary_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  // wall-clock is deliberately absent: CSV artifacts must be byte-identical
  // across reruns of the same seed (timings go to stdout instead)
  os << "axis,orch,seed,total_cost,mean_delay_ms,max_delay_ms,unsupported_total\n";
  for (const SweepRow& row : rows)
    os << row.axis_value << ',' << to_string(row.orch) << ',' << row.seed << ','
       << fmt(row.metrics.total_cost()) << ',' << fmt(row.metrics.mean_delay_ms()) << ','
       << fmt(row.metrics.max_delay_ms()) << ',' << row.metrics.total_unsupported() << '\n';
  return os.str();
}

std::string plot_csv(const std::vector<SweepRow>& rows) {
  // aggregate in first-appearance order so output is deterministic
  struct Agg {
    int axis;
    OrchKind orch;
    double cost = 0, delay = 0, unsupported = 0;
    int n = 0;
  };
  std::vector<Agg> aggs;
  for (const SweepRow& row : rows) {
    Agg* a = nullptr;
    for (Agg& x : aggs)
      if (x.axis == row.axis_value && x.orch == row.orch) a = &x;
    if (!a) {
      aggs.push_back({row.axis_value, row.orch, 0, 0, 0, 0});
      a = &aggs.back();
    }
    a->cost += row.metrics.total_cost();
    a->delay += row.metrics.mean_delay_ms();
    a->unsupported += row.metrics.total_unsupported();
    ++a->n;
  }
  std::ostringstream os;
  os << "axis,orch,mean_cost,mean_delay_ms,mean_unsupported\n";
  for (const Agg& a : aggs)
    os << a.axis << ',' << to_string(a.orch) << ',' << fmt(a.cost / a.n) << ','
       << fmt(a.delay / a.n) << ',' << fmt(a.unsupported / a.n) << '\n';
  return os.str();
}

}  // namespace ascetic
