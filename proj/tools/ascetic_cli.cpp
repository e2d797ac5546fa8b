#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ascetic/simctl.hpp"

namespace {

using namespace ascetic;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string out_dir(const std::string& flag_value) {
  if (const char* env = std::getenv("ASCETIC_OUT_DIR")) return env;
  return flag_value;
}

ExperimentConfig load_config(const std::string& cfg_path) {
  ExperimentConfig cfg;
  if (!cfg_path.empty()) cfg = ExperimentConfig::parse(slurp(cfg_path));
  cfg.apply_env();
  return cfg;
}

void emit(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  spit(dir + "/" + name, content);
  std::cout << "wrote " << dir << "/" << name << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge service placement simulator"};
  app.require_subcommand(1);

  std::string cfg_path, out, topo_path, scn_path, alloc_path;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg_path, "experiment config file");
    sub->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--out", out, "output directory")->default_val("out");
  };

  // gen-topo
  auto* gen_topo = app.add_subcommand("gen-topo", "generate a random topology");
  add_common(gen_topo);
  gen_topo->callback([&] {
    ExperimentConfig cfg = load_config(cfg_path);
    if (seed_set) cfg.seed = seed;
    Topology topo = build_topology(cfg.n_nodes, cfg.tiers, Rng(cfg.seed).sub(11).next_u64(),
                                   cfg.topo);
    emit(out_dir(out), "topology.txt", topo.serialize());
  });

  // gen-scn
  auto* gen_scn = app.add_subcommand("gen-scn", "generate a workload scenario");
  add_common(gen_scn);
  gen_scn->add_option("--topo", topo_path, "existing topology file (default: regenerate)");
  gen_scn->callback([&] {
    ExperimentConfig cfg = load_config(cfg_path);
    if (seed_set) cfg.seed = seed;
    Rng master(cfg.seed);
    Topology topo = topo_path.empty()
                        ? build_topology(cfg.n_nodes, cfg.tiers, master.sub(11).next_u64(), cfg.topo)
                        : Topology::deserialize(slurp(topo_path));
    Scenario scn = generate_scenario(topo, cfg.scenario, cfg.n_requests, cfg.horizon,
                                     master.sub(22).next_u64());
    emit(out_dir(out), "scenario.txt", scn.serialize());
    emit(out_dir(out), "scenario.csv", scn.to_csv());
  });

  // run
  auto* run = app.add_subcommand("run", "run one simulation");
  add_common(run);
  std::string orch_name;
  run->add_option("--orch", orch_name, "wise|random|ccam|exact");
  run->callback([&] {
    ExperimentConfig cfg = load_config(cfg_path);
    if (seed_set) cfg.seed = seed;
    if (!orch_name.empty()) cfg.orch = orch_from_string(orch_name);
    RunArtifacts art = run_simulation(cfg, cfg.seed);
    std::vector<SweepRow> one{{0, cfg.orch, cfg.seed, art.metrics}};
    std::string dir = out_dir(out);
    emit(dir, "metrics.csv", metrics_csv(one));
    emit(dir, "summary.csv", summary_csv(one));
    emit(dir, "constraints.json", art.report.to_json());
    if (!art.curve.empty()) {
      std::ostringstream os;
      os << "slot,loss,epsilon,reward\n";
      char buf[128];
      for (const TrainPoint& tp : art.curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", tp.slot, tp.loss, tp.epsilon,
                      tp.reward);
        os << buf;
      }
      emit(dir, "training.csv", os.str());
    }
    std::printf("total_cost %.9g mean_delay_ms %.9g unsupported %d\n", art.metrics.total_cost(),
                art.metrics.mean_delay_ms(), art.metrics.total_unsupported());
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "axis x orchestrator x repetition grid");
  add_common(sw);
  sw->callback([&] {
    ExperimentConfig cfg = load_config(cfg_path);
    if (seed_set) cfg.seed = seed;
    if (cfg.axis_values.empty())
      cfg.axis_values = {cfg.sweep_axis == "nodes" ? cfg.n_nodes : cfg.n_requests};
    std::vector<SweepRow> rows = sweep(cfg);
    std::string dir = out_dir(out);
    emit(dir, "metrics.csv", metrics_csv(rows));
    emit(dir, "summary.csv", summary_csv(rows));
    double wall = 0.0;
    for (const SweepRow& row : rows) wall += row.metrics.wall_seconds;
    std::cout << rows.size() << " cells, total sim wall " << wall << " s\n";
  });

  // validate
  auto* val = app.add_subcommand("validate", "validate topology/scenario files");
  val->add_option("--topo", topo_path, "topology file")->required();
  val->add_option("--scn", scn_path, "scenario file");
  val->callback([&] {
    Topology topo = Topology::deserialize(slurp(topo_path));
    std::string why;
    if (!topo.validate(&why)) throw std::runtime_error("topology invalid: " + why);
    std::cout << "topology ok: " << topo.n_nodes() << " nodes, " << topo.n_links() << " links, "
              << topo.n_paths() << " paths\n";
    if (!scn_path.empty()) {
      Scenario scn = Scenario::deserialize(slurp(scn_path));
      for (const Request& q : scn.requests)
        for (NodeId n : q.poa_trace)
          if (!topo.is_poa(n))
            throw std::runtime_error("scenario request " + std::to_string(q.id) +
                                     " attaches to non-PoA node " + std::to_string(n));
      std::cout << "scenario ok: " << scn.n_requests() << " requests over " << scn.horizon
                << " slots\n";
    }
  });

  // plotdata
  auto* plot = app.add_subcommand("plotdata", "aggregate sweep metrics for plotting");
  std::string metrics_path;
  plot->add_option("--metrics", metrics_path, "metrics.csv from a sweep")->required();
  plot->add_option("--out", out, "output directory")->default_val("out");
  plot->callback([&] {
    // rebuild rows from the csv: axis,orch,seed,slot,cost,mean_delay_ms,unsupported
    std::istringstream is(slurp(metrics_path));
    std::string line;
    if (!std::getline(is, line) || line != "axis,orch,seed,slot,cost,mean_delay_ms,unsupported")
      throw std::runtime_error("plotdata: unrecognized metrics header");
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string f[7];
      for (int i = 0; i < 7; ++i)
        if (!std::getline(ls, f[i], ',')) throw std::runtime_error("plotdata: short row");
      SweepRow* row = nullptr;
      int axis = std::stoi(f[0]);
      OrchKind orch = orch_from_string(f[1]);
      std::uint64_t sd = std::stoull(f[2]);
      if (!rows.empty() && rows.back().axis_value == axis && rows.back().orch == orch &&
          rows.back().seed == sd)
        row = &rows.back();
      if (!row) {
        rows.push_back({axis, orch, sd, {}});
        row = &rows.back();
      }
      SlotMetrics m;
      m.slot = std::stoi(f[3]);
      m.cost = std::stod(f[4]);
      m.mean_delay_ms = std::stod(f[5]);
      m.unsupported = std::stoi(f[6]);
      m.supported = m.mean_delay_ms > 0 ? 1 : 0;  // weight only; per-slot means preserved
      row->metrics.slots.push_back(m);
    }
    emit(out_dir(out), "plot.csv", plot_csv(rows));
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
