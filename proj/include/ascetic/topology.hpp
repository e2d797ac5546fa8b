#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ascetic {

using NodeId = int;
using LinkId = int;
using PathId = int;

struct NodeSpec {
  NodeId id = 0;
  int tier = 0;  // 0 = PoA layer, grows toward the cloud
  double compute_capacity = 0.0;
  double compute_cost = 0.0;
};

struct LinkSpec {
  LinkId id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  double bandwidth_capacity = 0.0;
  double link_cost = 0.0;
};

// Directed simple path. A zero-link path with head == tail represents serving
// a request on its own attachment node.
struct Path {
  PathId id = 0;
  NodeId head = 0;
  NodeId tail = 0;
  std::vector<LinkId> links;
};

struct TopologyParams {
  int tiers = 3;
  int n_poas = 0;  // 0 -> max(2, n_nodes / 4)
  int min_links = 0, max_links = 0;  // 0 -> U{3n, 5n}
  double node_cap_base = 50.0;
  double node_cost_base = 50.0;
  int link_cap_lo = 100, link_cap_hi = 150;
  int link_cost_lo = 10, link_cost_hi = 20;
  int paths_per_pair = 3;  // k in the path enumeration
  int max_hops = 0;        // 0 -> n_nodes
};

class Topology {
 public:
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;
  std::vector<Path> paths;
  std::vector<NodeId> poa_nodes;  // sorted

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_links() const { return static_cast<int>(links.size()); }
  int n_paths() const { return static_cast<int>(paths.size()); }

  // all path ids head->tail, ascending (hops, cost); empty when unreachable
  const std::vector<PathId>& paths_between(NodeId head, NodeId tail) const;

  // 1 when the link lies on the path, else 0; throws on unknown ids
  int incidence(PathId p, LinkId l) const;

  double path_link_cost(PathId p) const;  // sum of link costs along the path
  int path_hops(PathId p) const;

  bool is_poa(NodeId n) const;

  // rebuilds the pair index and incidence cache; call after mutating paths
  void finalize();

  // checks structural invariants; on failure returns false and fills *why
  bool validate(std::string* why = nullptr) const;

  std::string serialize() const;
  static Topology deserialize(const std::string& text);  // throws std::runtime_error

 private:
  std::vector<std::vector<PathId>> pair_index_;  // [head * n + tail]
  std::vector<double> path_cost_cache_;
  std::vector<char> poa_mask_;
  static const std::vector<PathId> kNoPaths;
};

struct PathSet {
  std::vector<Path> paths;
  std::vector<std::pair<NodeId, NodeId>> unreachable;  // ordered pairs with no path
};

// Random connected topology: bidirectional spanning tree plus random extra
// directed links, tiers by hop distance from the PoA set, tier-correlated
// capacities/costs. Deterministic in (n_nodes, tiers, seed, params).
Topology build_topology(int n_nodes, int tiers, std::uint64_t seed,
                        const TopologyParams& params = {});

// k shortest loop-free paths per ordered node pair (Yen), weight = (hops,
// total link cost), deterministic tie-breaks; includes a zero-link self path
// per node. Reads nodes/links of `topo` only.
PathSet enumerate_paths(const Topology& topo, int k, int max_hops);

}  // namespace ascetic
