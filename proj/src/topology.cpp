#include "ascetic/topology.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ascetic/rng.hpp"

namespace ascetic {

const std::vector<PathId> Topology::kNoPaths;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// additive path weight, compared lexicographically
struct PairWeight {
  int hops = 0;
  double cost = 0.0;
  bool operator<(const PairWeight& o) const {
    if (hops != o.hops) return hops < o.hops;
    return cost < o.cost;
  }
  PairWeight operator+(const PairWeight& o) const { return {hops + o.hops, cost + o.cost}; }
};

struct AdjEntry {
  NodeId dst;
  LinkId link;
  double cost;
};

struct FoundPath {
  PairWeight w;
  std::vector<LinkId> links;
  std::vector<NodeId> nodes;  // head..tail, |links|+1 entries
};

// deterministic Dijkstra with (hops, cost) weights; ties keep the first
// settled route, adjacency scanned in link-id order
bool dijkstra(const std::vector<std::vector<AdjEntry>>& adj, NodeId src, NodeId dst,
              const std::vector<char>& banned_node, const std::vector<char>& banned_link,
              FoundPath& out) {
  int n = static_cast<int>(adj.size());
  std::vector<PairWeight> dist(n, {INT32_MAX, 0.0});
  std::vector<char> settled(n, 0);
  std::vector<LinkId> parent_link(n, -1);
  std::vector<NodeId> parent_node(n, -1);
  using QItem = std::tuple<int, double, NodeId>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> pq;
  dist[src] = {0, 0.0};
  pq.emplace(0, 0.0, src);
  while (!pq.empty()) {
    auto [h, c, u] = pq.top();
    pq.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    if (u == dst) break;
    for (const AdjEntry& e : adj[u]) {
      if (banned_link[e.link] || banned_node[e.dst] || settled[e.dst]) continue;
      PairWeight cand{h + 1, c + e.cost};
      if (cand < dist[e.dst]) {
        dist[e.dst] = cand;
        parent_link[e.dst] = e.link;
        parent_node[e.dst] = u;
        pq.emplace(cand.hops, cand.cost, e.dst);
      }
    }
  }
  if (!settled[dst]) return false;
  out.w = dist[dst];
  out.links.clear();
  out.nodes.clear();
  for (NodeId v = dst; v != src; v = parent_node[v]) {
    out.links.push_back(parent_link[v]);
    out.nodes.push_back(v);
  }
  std::reverse(out.links.begin(), out.links.end());
  out.nodes.push_back(src);
  std::reverse(out.nodes.begin(), out.nodes.end());
  return true;
}

struct CandLess {
  bool operator()(const FoundPath& a, const FoundPath& b) const {
    if (a.w.hops != b.w.hops) return a.w.hops < b.w.hops;
    if (a.w.cost != b.w.cost) return a.w.cost < b.w.cost;
    return a.nodes < b.nodes;
  }
};

// Yen's k shortest loop-free paths for one ordered pair
std::vector<FoundPath> yen(const std::vector<std::vector<AdjEntry>>& adj, NodeId src, NodeId dst,
                           int k, int max_hops) {
  int n = static_cast<int>(adj.size());
  int n_links = 0;
  for (const auto& row : adj)
    for (const AdjEntry& e : row) n_links = std::max(n_links, e.link + 1);
  std::vector<char> banned_node(n, 0), banned_link(n_links, 0);
  std::vector<FoundPath> accepted;
  FoundPath first;
  if (!dijkstra(adj, src, dst, banned_node, banned_link, first)) return accepted;
  if (first.w.hops > max_hops) return accepted;
  accepted.push_back(std::move(first));
  std::set<FoundPath, CandLess> candidates;
  while (static_cast<int>(accepted.size()) < k) {
    const FoundPath& prev = accepted.back();
    for (std::size_t i = 0; i + 1 < prev.nodes.size(); ++i) {
      NodeId spur = prev.nodes[i];
      std::fill(banned_node.begin(), banned_node.end(), 0);
      std::fill(banned_link.begin(), banned_link.end(), 0);
      for (const FoundPath& p : accepted) {
        if (p.links.size() >= i + 1 &&
            std::equal(p.links.begin(), p.links.begin() + i, prev.links.begin()))
          banned_link[p.links[i]] = 1;
      }
      for (std::size_t j = 0; j < i; ++j) banned_node[prev.nodes[j]] = 1;
      FoundPath spur_path;
      if (!dijkstra(adj, spur, dst, banned_node, banned_link, spur_path)) continue;
      FoundPath total;
      total.links.assign(prev.links.begin(), prev.links.begin() + i);
      total.links.insert(total.links.end(), spur_path.links.begin(), spur_path.links.end());
      total.nodes.assign(prev.nodes.begin(), prev.nodes.begin() + i);
      total.nodes.insert(total.nodes.end(), spur_path.nodes.begin(), spur_path.nodes.end());
      total.w.hops = static_cast<int>(total.links.size());
      // recompute cost along the stitched path so equal paths compare equal
      double cost = 0.0;
      NodeId at = src;
      for (LinkId l : total.links)
        for (const AdjEntry& e : adj[at])
          if (e.link == l) {
            cost += e.cost;
            at = e.dst;
            break;
          }
      total.w.cost = cost;
      if (total.w.hops > max_hops) continue;
      bool dup = false;
      for (const FoundPath& p : accepted)
        if (p.links == total.links) {
          dup = true;
          break;
        }
      if (!dup) candidates.insert(std::move(total));
    }
    if (candidates.empty()) break;
    FoundPath best = *candidates.begin();
    candidates.erase(candidates.begin());
    if (best.w.hops > max_hops) break;
    accepted.push_back(std::move(best));
  }
  return accepted;
}

}  // namespace

const std::vector<PathId>& Topology::paths_between(NodeId head, NodeId tail) const {
  if (head < 0 || head >= n_nodes() || tail < 0 || tail >= n_nodes())
    throw std::out_of_range("paths_between: node id out of range");
  return pair_index_[static_cast<std::size_t>(head) * n_nodes() + tail];
}

int Topology::incidence(PathId p, LinkId l) const {
  if (p < 0 || p >= n_paths()) throw std::out_of_range("incidence: bad path id");
  if (l < 0 || l >= n_links()) throw std::out_of_range("incidence: bad link id");
  const auto& ls = paths[p].links;
  return std::find(ls.begin(), ls.end(), l) != ls.end() ? 1 : 0;
}

double Topology::path_link_cost(PathId p) const {
  if (p < 0 || p >= n_paths()) throw std::out_of_range("path_link_cost: bad path id");
  return path_cost_cache_[p];
}

int Topology::path_hops(PathId p) const {
  if (p < 0 || p >= n_paths()) throw std::out_of_range("path_hops: bad path id");
  return static_cast<int>(paths[p].links.size());
}

bool Topology::is_poa(NodeId n) const {
  if (n < 0 || n >= n_nodes()) throw std::out_of_range("is_poa: bad node id");
  return poa_mask_[n] != 0;
}

void Topology::finalize() {
  pair_index_.assign(static_cast<std::size_t>(n_nodes()) * n_nodes(), {});
  path_cost_cache_.assign(paths.size(), 0.0);
  for (const Path& p : paths) {
    double c = 0.0;
    for (LinkId l : p.links) c += links[l].link_cost;
    path_cost_cache_[p.id] = c;
    pair_index_[static_cast<std::size_t>(p.head) * n_nodes() + p.tail].push_back(p.id);
  }
  for (auto& v : pair_index_)
    std::sort(v.begin(), v.end(), [&](PathId a, PathId b) {
      int ha = path_hops(a), hb = path_hops(b);
      if (ha != hb) return ha < hb;
      double ca = path_cost_cache_[a], cb = path_cost_cache_[b];
      if (ca != cb) return ca < cb;
      return a < b;
    });
  poa_mask_.assign(n_nodes(), 0);
  for (NodeId n : poa_nodes) {
    if (n < 0 || n >= n_nodes()) throw std::runtime_error("finalize: poa id out of range");
    poa_mask_[n] = 1;
  }
}

bool Topology::validate(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (nodes.empty()) return fail("no nodes");
  for (int i = 0; i < n_nodes(); ++i) {
    const NodeSpec& nd = nodes[i];
    if (nd.id != i) return fail("node ids not sequential");
    if (nd.tier < 0) return fail("negative tier");
    if (nd.compute_capacity <= 0) return fail("node capacity must be positive");
    if (nd.compute_cost < 0) return fail("negative node cost");
  }
  std::set<std::pair<NodeId, NodeId>> seen;
  for (int i = 0; i < n_links(); ++i) {
    const LinkSpec& lk = links[i];
    if (lk.id != i) return fail("link ids not sequential");
    if (lk.src < 0 || lk.src >= n_nodes() || lk.dst < 0 || lk.dst >= n_nodes())
      return fail("link endpoint out of range");
    if (lk.src == lk.dst) return fail("self-loop link");
    if (!seen.insert({lk.src, lk.dst}).second) return fail("duplicate directed link");
    if (lk.bandwidth_capacity <= 0) return fail("link capacity must be positive");
    if (lk.link_cost < 0) return fail("negative link cost");
  }
  for (int i = 0; i < n_paths(); ++i) {
    const Path& p = paths[i];
    if (p.id != i) return fail("path ids not sequential");
    if (p.head < 0 || p.head >= n_nodes() || p.tail < 0 || p.tail >= n_nodes())
      return fail("path endpoint out of range");
    if (p.links.empty()) {
      if (p.head != p.tail) return fail("zero-link path with head != tail");
      continue;
    }
    NodeId at = p.head;
    std::set<NodeId> visited{at};
    for (LinkId l : p.links) {
      if (l < 0 || l >= n_links()) return fail("path references unknown link");
      if (links[l].src != at) return fail("path links do not chain");
      at = links[l].dst;
      if (!visited.insert(at).second) return fail("path revisits a node");
    }
    if (at != p.tail) return fail("path does not end at tail");
  }
  if (poa_nodes.empty()) return fail("no PoA nodes");
  for (std::size_t i = 0; i < poa_nodes.size(); ++i) {
    if (poa_nodes[i] < 0 || poa_nodes[i] >= n_nodes()) return fail("poa id out of range");
    if (i > 0 && poa_nodes[i] <= poa_nodes[i - 1]) return fail("poa list not sorted/distinct");
  }
  return true;
}

std::string Topology::serialize() const {
  std::ostringstream os;
  os << "ascetic-topo v1\n";
  for (const NodeSpec& n : nodes)
    os << "node " << n.id << ' ' << n.tier << ' ' << fmt_double(n.compute_capacity) << ' '
       << fmt_double(n.compute_cost) << '\n';
  for (const LinkSpec& l : links)
    os << "link " << l.id << ' ' << l.src << ' ' << l.dst << ' '
       << fmt_double(l.bandwidth_capacity) << ' ' << fmt_double(l.link_cost) << '\n';
  os << "poa";
  for (NodeId n : poa_nodes) os << ' ' << n;
  os << '\n';
  for (const Path& p : paths) {
    os << "path " << p.id << ' ' << p.head << ' ' << p.tail << ' ';
    if (p.links.empty()) {
      os << '-';
    } else {
      for (std::size_t i = 0; i < p.links.size(); ++i) {
        if (i) os << ',';
        os << p.links[i];
      }
    }
    os << '\n';
  }
  return os.str();
}

Topology Topology::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "ascetic-topo v1")
    throw std::runtime_error("topology: bad or missing version header");
  Topology t;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    auto bad = [&](const std::string& msg) {
      throw std::runtime_error("topology line " + std::to_string(lineno) + ": " + msg);
    };
    if (kind == "node") {
      NodeSpec n;
      if (!(ls >> n.id >> n.tier >> n.compute_capacity >> n.compute_cost)) bad("malformed node");
      t.nodes.push_back(n);
    } else if (kind == "link") {
      LinkSpec l;
      if (!(ls >> l.id >> l.src >> l.dst >> l.bandwidth_capacity >> l.link_cost))
        bad("malformed link");
      t.links.push_back(l);
    } else if (kind == "poa") {
      NodeId n;
      while (ls >> n) t.poa_nodes.push_back(n);
    } else if (kind == "path") {
      Path p;
      std::string field;
      if (!(ls >> p.id >> p.head >> p.tail >> field)) bad("malformed path");
      if (field != "-") {
        std::stringstream fs(field);
        std::string tok;
        while (std::getline(fs, tok, ',')) {
          if (tok.empty()) bad("empty link id in path");
          p.links.push_back(std::stoi(tok));
        }
      }
      t.paths.push_back(p);
    } else {
      bad("unknown record '" + kind + "'");
    }
  }
  std::string why;
  if (t.nodes.empty()) throw std::runtime_error("topology: no nodes");
  t.finalize();
  if (!t.validate(&why)) throw std::runtime_error("topology: " + why);
  return t;
}

PathSet enumerate_paths(const Topology& topo, int k, int max_hops) {
  if (k < 1) throw std::invalid_argument("enumerate_paths: k must be >= 1");
  if (max_hops < 1) throw std::invalid_argument("enumerate_paths: max_hops must be >= 1");
  int n = topo.n_nodes();
  std::vector<std::vector<AdjEntry>> adj(n);
  for (const LinkSpec& l : topo.links) adj[l.src].push_back({l.dst, l.id, l.link_cost});
  // per-(head,tail) results, filled independently
  std::vector<std::vector<FoundPath>> results(static_cast<std::size_t>(n) * n);
#pragma omp parallel for schedule(dynamic) if (n >= 16)
  for (int head = 0; head < n; ++head) {
    for (int tail = 0; tail < n; ++tail) {
      if (head == tail) continue;
      results[static_cast<std::size_t>(head) * n + tail] = yen(adj, head, tail, k, max_hops);
    }
  }
  PathSet out;
  PathId next_id = 0;
  for (int head = 0; head < n; ++head) {
    for (int tail = 0; tail < n; ++tail) {
      if (head == tail) {
        Path self;
        self.id = next_id++;
        self.head = head;
        self.tail = tail;
        out.paths.push_back(std::move(self));
        continue;
      }
      auto& found = results[static_cast<std::size_t>(head) * n + tail];
      if (found.empty()) out.unreachable.push_back({head, tail});
      for (FoundPath& fp : found) {
        Path p;
        p.id = next_id++;
        p.head = head;
        p.tail = tail;
        p.links = std::move(fp.links);
        out.paths.push_back(std::move(p));
      }
    }
  }
  return out;
}

Topology build_topology(int n_nodes, int tiers, std::uint64_t seed, const TopologyParams& params) {
  if (n_nodes < 2) throw std::invalid_argument("build_topology: need at least 2 nodes");
  if (tiers < 1) throw std::invalid_argument("build_topology: tiers must be >= 1");
  if (params.link_cap_lo > params.link_cap_hi || params.link_cap_lo <= 0)
    throw std::invalid_argument("build_topology: bad link capacity range");
  if (params.link_cost_lo > params.link_cost_hi || params.link_cost_lo < 0)
    throw std::invalid_argument("build_topology: bad link cost range");
  if (params.node_cap_base <= 0 || params.node_cost_base <= 0)
    throw std::invalid_argument("build_topology: bases must be positive");

  Rng master(seed);
  Rng poa_rng = master.sub(1);
  Rng tree_rng = master.sub(2);
  Rng extra_rng = master.sub(3);
  Rng attr_rng = master.sub(4);

  Topology t;
  t.nodes.resize(n_nodes);

  int n_poas = params.n_poas > 0 ? std::min(params.n_poas, n_nodes)
                                 : std::max(2, n_nodes / 4);
  {
    std::vector<NodeId> ids(n_nodes);
    for (int i = 0; i < n_nodes; ++i) ids[i] = i;
    poa_rng.shuffle(ids);
    ids.resize(n_poas);
    std::sort(ids.begin(), ids.end());
    t.poa_nodes = std::move(ids);
  }

  // random spanning tree, both directions per tree edge => strongly connected
  std::vector<char> has_link(static_cast<std::size_t>(n_nodes) * n_nodes, 0);
  auto add_link = [&](NodeId a, NodeId b) {
    LinkSpec l;
    l.id = t.n_links();
    l.src = a;
    l.dst = b;
    t.links.push_back(l);
    has_link[static_cast<std::size_t>(a) * n_nodes + b] = 1;
  };
  std::vector<NodeId> perm(n_nodes);
  for (int i = 0; i < n_nodes; ++i) perm[i] = i;
  tree_rng.shuffle(perm);
  for (int i = 1; i < n_nodes; ++i) {
    NodeId parent = perm[tree_rng.uniform_int(0, i - 1)];
    add_link(parent, perm[i]);
    add_link(perm[i], parent);
  }

  int lo = params.min_links > 0 ? params.min_links : 3 * n_nodes;
  int hi = params.max_links > 0 ? params.max_links : 5 * n_nodes;
  if (lo > hi) throw std::invalid_argument("build_topology: bad link count range");
  int target = extra_rng.uniform_int(lo, hi);
  target = std::min(target, n_nodes * (n_nodes - 1));
  target = std::max(target, t.n_links());
  {
    std::vector<std::pair<NodeId, NodeId>> absent;
    for (int a = 0; a < n_nodes; ++a)
      for (int b = 0; b < n_nodes; ++b)
        if (a != b && !has_link[static_cast<std::size_t>(a) * n_nodes + b])
          absent.push_back({a, b});
    extra_rng.shuffle(absent);
    for (int i = 0; t.n_links() < target; ++i) add_link(absent[i].first, absent[i].second);
  }

  // tier = hop distance from the PoA set (undirected), capped at tiers-1
  {
    std::vector<int> dist(n_nodes, -1);
    std::queue<NodeId> q;
    for (NodeId p : t.poa_nodes) {
      dist[p] = 0;
      q.push(p);
    }
    std::vector<std::vector<NodeId>> und(n_nodes);
    for (const LinkSpec& l : t.links) {
      und[l.src].push_back(l.dst);
      und[l.dst].push_back(l.src);
    }
    while (!q.empty()) {
      NodeId u = q.front();
      q.pop();
      for (NodeId v : und[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    for (int i = 0; i < n_nodes; ++i) {
      t.nodes[i].id = i;
      t.nodes[i].tier = std::min(dist[i] < 0 ? tiers - 1 : dist[i], tiers - 1);
    }
  }

  // tier-correlated capacities/costs: capacity grows toward the cloud,
  // unit cost shrinks toward it
  for (int i = 0; i < n_nodes; ++i) {
    int a = t.nodes[i].tier;
    int ainv = (tiers - 1) - a;
    t.nodes[i].compute_capacity =
        std::max(1.0, std::round(params.node_cap_base * attr_rng.uniform_real(a, a + 1.0)));
    t.nodes[i].compute_cost = std::pow(params.node_cost_base, attr_rng.uniform_real(ainv, ainv + 1.0));
  }
  for (LinkSpec& l : t.links) {
    l.bandwidth_capacity = attr_rng.uniform_int(params.link_cap_lo, params.link_cap_hi);
    l.link_cost = attr_rng.uniform_int(params.link_cost_lo, params.link_cost_hi);
  }

  int max_hops = params.max_hops > 0 ? params.max_hops : n_nodes;
  PathSet ps = enumerate_paths(t, params.paths_per_pair, max_hops);
  if (!ps.unreachable.empty())
    throw std::runtime_error("build_topology: generated topology has unreachable pairs");
  t.paths = std::move(ps.paths);
  t.finalize();
  std::string why;
  if (!t.validate(&why)) throw std::runtime_error("build_topology: invalid topology: " + why);
  return t;
}

}  // namespace ascetic
