#include "netgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_set>

#include "netgnn/error.hpp"
#include "netgnn/random.hpp"

namespace netgnn {

Topology::Topology(int node_count, std::vector<Link> links)
    : node_count_(node_count), links_(std::move(links)) {
  if (node_count_ < 1) throw GraphError("topology needs at least one node");
  out_.assign(static_cast<std::size_t>(node_count_), {});
  std::set<Edge> seen;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (l.id != static_cast<int>(i)) throw GraphError("link ids must be 0..n_l-1 in order");
    if (l.src < 0 || l.src >= node_count_ || l.dst < 0 || l.dst >= node_count_) {
      throw GraphError("link " + std::to_string(i) + " has a dangling endpoint");
    }
    if (l.src == l.dst) throw GraphError("self-loop on node " + std::to_string(l.src));
    if (!(l.capacity > 0.0)) throw GraphError("link capacity must be positive");
    if (l.capacity != links_.front().capacity) {
      throw GraphError("all links must share one capacity");
    }
    if (!seen.insert({l.src, l.dst}).second) {
      throw GraphError("duplicate link " + std::to_string(l.src) + "->" + std::to_string(l.dst));
    }
    out_[static_cast<std::size_t>(l.src)].push_back(l.id);
  }
  for (auto& o : out_) {
    std::sort(o.begin(), o.end(), [this](int a, int b) {
      return links_[static_cast<std::size_t>(a)].dst < links_[static_cast<std::size_t>(b)].dst;
    });
  }
}

std::optional<int> Topology::find_link(int src, int dst) const {
  if (src < 0 || src >= node_count_) return std::nullopt;
  for (int id : out_links(src)) {
    if (link(id).dst == dst) return id;
  }
  return std::nullopt;
}

namespace {

std::vector<bool> reachable(const Topology& t, int root, bool reverse) {
  const auto n = static_cast<std::size_t>(t.node_count());
  std::vector<std::vector<int>> adj(n);
  for (const Link& l : t.links()) {
    if (reverse) {
      adj[static_cast<std::size_t>(l.dst)].push_back(l.src);
    } else {
      adj[static_cast<std::size_t>(l.src)].push_back(l.dst);
    }
  }
  std::vector<bool> seen(n, false);
  std::vector<int> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

bool Topology::is_connected() const {
  auto fwd = reachable(*this, 0, false);
  auto bwd = reachable(*this, 0, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

void Topology::require_connected() const {
  if (!is_connected()) throw GraphError("topology is not strongly connected");
}

Edge pair_at(int index, int n) {
  int s = index / (n - 1);
  int r = index % (n - 1);
  return {s, r < s ? r : r + 1};
}

RoutingScheme::RoutingScheme(int node_count, std::vector<Path> paths)
    : node_count_(node_count), paths_(std::move(paths)) {
  if (static_cast<int>(paths_.size()) != pair_count(node_count_)) {
    throw GraphError("routing must hold exactly N(N-1) paths");
  }
  for (int i = 0; i < static_cast<int>(paths_.size()); ++i) {
    auto [s, d] = pair_at(i, node_count_);
    const Path& p = paths_[static_cast<std::size_t>(i)];
    if (p.src != s || p.dst != d) {
      throw GraphError("paths must be stored in lexicographic (src,dst) order");
    }
  }
}

void RoutingScheme::validate(const Topology& topology) const {
  if (node_count_ != topology.node_count()) throw GraphError("routing/topology node count mismatch");
  for (const Path& p : paths_) {
    const std::string where = " in path " + std::to_string(p.src) + "->" + std::to_string(p.dst);
    if (p.links.empty()) throw GraphError("empty path" + where);
    std::unordered_set<int> used;
    std::unordered_set<int> visited{p.src};
    int at = p.src;
    for (int id : p.links) {
      if (id < 0 || id >= topology.link_count()) throw GraphError("unknown link id" + where);
      const Link& l = topology.link(id);
      if (l.src != at) throw GraphError("non-adjacent links" + where);
      if (!used.insert(id).second) throw GraphError("repeated link" + where);
      if (!visited.insert(l.dst).second) throw GraphError("node revisited" + where);
      at = l.dst;
    }
    if (at != p.dst) throw GraphError("path does not end at its destination" + where);
  }
}

Topology build_topology(int node_count, std::span<const Edge> edges, double capacity) {
  std::vector<Link> links;
  links.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    links.push_back(Link{static_cast<int>(i), edges[i].first, edges[i].second, capacity});
  }
  return Topology(node_count, std::move(links));
}

std::vector<Edge> bidirectional(std::span<const Edge> undirected) {
  std::vector<Edge> out;
  out.reserve(undirected.size() * 2);
  for (auto [u, v] : undirected) {
    out.emplace_back(u, v);
    out.emplace_back(v, u);
  }
  return out;
}

RoutingScheme shortest_path_routing(const Topology& topology, std::span<const double> link_weights) {
  const int n = topology.node_count();
  if (static_cast<int>(link_weights.size()) != topology.link_count()) {
    throw GraphError("one weight per link required");
  }
  for (double w : link_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw GraphError("link weights must be positive");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<Path> paths(static_cast<std::size_t>(pair_count(n)));
  std::vector<double> dist(static_cast<std::size_t>(n));
  using Item = std::pair<double, int>;

  std::vector<std::vector<int>> in(static_cast<std::size_t>(n));
  for (const Link& l : topology.links()) in[static_cast<std::size_t>(l.dst)].push_back(l.id);

  for (int d = 0; d < n; ++d) {
    // Reverse Dijkstra: dist[v] = weight of the best v -> d path.
    std::fill(dist.begin(), dist.end(), kInf);
    dist[static_cast<std::size_t>(d)] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, d);
    while (!heap.empty()) {
      auto [du, u] = heap.top();
      heap.pop();
      if (du > dist[static_cast<std::size_t>(u)]) continue;
      for (int id : in[static_cast<std::size_t>(u)]) {
        const Link& l = topology.link(id);
        double cand = du + link_weights[static_cast<std::size_t>(id)];
        if (cand < dist[static_cast<std::size_t>(l.src)]) {
          dist[static_cast<std::size_t>(l.src)] = cand;
          heap.emplace(cand, l.src);
        }
      }
    }

    // Greedy walk over tight links, smallest next node first, yields the
    // lexicographically smallest node sequence among minimum-weight paths.
    for (int s = 0; s < n; ++s) {
      if (s == d) continue;
      if (dist[static_cast<std::size_t>(s)] == kInf) {
        throw GraphError("node " + std::to_string(d) + " unreachable from " + std::to_string(s));
      }
      Path p{s, d, {}};
      int at = s;
      while (at != d) {
        const double here = dist[static_cast<std::size_t>(at)];
        const double tol = 1e-9 * std::max(1.0, here);
        int next_link = -1;
        for (int id : topology.out_links(at)) {  // ascending dst
          const Link& l = topology.link(id);
          double via = link_weights[static_cast<std::size_t>(id)] + dist[static_cast<std::size_t>(l.dst)];
          if (std::abs(via - here) <= tol) {
            next_link = id;
            break;
          }
        }
        if (next_link < 0) throw GraphError("internal: no tight link on shortest path");
        p.links.push_back(next_link);
        at = topology.link(next_link).dst;
      }
      paths[static_cast<std::size_t>(pair_index(s, d, n))] = std::move(p);
    }
  }
  return RoutingScheme(n, std::move(paths));
}

RoutingScheme shortest_path_routing(const Topology& topology) {
  std::vector<double> unit(static_cast<std::size_t>(topology.link_count()), 1.0);
  return shortest_path_routing(topology, unit);
}

std::string routing_key(const RoutingScheme& routing) {
  std::ostringstream os;
  for (const Path& p : routing.paths()) {
    for (int id : p.links) os << id << ',';
    os << ';';
  }
  return os.str();
}

namespace {

RoutingScheme random_weight_routing(const Topology& topology, Rng& rng) {
  std::uniform_real_distribution<double> weight(1.0, 10.0);
  std::vector<double> w(static_cast<std::size_t>(topology.link_count()));
  for (double& x : w) x = weight(rng);
  return shortest_path_routing(topology, w);
}

}  // namespace

std::vector<RoutingScheme> random_routing_variants(const Topology& topology, int count,
                                                   std::uint64_t seed) {
  if (count < 1) throw ConfigError("routing variant count must be >= 1");
  topology.require_connected();
  Rng rng(seed);
  std::vector<RoutingScheme> out;
  std::unordered_set<std::string> keys;
  const int max_attempts = 50 * count + 100;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    RoutingScheme r = random_weight_routing(topology, rng);
    if (keys.insert(routing_key(r)).second) out.push_back(std::move(r));
  }
  if (static_cast<int>(out.size()) < count) {
    throw GraphError("only " + std::to_string(out.size()) + " distinct routing schemes found, " +
                     std::to_string(count) + " requested");
  }
  return out;
}

std::vector<RoutingScheme> candidate_routings(const Topology& topology, int count,
                                              std::uint64_t seed) {
  topology.require_connected();
  std::vector<RoutingScheme> out{shortest_path_routing(topology)};
  std::unordered_set<std::string> keys{routing_key(out.front())};
  Rng rng(seed);
  const int max_attempts = 50 * count + 100;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    RoutingScheme r = random_weight_routing(topology, rng);
    if (keys.insert(routing_key(r)).second) out.push_back(std::move(r));
  }
  return out;
}

FailureOutcome apply_link_failures(const Topology& topology, std::span<const int> failed_link_ids) {
  std::vector<bool> failed(static_cast<std::size_t>(topology.link_count()), false);
  for (int id : failed_link_ids) {
    if (id < 0 || id >= topology.link_count()) throw GraphError("failed link id out of range");
    failed[static_cast<std::size_t>(id)] = true;
  }
  FailureOutcome out;
  std::vector<Edge> edges;
  for (const Link& l : topology.links()) {
    if (failed[static_cast<std::size_t>(l.id)]) continue;
    edges.emplace_back(l.src, l.dst);
    out.original_link.push_back(l.id);
  }
  out.topology = build_topology(topology.node_count(), edges, topology.capacity());
  if (!out.topology.is_connected()) throw GraphError("link failures disconnect the topology");
  out.routing = shortest_path_routing(out.topology);
  return out;
}

std::vector<int> sample_edge_failures(const Topology& topology, int n_edges, std::uint64_t seed) {
  if (n_edges < 0) throw ConfigError("failure count must be non-negative");
  std::vector<Edge> edges;  // u < v, both directions present
  for (const Link& l : topology.links()) {
    if (l.src < l.dst && topology.find_link(l.dst, l.src)) edges.emplace_back(l.src, l.dst);
  }
  if (n_edges > static_cast<int>(edges.size())) {
    throw ConfigError("topology has fewer bidirectional edges than requested failures");
  }
  if (n_edges == 0) return {};
  Rng rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<Edge> pick = edges;
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(static_cast<std::size_t>(n_edges));
    std::vector<int> ids;
    for (auto [u, v] : pick) {
      ids.push_back(*topology.find_link(u, v));
      ids.push_back(*topology.find_link(v, u));
    }
    std::sort(ids.begin(), ids.end());
    std::vector<bool> failed(static_cast<std::size_t>(topology.link_count()), false);
    for (int id : ids) failed[static_cast<std::size_t>(id)] = true;
    std::vector<Edge> rest;
    for (const Link& l : topology.links()) {
      if (!failed[static_cast<std::size_t>(l.id)]) rest.emplace_back(l.src, l.dst);
    }
    if (build_topology(topology.node_count(), rest, topology.capacity()).is_connected()) return ids;
  }
  throw ConfigError("topology too small: no connected survivor set for " + std::to_string(n_edges) +
                    " edge failures");
}

Topology add_bidirectional_link(const Topology& topology, int u, int v) {
  std::vector<Edge> edges;
  for (const Link& l : topology.links()) edges.emplace_back(l.src, l.dst);
  edges.emplace_back(u, v);
  edges.emplace_back(v, u);
  return build_topology(topology.node_count(), edges, topology.capacity());
}

namespace topologies {

namespace {
Topology from_undirected(int n, std::vector<Edge> undirected, double capacity) {
  return build_topology(n, bidirectional(undirected), capacity);
}
}  // namespace

Topology nsfnet(double capacity) {
  return from_undirected(14,
                         {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 7}, {2, 5}, {3, 4},
                          {3, 8}, {4, 5}, {4, 6}, {5, 12}, {5, 13}, {6, 7}, {7, 10},
                          {8, 9}, {8, 11}, {9, 10}, {9, 12}, {10, 11}, {10, 13}, {11, 12}},
                         capacity);
}

Topology testbed8(double capacity) {
  return from_undirected(8,
                         {{0, 1}, {0, 2}, {0, 7}, {1, 2}, {1, 3}, {2, 4}, {2, 6},
                          {3, 4}, {3, 5}, {4, 6}, {5, 6}, {5, 7}, {6, 7}},
                         capacity);
}

Topology testbed10(double capacity) {
  return from_undirected(10,
                         {{0, 1}, {0, 3}, {0, 8}, {0, 9}, {1, 4}, {1, 6}, {1, 8}, {1, 9}, {2, 3},
                          {2, 8}, {3, 5}, {3, 9}, {4, 5}, {4, 8}, {5, 6}, {5, 7}, {5, 9}, {7, 8}},
                         capacity);
}

Topology ring(int n, double capacity) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return from_undirected(n, e, capacity);
}

Topology line(int n, double capacity) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return from_undirected(n, e, capacity);
}

Topology star(int leaves, double capacity) {
  std::vector<Edge> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return from_undirected(leaves + 1, e, capacity);
}

Topology random_connected(int n, double mean_degree, std::uint64_t seed, double capacity) {
  if (n < 2) throw ConfigError("random topology needs at least 2 nodes");
  Rng rng(seed);
  std::set<Edge> edges;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    int a = order[static_cast<std::size_t>(i)];
    int b = order[static_cast<std::size_t>(pick(rng))];
    edges.insert({std::min(a, b), std::max(a, b)});
  }
  const auto target = static_cast<std::size_t>(
      std::min<double>(std::round(mean_degree * n / 2.0), n * (n - 1) / 2.0));
  std::uniform_int_distribution<int> node(0, n - 1);
  while (edges.size() < target) {
    int a = node(rng);
    int b = node(rng);
    if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
  }
  return from_undirected(n, std::vector<Edge>(edges.begin(), edges.end()), capacity);
}

Topology by_name(const std::string& name, double capacity) {
  auto suffix = [&](const std::string& prefix) -> std::optional<int> {
    if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) return std::nullopt;
    try {
      return std::stoi(name.substr(prefix.size()));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  if (name == "nsf" || name == "nsfnet") return nsfnet(capacity);
  if (name == "testbed8") return testbed8(capacity);
  if (name == "testbed10") return testbed10(capacity);
  if (auto k = suffix("ring"); k && *k >= 3) return ring(*k, capacity);
  if (auto k = suffix("line"); k && *k >= 2) return line(*k, capacity);
  if (auto k = suffix("star"); k && *k >= 1) return star(*k, capacity);
  throw ConfigError("unknown topology name '" + name + "'");
}

}  // namespace topologies

}  // namespace netgnn
