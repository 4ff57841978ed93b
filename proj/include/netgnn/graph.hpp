#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace netgnn {

struct Link {
  int id = 0;
  int src = 0;
  int dst = 0;
  double capacity = 1.0;

  bool operator==(const Link&) const = default;
};

using Edge = std::pair<int, int>;

// Directed graph with one shared link capacity. Links are indexed 0..n_l-1
// in construction order; at most one link per ordered node pair.
class Topology {
 public:
  Topology() = default;
  Topology(int node_count, std::vector<Link> links);

  int node_count() const { return node_count_; }
  int link_count() const { return static_cast<int>(links_.size()); }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int id) const { return links_.at(static_cast<std::size_t>(id)); }
  double capacity() const { return links_.empty() ? 1.0 : links_.front().capacity; }

  // Outgoing link ids of `node`, ordered by destination node.
  const std::vector<int>& out_links(int node) const {
    return out_.at(static_cast<std::size_t>(node));
  }
  std::optional<int> find_link(int src, int dst) const;

  // Every node reaches every other node along directed links.
  bool is_connected() const;
  void require_connected() const;

  bool operator==(const Topology& o) const {
    return node_count_ == o.node_count_ && links_ == o.links_;
  }

 private:
  int node_count_ = 0;
  std::vector<Link> links_;
  std::vector<std::vector<int>> out_;
};

struct Path {
  int src = 0;
  int dst = 0;
  std::vector<int> links;

  bool operator==(const Path&) const = default;
};

// Number of ordered pairs (s,d), s != d.
constexpr int pair_count(int n) { return n * (n - 1); }

// Position of (s,d) in lexicographic pair order, skipping the diagonal.
constexpr int pair_index(int s, int d, int n) { return s * (n - 1) + (d < s ? d : d - 1); }

// Inverse of pair_index.
Edge pair_at(int index, int n);

// Exactly one path per ordered pair, stored in pair_index order.
class RoutingScheme {
 public:
  RoutingScheme() = default;
  RoutingScheme(int node_count, std::vector<Path> paths);

  int node_count() const { return node_count_; }
  int path_count() const { return static_cast<int>(paths_.size()); }
  const std::vector<Path>& paths() const { return paths_; }
  const Path& path(int s, int d) const {
    return paths_.at(static_cast<std::size_t>(pair_index(s, d, node_count_)));
  }

  // Throws GraphError if any path is not a loop-free chain from src to dst
  // over links of `topology`.
  void validate(const Topology& topology) const;

  bool operator==(const RoutingScheme&) const = default;

 private:
  int node_count_ = 0;
  std::vector<Path> paths_;
};

// Builds a topology from directed edges. Throws GraphError on a duplicate
// ordered pair, a dangling endpoint, a self-loop or non-positive capacity.
Topology build_topology(int node_count, std::span<const Edge> edges, double capacity = 1.0);

// Expands undirected edges to two directed links each (u->v then v->u).
std::vector<Edge> bidirectional(std::span<const Edge> undirected);

// Minimum-weight path for every ordered pair. Ties are broken towards the
// lexicographically smallest node sequence, which also makes the scheme
// destination-based (every sub-path is the routed path of its own pair).
RoutingScheme shortest_path_routing(const Topology& topology, std::span<const double> link_weights);
RoutingScheme shortest_path_routing(const Topology& topology);  // hop count

// `count` distinct schemes, each a shortest-path routing under i.i.d.
// U[1,10] link weights. Throws GraphError when fewer distinct schemes are
// found within the retry bound.
std::vector<RoutingScheme> random_routing_variants(const Topology& topology, int count,
                                                   std::uint64_t seed);

// Best-effort variant: hop-count routing first, then up to `count - 1`
// distinct random variants; never throws for lack of diversity.
std::vector<RoutingScheme> candidate_routings(const Topology& topology, int count,
                                              std::uint64_t seed);

struct FailureOutcome {
  Topology topology;                // survivors, re-indexed 0..k-1
  RoutingScheme routing;            // hop-count shortest paths on survivors
  std::vector<int> original_link;   // survivor id -> id in the input topology
};

// Removes the given links and reroutes. Throws GraphError when the survivors
// are disconnected or an id is out of range.
FailureOutcome apply_link_failures(const Topology& topology, std::span<const int> failed_link_ids);

// Samples `n_edges` node pairs that are linked in both directions and fails
// both directions of each, resampling until the survivors stay connected.
std::vector<int> sample_edge_failures(const Topology& topology, int n_edges, std::uint64_t seed);

// Adds u->v and v->u at the common capacity.
Topology add_bidirectional_link(const Topology& topology, int u, int v);

// Canonical text form of a scheme's link sequences, used for de-duplication.
std::string routing_key(const RoutingScheme& routing);

namespace topologies {
// 14-node, 21-edge NSFNET, each edge as two directed links.
Topology nsfnet(double capacity = 1.0);
// 8-node / 10-node desk-scale testbeds.
Topology testbed8(double capacity = 1.0);
Topology testbed10(double capacity = 1.0);
Topology ring(int n, double capacity = 1.0);
Topology line(int n, double capacity = 1.0);
Topology star(int leaves, double capacity = 1.0);
// Random connected graph: a random spanning tree plus extra edges until
// the mean degree reaches `mean_degree`.
Topology random_connected(int n, double mean_degree, std::uint64_t seed, double capacity = 1.0);
// Name lookup for the CLI: nsf, testbed8, testbed10, ring<N>, line<N>, star<N>.
Topology by_name(const std::string& name, double capacity);
}  // namespace topologies

}  // namespace netgnn
