#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "netgnn/graph.hpp"
#include "netgnn/random.hpp"
#include "netgnn/traffic.hpp"

namespace netgnn {

enum class PacketSizeLaw { exponential, fixed };

struct SimConfig {
  double duration = 16000.0;  // sources stop generating at this time
  double warmup = 1000.0;     // packets generated earlier are not measured
  int buffer_packets = 32;    // per egress queue, including the one in service
  PacketSizeLaw size_law = PacketSizeLaw::exponential;
  double mean_packet_size = 1.0;
  double propagation_delay = 0.0;  // per link

  void validate() const;
};

struct PairStats {
  double mean_delay = 0.0;
  double jitter = 0.0;  // population variance of per-packet end-to-end delay
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t generated = 0;
  // Mean over delivered packets of their summed transmission and
  // propagation times: the delay those packets would see on an idle network.
  double mean_zero_load_delay = 0.0;
};

// Per ordered pair, in pair_index order.
struct FlowStats {
  std::vector<PairStats> pairs;
};

// Event-driven network of FIFO drop-tail egress queues. Packets follow the
// routed path of their pair; each link transmits at its capacity.
class QueueNetwork {
 public:
  QueueNetwork(const Topology& topology, const RoutingScheme& routing, const SimConfig& config);

  // Poisson source for `pair` generating packets in [0, config.duration).
  void add_poisson_source(int pair, double rate);
  // A single packet entering its first queue at `time`; always measured.
  void inject(double time, int pair, double size);

  // Processes events until every packet is delivered or dropped.
  void run(std::uint64_t seed);

  FlowStats stats() const;

 private:
  enum class EventKind : std::uint8_t { source, inject, depart, arrive };
  struct Event {
    double time;
    std::uint64_t seq;
    EventKind kind;
    int index;
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
  };
  struct Packet {
    double created;
    double size;
    double zero_load;
    int pair;
    int hop;
    bool measured;
  };
  struct Accumulator {
    std::uint64_t delivered = 0, dropped = 0, generated = 0;
    double mean = 0.0, m2 = 0.0, zero_load_sum = 0.0;
  };

  void schedule(double time, EventKind kind, int index);
  int new_packet(double created, double size, int pair, bool measured);
  double draw_size();
  void enqueue(double now, int packet);
  void on_depart(double now, int link);
  void on_arrive(double now, int packet);

  Topology topology_;
  RoutingScheme routing_;
  SimConfig config_;
  std::vector<double> source_rate_;
  std::vector<std::pair<double, double>> injections_;  // (time, size) per inject slot
  std::vector<int> injection_pair_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::vector<Packet> packets_;
  std::vector<int> free_packets_;
  std::vector<std::queue<int>> queues_;
  std::vector<Accumulator> acc_;
  Rng rng_;
};

// Simulates Poisson traffic `tm` over `routing` and returns per-pair labels.
FlowStats simulate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm,
                   const SimConfig& config, std::uint64_t seed);

// Canonical "key=value;..." record of the simulation settings of one sample.
std::string sim_digest(const SimConfig& config, double ti, double capacity);
// Parses a digest back into its fields; throws DataError when malformed.
std::map<std::string, std::string> parse_sim_digest(const std::string& digest);

struct Sample {
  Topology topology;
  RoutingScheme routing;
  TrafficMatrix tm;
  FlowStats labels;
  std::uint64_t seed = 0;
  std::string sim_digest;
};

struct DatasetSpec {
  std::vector<Topology> topologies;
  std::vector<std::vector<RoutingScheme>> routings;  // one list per topology
  std::vector<double> ti_list;
  int samples_per_cell = 1;
  SimConfig config;
  std::uint64_t seed = 0;

  std::size_t sample_count() const;
};

// Cartesian sweep topology x routing x TI x sample with a fresh traffic
// matrix per sample. Sample i uses derive_seed(seed, i) for its matrix and
// simulation. Samples reach `sink` in index order; a sample whose
// simulation throws is skipped and reported on stderr. Returns the number
// of samples emitted.
std::size_t generate_dataset(const DatasetSpec& spec, const std::function<void(Sample&&)>& sink);

}  // namespace netgnn
