#include "netgnn/netsim.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <sstream>

#include "netgnn/error.hpp"
#include "netgnn/parallel.hpp"

namespace netgnn {

void SimConfig::validate() const {
  if (!(duration > warmup) || !(warmup >= 0.0)) throw ConfigError("need duration > warmup >= 0");
  if (buffer_packets < 1) throw ConfigError("buffer_packets must be >= 1");
  if (!(mean_packet_size > 0.0)) throw ConfigError("mean packet size must be positive");
  if (!(propagation_delay >= 0.0)) throw ConfigError("propagation delay must be >= 0");
}

QueueNetwork::QueueNetwork(const Topology& topology, const RoutingScheme& routing,
                           const SimConfig& config)
    : topology_(topology), routing_(routing), config_(config) {
  config_.validate();
  if (routing.node_count() != topology.node_count()) {
    throw DataError("routing does not match topology");
  }
  routing.validate(topology);
  const auto pairs = static_cast<std::size_t>(routing.path_count());
  source_rate_.assign(pairs, 0.0);
  acc_.assign(pairs, {});
  queues_.resize(static_cast<std::size_t>(topology.link_count()));
}

void QueueNetwork::add_poisson_source(int pair, double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DataError("source rate must be finite and >= 0");
  source_rate_.at(static_cast<std::size_t>(pair)) = rate;
}

void QueueNetwork::inject(double time, int pair, double size) {
  if (pair < 0 || pair >= routing_.path_count()) throw DataError("inject: pair out of range");
  injections_.emplace_back(time, size);
  injection_pair_.push_back(pair);
}

void QueueNetwork::schedule(double time, EventKind kind, int index) {
  events_.push(Event{time, seq_++, kind, index});
}

int QueueNetwork::new_packet(double created, double size, int pair, bool measured) {
  Packet p{created, size, 0.0, pair, 0, measured};
  if (!free_packets_.empty()) {
    int id = free_packets_.back();
    free_packets_.pop_back();
    packets_[static_cast<std::size_t>(id)] = p;
    return id;
  }
  packets_.push_back(p);
  return static_cast<int>(packets_.size() - 1);
}

double QueueNetwork::draw_size() {
  if (config_.size_law == PacketSizeLaw::fixed) return config_.mean_packet_size;
  std::exponential_distribution<double> size(1.0 / config_.mean_packet_size);
  return size(rng_);
}

void QueueNetwork::enqueue(double now, int packet) {
  Packet& p = packets_[static_cast<std::size_t>(packet)];
  const Path& path = routing_.paths()[static_cast<std::size_t>(p.pair)];
  const int link = path.links[static_cast<std::size_t>(p.hop)];
  auto& q = queues_[static_cast<std::size_t>(link)];
  if (q.size() >= static_cast<std::size_t>(config_.buffer_packets)) {
    if (p.measured) ++acc_[static_cast<std::size_t>(p.pair)].dropped;
    free_packets_.push_back(packet);
    return;
  }
  q.push(packet);
  if (q.size() == 1) {
    schedule(now + p.size / topology_.link(link).capacity, EventKind::depart, link);
  }
}

void QueueNetwork::on_depart(double now, int link) {
  auto& q = queues_[static_cast<std::size_t>(link)];
  const int packet = q.front();
  q.pop();
  if (!q.empty()) {
    const Packet& head = packets_[static_cast<std::size_t>(q.front())];
    schedule(now + head.size / topology_.link(link).capacity, EventKind::depart, link);
  }
  Packet& p = packets_[static_cast<std::size_t>(packet)];
  p.zero_load += p.size / topology_.link(link).capacity + config_.propagation_delay;
  ++p.hop;
  if (config_.propagation_delay > 0.0) {
    schedule(now + config_.propagation_delay, EventKind::arrive, packet);
  } else {
    on_arrive(now, packet);
  }
}

void QueueNetwork::on_arrive(double now, int packet) {
  Packet& p = packets_[static_cast<std::size_t>(packet)];
  const Path& path = routing_.paths()[static_cast<std::size_t>(p.pair)];
  if (p.hop < static_cast<int>(path.links.size())) {
    enqueue(now, packet);
    return;
  }
  if (p.measured) {
    Accumulator& a = acc_[static_cast<std::size_t>(p.pair)];
    const double delay = now - p.created;
    ++a.delivered;
    const double delta = delay - a.mean;
    a.mean += delta / static_cast<double>(a.delivered);
    a.m2 += delta * (delay - a.mean);
    a.zero_load_sum += p.zero_load;
  }
  free_packets_.push_back(packet);
}

void QueueNetwork::run(std::uint64_t seed) {
  rng_.seed(seed);
  for (std::size_t i = 0; i < source_rate_.size(); ++i) {
    if (source_rate_[i] > 0.0) {
      std::exponential_distribution<double> gap(source_rate_[i]);
      schedule(gap(rng_), EventKind::source, static_cast<int>(i));
    }
  }
  for (std::size_t i = 0; i < injections_.size(); ++i) {
    schedule(injections_[i].first, EventKind::inject, static_cast<int>(i));
  }
  while (!events_.empty()) {
    const Event e = events_.top();
    events_.pop();
    switch (e.kind) {
      case EventKind::source: {
        if (e.time >= config_.duration) break;
        const auto pair = static_cast<std::size_t>(e.index);
        const bool measured = e.time >= config_.warmup;
        if (measured) ++acc_[pair].generated;
        enqueue(e.time, new_packet(e.time, draw_size(), e.index, measured));
        std::exponential_distribution<double> gap(source_rate_[pair]);
        schedule(e.time + gap(rng_), EventKind::source, e.index);
        break;
      }
      case EventKind::inject: {
        const auto slot = static_cast<std::size_t>(e.index);
        ++acc_[static_cast<std::size_t>(injection_pair_[slot])].generated;
        enqueue(e.time, new_packet(e.time, injections_[slot].second, injection_pair_[slot], true));
        break;
      }
      case EventKind::depart:
        on_depart(e.time, e.index);
        break;
      case EventKind::arrive:
        on_arrive(e.time, e.index);
        break;
    }
  }
}

FlowStats QueueNetwork::stats() const {
  FlowStats out;
  out.pairs.reserve(acc_.size());
  for (const Accumulator& a : acc_) {
    PairStats s;
    s.delivered = a.delivered;
    s.dropped = a.dropped;
    s.generated = a.generated;
    if (a.delivered > 0) {
      const auto n = static_cast<double>(a.delivered);
      s.mean_delay = a.mean;
      s.jitter = a.m2 / n;
      s.mean_zero_load_delay = a.zero_load_sum / n;
    }
    out.pairs.push_back(s);
  }
  return out;
}

FlowStats simulate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm,
                   const SimConfig& config, std::uint64_t seed) {
  if (tm.size() != topology.node_count()) throw DataError("traffic matrix dimension mismatch");
  QueueNetwork net(topology, routing, config);
  for (int i = 0; i < routing.path_count(); ++i) {
    auto [s, d] = pair_at(i, topology.node_count());
    net.add_poisson_source(i, tm.at(s, d));
  }
  net.run(seed);
  return net.stats();
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string sim_digest(const SimConfig& config, double ti, double capacity) {
  std::ostringstream os;
  os << "ti=" << shortest(ti) << ";duration=" << shortest(config.duration)
     << ";warmup=" << shortest(config.warmup) << ";buffer=" << config.buffer_packets
     << ";size=" << (config.size_law == PacketSizeLaw::exponential ? "exponential" : "fixed")
     << ";mean_size=" << shortest(config.mean_packet_size) << ";capacity=" << shortest(capacity)
     << ";propagation=" << shortest(config.propagation_delay);
  return os.str();
}

std::map<std::string, std::string> parse_sim_digest(const std::string& digest) {
  std::map<std::string, std::string> out;
  std::istringstream is(digest);
  std::string item;
  while (std::getline(is, item, ';')) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("malformed sim_digest '" + digest + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::size_t DatasetSpec::sample_count() const {
  std::size_t routings_total = 0;
  for (const auto& r : routings) routings_total += r.size();
  return routings_total * ti_list.size() * static_cast<std::size_t>(std::max(samples_per_cell, 0));
}

std::size_t generate_dataset(const DatasetSpec& spec, const std::function<void(Sample&&)>& sink) {
  if (spec.topologies.empty() || spec.ti_list.empty() || spec.samples_per_cell < 1) {
    throw ConfigError("dataset generation needs topologies, TI values and samples_per_cell >= 1");
  }
  if (spec.routings.size() != spec.topologies.size()) {
    throw ConfigError("one routing list per topology required");
  }
  spec.config.validate();

  struct Job {
    std::size_t topology;
    std::size_t routing;
    double ti;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < spec.topologies.size(); ++t) {
    if (spec.routings[t].empty()) throw ConfigError("empty routing list");
    for (std::size_t r = 0; r < spec.routings[t].size(); ++r) {
      for (double ti : spec.ti_list) {
        for (int k = 0; k < spec.samples_per_cell; ++k) jobs.push_back({t, r, ti});
      }
    }
  }

  const std::size_t chunk = std::max<std::size_t>(1, 16 * thread_budget());
  std::size_t emitted = 0;
  for (std::size_t begin = 0; begin < jobs.size(); begin += chunk) {
    const std::size_t end = std::min(jobs.size(), begin + chunk);
    std::vector<std::unique_ptr<Sample>> results(end - begin);
    parallel_for(end - begin, [&](std::size_t j) {
      const std::size_t index = begin + j;
      const Job& job = jobs[index];
      const Topology& topo = spec.topologies[job.topology];
      const std::uint64_t seed = derive_seed(spec.seed, index);
      try {
        auto sample = std::make_unique<Sample>();
        sample->topology = topo;
        sample->routing = spec.routings[job.topology][job.routing];
        sample->tm = generate_tm(topo.node_count(), job.ti, derive_seed(seed, 0));
        sample->labels = simulate(topo, sample->routing, sample->tm, spec.config, derive_seed(seed, 1));
        sample->seed = seed;
        sample->sim_digest = sim_digest(spec.config, job.ti, topo.capacity());
        results[j] = std::move(sample);
      } catch (const std::exception& e) {
        std::cerr << "sample " << index << " (seed " << seed << ") failed: " << e.what() << '\n';
      }
    });
    for (auto& r : results) {
      if (r) {
        sink(std::move(*r));
        ++emitted;
      }
    }
  }
  return emitted;
}

}  // namespace netgnn
