#include "netgnn/dataset.hpp"

#include "netgnn/error.hpp"

namespace netgnn {

using nlohmann::json;

json topology_to_json(const Topology& topology) {
  json links = json::array();
  for (const Link& l : topology.links()) {
    links.push_back({{"id", l.id}, {"src", l.src}, {"dst", l.dst}, {"capacity", l.capacity}});
  }
  return {{"nodes", topology.node_count()}, {"links", std::move(links)}};
}

Topology topology_from_json(const json& j) {
  std::vector<Link> links;
  for (const json& l : j.at("links")) {
    links.push_back(Link{l.at("id").get<int>(), l.at("src").get<int>(), l.at("dst").get<int>(),
                         l.at("capacity").get<double>()});
  }
  return Topology(j.at("nodes").get<int>(), std::move(links));
}

json routing_to_json(const RoutingScheme& routing) {
  json paths = json::array();
  for (const Path& p : routing.paths()) {
    paths.push_back({{"src", p.src}, {"dst", p.dst}, {"links", p.links}});
  }
  return paths;
}

RoutingScheme routing_from_json(const json& j, int node_count) {
  std::vector<Path> paths;
  for (const json& p : j) {
    paths.push_back(Path{p.at("src").get<int>(), p.at("dst").get<int>(),
                         p.at("links").get<std::vector<int>>()});
  }
  return RoutingScheme(node_count, std::move(paths));
}

json sample_to_json(const Sample& sample) {
  std::vector<double> delay, jitter;
  std::vector<std::uint64_t> dropped;
  for (const PairStats& s : sample.labels.pairs) {
    delay.push_back(s.mean_delay);
    jitter.push_back(s.jitter);
    dropped.push_back(s.dropped);
  }
  json j;
  j["topology"] = topology_to_json(sample.topology);
  j["routing"] = routing_to_json(sample.routing);
  j["tm"] = sample.tm.demand();
  j["labels"] = {{"delay", delay}, {"jitter", jitter}, {"dropped", dropped}};
  j["seed"] = sample.seed;
  j["sim_digest"] = sample.sim_digest;
  return j;
}

Sample sample_from_json(const json& j) {
  try {
    Sample s;
    s.topology = topology_from_json(j.at("topology"));
    const int n = s.topology.node_count();
    s.routing = routing_from_json(j.at("routing"), n);
    s.routing.validate(s.topology);
    s.tm = TrafficMatrix(n, j.at("tm").get<std::vector<double>>());
    const json& labels = j.at("labels");
    auto delay = labels.at("delay").get<std::vector<double>>();
    auto jitter = labels.at("jitter").get<std::vector<double>>();
    auto dropped = labels.at("dropped").get<std::vector<std::uint64_t>>();
    const auto np = static_cast<std::size_t>(pair_count(n));
    if (delay.size() != np || jitter.size() != np || dropped.size() != np) {
      throw DataError("label arrays must hold N(N-1) entries");
    }
    s.labels.pairs.resize(np);
    for (std::size_t i = 0; i < np; ++i) {
      s.labels.pairs[i].mean_delay = delay[i];
      s.labels.pairs[i].jitter = jitter[i];
      s.labels.pairs[i].dropped = dropped[i];
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    s.sim_digest = j.at("sim_digest").get<std::string>();
    parse_sim_digest(s.sim_digest);
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset schema mismatch: ") + e.what());
  }
}

std::vector<Sample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open dataset '" + path.string() + "'");
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path path, bool binary)
    : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(tmp_, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out_) throw ConfigError("cannot write '" + tmp_.string() + "'");
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void AtomicFileWriter::commit() {
  out_.flush();
  if (!out_) throw ConfigError("write failed for '" + tmp_.string() + "'");
  out_.close();
  std::filesystem::rename(tmp_, path_);
  committed_ = true;
}

void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  AtomicFileWriter w(path);
  for (const Sample& s : samples) w.stream() << sample_to_json(s).dump() << '\n';
  w.commit();
}

}  // namespace netgnn
