#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "netgnn/netsim.hpp"

namespace netgnn {

nlohmann::json topology_to_json(const Topology& topology);
Topology topology_from_json(const nlohmann::json& j);
nlohmann::json routing_to_json(const RoutingScheme& routing);
RoutingScheme routing_from_json(const nlohmann::json& j, int node_count);

// One dataset line: {topology, routing, tm, labels:{delay,jitter,dropped},
// seed, sim_digest}. Pairs appear in lexicographic (src,dst) order.
nlohmann::json sample_to_json(const Sample& sample);
// Throws DataError on any schema violation.
Sample sample_from_json(const nlohmann::json& j);

std::vector<Sample> read_dataset(const std::filesystem::path& path);

// Writes to "<path>.tmp" and renames onto `path` on commit(), so readers
// never observe a partial file.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path path, bool binary = false);
  ~AtomicFileWriter();
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_dataset(const std::filesystem::path& path, const std::vector<Sample>& samples);

}  // namespace netgnn
