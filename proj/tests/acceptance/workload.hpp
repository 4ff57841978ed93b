#pragma once

// Fixed desk-scale workload shared by the acceptance suite: datasets and
// checkpoints are cached in a work directory and rebuilt only when their
// recorded recipe changes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "netgnn/dataset.hpp"
#include "netgnn/graph.hpp"
#include "netgnn/netsim.hpp"

namespace acceptance {

inline constexpr double kCapacity = 6.0;
inline const std::vector<double> kTiList{8, 10, 12, 14, 16};
inline constexpr int kTrainRoutings = 50;
inline constexpr int kHeldOutRoutings = 10;
inline constexpr int kTrainSamplesPerCell = 40;  // 50 x 5 x 40 = 10,000
inline constexpr int kTestSamplesPerCell = 10;   // 10 x 5 x 10 = 500
inline constexpr std::uint64_t kRoutingSeed8 = 1001;
inline constexpr std::uint64_t kRoutingSeed10 = 1003;
inline constexpr std::uint64_t kTrainDataSeed = 2001;
inline constexpr std::uint64_t kTestDataSeed8 = 2002;
inline constexpr std::uint64_t kTestDataSeed10 = 2003;

inline std::filesystem::path work_dir() {
  if (const char* env = std::getenv("NETGNN_ACCEPTANCE_DIR")) return env;
  return std::filesystem::current_path() / "acceptance_work";
}

inline bool recipe_matches(const std::filesystem::path& artifact, const std::string& recipe) {
  std::ifstream in(artifact.string() + ".recipe");
  std::stringstream ss;
  ss << in.rdbuf();
  return in && ss.str() == recipe && std::filesystem::exists(artifact);
}

inline void record_recipe(const std::filesystem::path& artifact, const std::string& recipe) {
  std::ofstream(artifact.string() + ".recipe") << recipe;
}

// 60 distinct random-weight routings on the 8-node testbed: the first 50
// train, the last 10 are held out.
inline std::vector<netgnn::RoutingScheme> testbed8_routings() {
  return netgnn::random_routing_variants(netgnn::topologies::testbed8(kCapacity),
                                         kTrainRoutings + kHeldOutRoutings, kRoutingSeed8);
}

struct DatasetRecipe {
  std::string name;
  netgnn::Topology topology;
  std::vector<netgnn::RoutingScheme> routings;
  int samples_per_cell;
  std::uint64_t seed;

  std::string describe() const {
    std::ostringstream os;
    os << name << " nodes=" << topology.node_count() << " links=" << topology.link_count()
       << " capacity=" << kCapacity << " routings=" << routings.size()
       << " first_routing=" << std::hash<std::string>{}(netgnn::routing_key(routings.front()))
       << " spc=" << samples_per_cell << " seed=" << seed << " ti=";
    for (double ti : kTiList) os << ti << ',';
    os << " sim=" << netgnn::sim_digest(netgnn::SimConfig{}, 0, kCapacity) << '\n';
    return os.str();
  }
};

inline std::vector<DatasetRecipe> dataset_recipes() {
  auto r8 = testbed8_routings();
  std::vector<netgnn::RoutingScheme> train(r8.begin(), r8.begin() + kTrainRoutings);
  std::vector<netgnn::RoutingScheme> held(r8.begin() + kTrainRoutings, r8.end());
  auto t10 = netgnn::topologies::testbed10(kCapacity);
  return {
      {"train8", netgnn::topologies::testbed8(kCapacity), train, kTrainSamplesPerCell, kTrainDataSeed},
      {"test8_unseen_routing", netgnn::topologies::testbed8(kCapacity), held, kTestSamplesPerCell,
       kTestDataSeed8},
      {"test10_unseen_topology", t10,
       netgnn::random_routing_variants(t10, kHeldOutRoutings, kRoutingSeed10), kTestSamplesPerCell,
       kTestDataSeed10},
  };
}

// Generates (or reuses) the dataset for `recipe` and returns its path.
inline std::filesystem::path ensure_dataset(const DatasetRecipe& recipe) {
  auto path = work_dir() / (recipe.name + ".jsonl");
  const std::string desc = recipe.describe();
  if (recipe_matches(path, desc)) return path;
  std::cerr << "[workload] generating " << path << " ...\n";
  netgnn::DatasetSpec spec;
  spec.topologies = {recipe.topology};
  spec.routings = {recipe.routings};
  spec.ti_list = kTiList;
  spec.samples_per_cell = recipe.samples_per_cell;
  spec.seed = recipe.seed;
  netgnn::AtomicFileWriter out(path);
  std::size_t n = 0;
  netgnn::generate_dataset(spec, [&](netgnn::Sample&& s) {
    out.stream() << netgnn::sample_to_json(s).dump() << '\n';
    if (++n % 500 == 0) std::cerr << "[workload]   " << recipe.name << ": " << n << " samples\n";
  });
  out.commit();
  record_recipe(path, desc);
  return path;
}

}  // namespace acceptance
