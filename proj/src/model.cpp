#include "netgnn/model.hpp"

#include <cmath>

#include "netgnn/error.hpp"

namespace netgnn {

void ModelConfig::validate() const {
  if (dim_hp < 1 || dim_hl < 1) throw ConfigError("hidden state sizes must be >= 1");
  if (iterations < 0) throw ConfigError("iteration count must be >= 0");
  if (readout_width < 1) throw ConfigError("readout width must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must be in [0,1)");
  if (!(feature_scale > 0.0)) throw ConfigError("feature scale must be positive");
}

InstanceEncoding::InstanceEncoding(int n_paths, int n_links, std::vector<double> path_features,
                                   std::vector<Incidence> incidence)
    : n_paths_(n_paths), n_links_(n_links), features_(std::move(path_features)),
      incidence_(std::move(incidence)) {
  if (n_paths_ < 0 || n_links_ < 0) throw DataError("negative path or link count");
  if (features_.size() != static_cast<std::size_t>(n_paths_)) {
    throw DataError("one feature per path required");
  }
  std::sort(incidence_.begin(), incidence_.end());

  std::vector<int> length(static_cast<std::size_t>(n_paths_), 0);
  for (const Incidence& inc : incidence_) {
    if (inc.path < 0 || inc.path >= n_paths_) throw DataError("incidence path id out of range");
    if (inc.link < 0 || inc.link >= n_links_) throw DataError("incidence link id out of range");
    int& len = length[static_cast<std::size_t>(inc.path)];
    if (inc.position != len) throw DataError("path positions must be 0..len-1 without gaps");
    ++len;
  }
  int max_len = 0;
  for (int len : length) {
    if (len == 0) throw DataError("every path must reference at least one link");
    max_len = std::max(max_len, len);
  }

  step_paths_.assign(static_cast<std::size_t>(max_len), {});
  step_links_.assign(static_cast<std::size_t>(max_len), {});
  std::vector<int> rank_in_step(incidence_.size());
  // Incidences are sorted by path, so each step list fills in ascending path id.
  for (std::size_t i = 0; i < incidence_.size(); ++i) {
    const Incidence& inc = incidence_[i];
    auto k = static_cast<std::size_t>(inc.position);
    rank_in_step[i] = static_cast<int>(step_paths_[k].size());
    step_paths_[k].push_back(inc.path);
    step_links_[k].push_back(inc.link);
  }
  std::vector<int> step_offset(static_cast<std::size_t>(max_len) + 1, 0);
  for (int k = 0; k < max_len; ++k) {
    step_offset[static_cast<std::size_t>(k) + 1] =
        step_offset[static_cast<std::size_t>(k)] + static_cast<int>(step_paths_[static_cast<std::size_t>(k)].size());
  }
  message_rows_.resize(incidence_.size());
  incidence_links_.resize(incidence_.size());
  for (std::size_t i = 0; i < incidence_.size(); ++i) {
    message_rows_[i] = step_offset[static_cast<std::size_t>(incidence_[i].position)] + rank_in_step[i];
    incidence_links_[i] = incidence_[i].link;
  }
}

InstanceEncoding InstanceEncoding::from_network(const Topology& topology, const RoutingScheme& routing,
                                                const TrafficMatrix& tm, double feature_scale) {
  if (!(feature_scale > 0.0)) throw ConfigError("feature scale must be positive");
  if (tm.size() != topology.node_count() || routing.node_count() != topology.node_count()) {
    throw DataError("topology, routing and traffic matrix sizes differ");
  }
  std::vector<double> features;
  std::vector<Incidence> incidence;
  for (int p = 0; p < routing.path_count(); ++p) {
    const Path& path = routing.paths()[static_cast<std::size_t>(p)];
    features.push_back(tm.at(path.src, path.dst) / feature_scale);
    for (std::size_t k = 0; k < path.links.size(); ++k) {
      incidence.push_back(Incidence{p, static_cast<int>(k), path.links[k]});
    }
  }
  return InstanceEncoding(routing.path_count(), topology.link_count(), std::move(features),
                          std::move(incidence));
}

InstanceEncoding InstanceEncoding::merge(std::span<const InstanceEncoding* const> parts) {
  int paths = 0, links = 0;
  std::vector<double> features;
  std::vector<Incidence> incidence;
  for (const InstanceEncoding* part : parts) {
    features.insert(features.end(), part->features_.begin(), part->features_.end());
    for (const Incidence& inc : part->incidence_) {
      incidence.push_back(Incidence{inc.path + paths, inc.position, inc.link + links});
    }
    paths += part->n_paths_;
    links += part->n_links_;
  }
  return InstanceEncoding(paths, links, std::move(features), std::move(incidence));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

struct Trunk {
  ad::Tape<float> tape;
  std::vector<ad::Var<float>> bound;
  ad::Var<float> paths;
};

void run_trunk(Trunk& trunk, const ad::ParamStore<float>& params, const ModelConfig& config,
               const InstanceEncoding& enc) {
  for (const auto& p : params) trunk.bound.push_back(trunk.tape.constant(p.value));
  auto vars = model_vars(params, trunk.bound);
  auto init = init_states<float>(enc, config);
  auto [hp, hl] = message_passing(trunk.tape.constant(std::move(init.paths)),
                                  trunk.tape.constant(std::move(init.links)), enc, vars,
                                  config.iterations);
  trunk.paths = hp;
}

}  // namespace

std::vector<double> predict(const ad::ParamStore<float>& params, const ModelConfig& config,
                            const InstanceEncoding& enc) {
  Trunk trunk;
  run_trunk(trunk, params, config, enc);
  auto vars = model_vars(params, trunk.bound);
  auto y = readout<float>(trunk.paths, vars, nullptr, 0.0f);
  return std::vector<double>(y.value().values().begin(), y.value().values().end());
}

PredictiveDistribution predict_mc(const ad::ParamStore<float>& params, const ModelConfig& config,
                                  const InstanceEncoding& enc, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ConfigError("predict_mc needs n_samples >= 1");
  Trunk trunk;
  run_trunk(trunk, params, config, enc);
  auto vars = model_vars(params, trunk.bound);
  Rng rng(seed);
  const auto n_p = static_cast<std::size_t>(enc.n_paths());
  const auto width = static_cast<std::size_t>(config.readout_width);
  const auto rate = static_cast<float>(config.dropout);

  PredictiveDistribution out;
  out.samples.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    auto masks = sample_readout_masks<float>(n_p, width, config.dropout, rng);
    auto y = readout<float>(trunk.paths, vars, &masks, rate);
    out.samples.emplace_back(y.value().values().begin(), y.value().values().end());
  }
  std::vector<double> column(static_cast<std::size_t>(n_samples));
  for (std::size_t p = 0; p < n_p; ++p) {
    for (std::size_t s = 0; s < column.size(); ++s) column[s] = out.samples[s][p];
    out.median.push_back(quantile(column, 0.5));
    out.lower.push_back(quantile(column, 0.025));
    out.upper.push_back(quantile(column, 0.975));
  }
  return out;
}

}  // namespace netgnn
