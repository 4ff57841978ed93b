#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "netgnn/autodiff/ops.hpp"
#include "netgnn/autodiff/params.hpp"
#include "netgnn/graph.hpp"
#include "netgnn/gru.hpp"
#include "netgnn/random.hpp"
#include "netgnn/traffic.hpp"

namespace netgnn {

struct ModelConfig {
  int dim_hp = 32;         // path state width
  int dim_hl = 16;         // link state width
  int iterations = 8;      // message-passing rounds T
  int readout_width = 8;   // both hidden readout layers
  double dropout = 0.5;    // after each hidden readout layer
  double feature_scale = 1.0;  // path demand is divided by this

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// (path id, position along the path, link id)
struct Incidence {
  int path = 0;
  int position = 0;
  int link = 0;
  auto operator<=>(const Incidence&) const = default;
};

// Model input for one (or a batch of) network instance(s): scaled path
// features plus the path -> link incidence, and the per-position schedule
// used by the vectorised message passing.
class InstanceEncoding {
 public:
  InstanceEncoding() = default;
  // `incidence` may come in any order; it is sorted by (path, position).
  InstanceEncoding(int n_paths, int n_links, std::vector<double> path_features,
                   std::vector<Incidence> incidence);

  // x_p = tm[s][d] / feature_scale for every routed pair, in pair order.
  static InstanceEncoding from_network(const Topology& topology, const RoutingScheme& routing,
                                       const TrafficMatrix& tm, double feature_scale);
  // Disjoint union; path and link ids of part k are offset by the sizes of parts < k.
  static InstanceEncoding merge(std::span<const InstanceEncoding* const> parts);

  int n_paths() const { return n_paths_; }
  int n_links() const { return n_links_; }
  const std::vector<double>& path_features() const { return features_; }
  const std::vector<Incidence>& incidence() const { return incidence_; }
  int max_length() const { return static_cast<int>(step_paths_.size()); }

  // Paths (ascending id) that are still walking at `position`, and the link each is on.
  const std::vector<int>& step_paths(int position) const { return step_paths_[static_cast<std::size_t>(position)]; }
  const std::vector<int>& step_links(int position) const { return step_links_[static_cast<std::size_t>(position)]; }
  // Row of the position-major message stack holding each incidence, in incidence order.
  const std::vector<int>& message_rows() const { return message_rows_; }
  // Link id of each incidence, in incidence order.
  const std::vector<int>& incidence_links() const { return incidence_links_; }

 private:
  int n_paths_ = 0;
  int n_links_ = 0;
  std::vector<double> features_;
  std::vector<Incidence> incidence_;
  std::vector<std::vector<int>> step_paths_;
  std::vector<std::vector<int>> step_links_;
  std::vector<int> message_rows_;
  std::vector<int> incidence_links_;
};

// Parameter names in the store.
inline constexpr const char* kPathRnn = "path_rnn";
inline constexpr const char* kLinkUpdate = "link_update";

template <typename Real>
ad::ParamStore<Real> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ad::ParamStore<Real> store;
  const auto hp = static_cast<std::size_t>(config.dim_hp);
  const auto hl = static_cast<std::size_t>(config.dim_hl);
  const auto w = static_cast<std::size_t>(config.readout_width);
  add_gru_params(store, kPathRnn, hp, hl, rng);
  add_gru_params(store, kLinkUpdate, hl, hp, rng);
  auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-s, s);
    auto t = ad::Tensor<Real>::matrix(in, out);
    for (Real& v : t.values()) v = Real(u(rng));
    store.add("readout.w" + name, std::move(t), true);
    store.add("readout.b" + name, ad::Tensor<Real>(ad::Shape{out}), false);
  };
  dense("1", hp, w);
  dense("2", w, w);
  dense("3", w, 1);
  return store;
}

template <typename Real>
struct ModelVars {
  GruVars<Real> path_rnn;
  GruVars<Real> link_update;
  ad::Var<Real> w1, b1, w2, b2, w3, b3;
};

template <typename Real>
ModelVars<Real> model_vars(const ad::ParamStore<Real>& store, const std::vector<ad::Var<Real>>& bound) {
  auto v = [&](const char* n) { return bound.at(store.index_of(n)); };
  return ModelVars<Real>{gru_vars(store, bound, kPathRnn),
                         gru_vars(store, bound, kLinkUpdate),
                         v("readout.w1"), v("readout.b1"), v("readout.w2"),
                         v("readout.b2"), v("readout.w3"), v("readout.b3")};
}

template <typename Real>
struct States {
  ad::Tensor<Real> paths;  // n_p x dim_hp
  ad::Tensor<Real> links;  // n_l x dim_hl
};

// h_p = [x_p, 0, ..., 0]; h_l = 0 (no link features).
template <typename Real>
States<Real> init_states(const InstanceEncoding& enc, const ModelConfig& config) {
  States<Real> s{ad::Tensor<Real>::matrix(static_cast<std::size_t>(enc.n_paths()),
                                          static_cast<std::size_t>(config.dim_hp)),
                 ad::Tensor<Real>::matrix(static_cast<std::size_t>(enc.n_links()),
                                          static_cast<std::size_t>(config.dim_hl))};
  for (std::size_t p = 0; p < enc.path_features().size(); ++p) {
    s.paths(p, 0) = Real(enc.path_features()[p]);
  }
  return s;
}

// T rounds of: every path runs the path GRU along its links (input = the
// link's state from the previous round), emitting its state after each
// link as the message for that link; every link then sums its messages in
// ascending path id order and applies the link-update GRU.
template <typename Real>
std::pair<ad::Var<Real>, ad::Var<Real>> message_passing(ad::Var<Real> paths, ad::Var<Real> links,
                                                        const InstanceEncoding& enc,
                                                        const ModelVars<Real>& vars, int iterations) {
  for (int t = 0; t < iterations; ++t) {
    std::vector<ad::Var<Real>> messages;
    messages.reserve(static_cast<std::size_t>(enc.max_length()));
    for (int k = 0; k < enc.max_length(); ++k) {
      const auto& active = enc.step_paths(k);
      auto state = ad::gather_rows(paths, std::span<const int>(active));
      auto input = ad::gather_rows(links, std::span<const int>(enc.step_links(k)));
      auto next = gru_step(vars.path_rnn, state, input);
      messages.push_back(next);
      paths = ad::scatter_rows(paths, std::span<const int>(active), next);
    }
    auto stacked = ad::concat_rows(messages);
    auto ordered = ad::gather_rows(stacked, std::span<const int>(enc.message_rows()));
    auto aggregated = ad::segment_sum(ordered, std::span<const int>(enc.incidence_links()),
                                      static_cast<std::size_t>(enc.n_links()));
    links = gru_step(vars.link_update, links, aggregated);
  }
  return {paths, links};
}

template <typename Real>
struct ReadoutMasks {
  ad::Tensor<Real> first;   // n_p x width
  ad::Tensor<Real> second;  // n_p x width
};

// Keep-masks with P(keep) = 1 - rate.
template <typename Real>
ReadoutMasks<Real> sample_readout_masks(std::size_t rows, std::size_t width, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  ReadoutMasks<Real> m{ad::Tensor<Real>::matrix(rows, width), ad::Tensor<Real>::matrix(rows, width)};
  for (Real& v : m.first.values()) v = keep(rng) ? Real(1) : Real(0);
  for (Real& v : m.second.values()) v = keep(rng) ? Real(1) : Real(0);
  return m;
}

// Two SELU layers, each followed by dropout, then a linear scalar per path.
// Without masks the dropout layers are the identity.
template <typename Real>
ad::Var<Real> readout(ad::Var<Real> paths, const ModelVars<Real>& vars, const ReadoutMasks<Real>* masks,
                      Real rate) {
  auto h1 = ad::selu(ad::affine(paths, vars.w1, vars.b1));
  if (masks) h1 = ad::dropout(h1, masks->first, rate);
  auto h2 = ad::selu(ad::affine(h1, vars.w2, vars.b2));
  if (masks) h2 = ad::dropout(h2, masks->second, rate);
  return ad::affine(h2, vars.w3, vars.b3);
}

// Message passing outside of training; returns the final states.
template <typename Real>
States<Real> run_message_passing(const ad::ParamStore<Real>& params, const InstanceEncoding& enc,
                                 const States<Real>& initial, int iterations) {
  ad::Tape<Real> tape;
  std::vector<ad::Var<Real>> bound;
  for (const auto& p : params) bound.push_back(tape.constant(p.value));
  auto vars = model_vars(params, bound);
  auto [hp, hl] = message_passing(tape.constant(initial.paths), tape.constant(initial.links), enc, vars,
                                  iterations);
  return States<Real>{hp.value(), hl.value()};
}

struct PredictiveDistribution {
  std::vector<std::vector<double>> samples;  // n_samples x n_paths
  std::vector<double> median;
  std::vector<double> lower;  // 2.5th percentile
  std::vector<double> upper;  // 97.5th percentile
};

// Linear-interpolation quantile of an unsorted sample, q in [0,1].
double quantile(std::vector<double> values, double q);

// Deterministic forward pass (dropout disabled), raw model outputs.
std::vector<double> predict(const ad::ParamStore<float>& params, const ModelConfig& config,
                            const InstanceEncoding& enc);

// One message-passing pass, then `n_samples` readouts with fresh dropout
// masks drawn from `seed`. Raw model outputs.
PredictiveDistribution predict_mc(const ad::ParamStore<float>& params, const ModelConfig& config,
                                  const InstanceEncoding& enc, int n_samples, std::uint64_t seed);

}  // namespace netgnn
