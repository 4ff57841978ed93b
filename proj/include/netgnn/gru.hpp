#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "netgnn/autodiff/ops.hpp"
#include "netgnn/autodiff/params.hpp"
#include "netgnn/random.hpp"

namespace netgnn {

// Tape handles for one GRU cell. Weight matrices act on [state, input]
// (or [reset * state, input] for the candidate) and have shape
// (state_dim + input_dim) x state_dim.
template <typename Real>
struct GruVars {
  ad::Var<Real> w_z, w_r, w_h;
  ad::Var<Real> b_z, b_r, b_h;
};

// Appends "<prefix>.w_z", ... to the store. Weights ~ U[-s, s] with
// s = 1/sqrt(fan_in); biases start at zero.
template <typename Real>
void add_gru_params(ad::ParamStore<Real>& store, const std::string& prefix, std::size_t state_dim,
                    std::size_t input_dim, Rng& rng) {
  const std::size_t fan_in = state_dim + input_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-s, s);
  for (const char* w : {"w_z", "w_r", "w_h"}) {
    auto t = ad::Tensor<Real>::matrix(fan_in, state_dim);
    for (Real& v : t.values()) v = Real(u(rng));
    store.add(prefix + "." + w, std::move(t), true);
  }
  for (const char* b : {"b_z", "b_r", "b_h"}) {
    store.add(prefix + "." + b, ad::Tensor<Real>(ad::Shape{state_dim}), false);
  }
}

template <typename Real>
GruVars<Real> gru_vars(const ad::ParamStore<Real>& store, const std::vector<ad::Var<Real>>& bound,
                       const std::string& prefix) {
  auto v = [&](const char* n) { return bound.at(store.index_of(prefix + "." + n)); };
  return GruVars<Real>{v("w_z"), v("w_r"), v("w_h"), v("b_z"), v("b_r"), v("b_h")};
}

// One GRU step over a batch of rows; the output is the new state.
//   z = sigmoid([s, x] W_z + b_z)
//   r = sigmoid([s, x] W_r + b_r)
//   c = tanh([r * s, x] W_h + b_h)
//   s' = (1 - z) * s + z * c
template <typename Real>
ad::Var<Real> gru_step(const GruVars<Real>& p, ad::Var<Real> state, ad::Var<Real> input) {
  const std::size_t state_dim = p.w_z.value().cols();
  const std::size_t fan_in = p.w_z.value().rows();
  if (state.value().cols() != state_dim || state.value().cols() + input.value().cols() != fan_in ||
      state.value().rows() != input.value().rows()) {
    throw DataError("gru_step: state/input dimensions do not match the cell parameters");
  }
  auto joint = ad::concat_cols(state, input);
  auto z = ad::sigmoid(ad::affine(joint, p.w_z, p.b_z));
  auto r = ad::sigmoid(ad::affine(joint, p.w_r, p.b_r));
  auto gated = ad::concat_cols(ad::mul(r, state), input);
  auto candidate = ad::tanh(ad::affine(gated, p.w_h, p.b_h));
  return ad::add(state, ad::mul(z, ad::sub(candidate, state)));
}

}  // namespace netgnn
