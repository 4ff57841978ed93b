#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "netgnn/autodiff/tape.hpp"

namespace netgnn::ad {

template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> value;
  bool regularized = false;  // weights take part in the L2 term, biases do not
  Tensor<Real> first_moment;
  Tensor<Real> second_moment;
};

// Named trainable tensors with Adam state, kept in insertion order.
template <typename Real>
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor<Real> value, bool regularized) {
    if (index_.count(name)) throw DataError("duplicate parameter name '" + name + "'");
    index_.emplace(name, params_.size());
    Tensor<Real> zeros(value.shape());
    params_.push_back(Parameter<Real>{std::move(name), std::move(value), regularized, zeros, zeros});
    return params_.size() - 1;
  }

  std::size_t size() const { return params_.size(); }
  Parameter<Real>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<Real>& operator[](std::size_t i) const { return params_[i]; }
  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw DataError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Tensor<Real>& value(const std::string& name) const { return params_[index_of(name)].value; }
  Tensor<Real>& value(const std::string& name) { return params_[index_of(name)].value; }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::int64_t step = 0;  // Adam steps taken

  // Registers every parameter as a tape variable, in store order.
  std::vector<Var<Real>> bind(Tape<Real>& tape) const {
    std::vector<Var<Real>> vars;
    vars.reserve(params_.size());
    for (const auto& p : params_) vars.push_back(tape.variable(p.value));
    return vars;
  }

  // Gradients of bound variables after tape.backward(); parameters the
  // output never touched come back as zeros.
  std::vector<Tensor<Real>> gradients(const std::vector<Var<Real>>& vars) const {
    std::vector<Tensor<Real>> out;
    out.reserve(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const Tensor<Real>& g = vars[i].grad();
      out.push_back(g.size() == params_[i].value.size() ? g : Tensor<Real>(params_[i].value.shape()));
    }
    return out;
  }

  template <typename To>
  ParamStore<To> cast() const {
    ParamStore<To> out;
    for (const auto& p : params_) {
      std::size_t i = out.add(p.name, p.value.template cast<To>(), p.regularized);
      out[i].first_moment = p.first_moment.template cast<To>();
      out[i].second_moment = p.second_moment.template cast<To>();
    }
    out.step = step;
    return out;
  }

 private:
  std::vector<Parameter<Real>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam step over every parameter; increments store.step.
template <typename Real>
void adam_update(ParamStore<Real>& store, const std::vector<Tensor<Real>>& grads, const AdamConfig& cfg) {
  if (grads.size() != store.size()) throw DataError("adam_update: one gradient per parameter required");
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!grads[i].same_shape(store[i].value)) {
      throw DataError("adam_update: gradient shape mismatch for '" + store[i].name + "'");
    }
  }
  store.step += 1;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const Real b1 = Real(cfg.beta1), b2 = Real(cfg.beta2);
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter<Real>& p = store[i];
    const Tensor<Real>& g = grads[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      p.first_moment[k] = b1 * p.first_moment[k] + (Real(1) - b1) * g[k];
      p.second_moment[k] = b2 * p.second_moment[k] + (Real(1) - b2) * g[k] * g[k];
      const double m_hat = static_cast<double>(p.first_moment[k]) / c1;
      const double v_hat = static_cast<double>(p.second_moment[k]) / c2;
      p.value[k] -= Real(cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

}  // namespace netgnn::ad
