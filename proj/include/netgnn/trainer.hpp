#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "netgnn/checkpoint.hpp"
#include "netgnn/model.hpp"
#include "netgnn/netsim.hpp"

namespace netgnn {

// Which weights the L2 penalty covers. Biases never take part.
enum class L2Scope { all_weights, readout };
std::string to_string(L2Scope s);
L2Scope l2_scope_from_string(const std::string& s);

struct TrainConfig {
  int batch_size = 32;
  std::int64_t total_steps = 20000;
  double lr = 0.001;
  double lr_after = 0.0003;
  std::int64_t lr_switch_step = 10000;
  double l2_lambda = 0.1;
  L2Scope l2_scope = L2Scope::readout;
  std::int64_t eval_every = 1000;
  double early_fraction = 0.1;  // step fraction at which the early checkpoint is kept
  double smoothing = 0.95;      // loss-curve display only
  std::uint64_t seed = 1;

  void validate() const;
  double lr_at(std::int64_t step) const { return step < lr_switch_step ? lr : lr_after; }
  std::int64_t early_step() const;
};

std::vector<double> target_labels(const Sample& sample, Target target);
// Largest traffic-matrix entry over the samples; the path-feature divisor.
double max_demand(const std::vector<Sample>& samples);
LabelNorm fit_label_norm(const std::vector<Sample>& samples, Target target);

// mean((p - t)^2) + lambda * sum of squared weights.
double loss(std::span<const double> predictions, std::span<const double> targets,
            const ad::ParamStore<double>& params, double l2_lambda, L2Scope scope = L2Scope::all_weights);

bool in_l2_scope(const std::string& param_name, bool regularized, L2Scope scope);

// Same loss on a tape, with predictions as an n x 1 column.
template <typename Real>
ad::Var<Real> loss_term(ad::Var<Real> predictions, const ad::Tensor<Real>& targets,
                        const ad::ParamStore<Real>& params, const std::vector<ad::Var<Real>>& bound,
                        double l2_lambda, L2Scope scope) {
  if (predictions.value().size() != targets.size() || targets.size() == 0) {
    throw DataError("loss: predictions and targets must be nonempty and aligned");
  }
  ad::Tape<Real>& tape = *predictions.tape;
  auto err = ad::sub(predictions, tape.constant(targets));
  auto total = ad::scale(ad::sum_squares(err), Real(1.0 / static_cast<double>(targets.size())));
  if (l2_lambda == 0.0) return total;
  std::vector<ad::Var<Real>> penalties;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (in_l2_scope(params[i].name, params[i].regularized, scope)) penalties.push_back(ad::sum_squares(bound[i]));
  }
  if (penalties.empty()) return total;
  auto l2 = penalties.front();
  for (std::size_t i = 1; i < penalties.size(); ++i) l2 = ad::add(l2, penalties[i]);
  return ad::add(total, ad::scale(l2, Real(l2_lambda)));
}

struct LossPoint {
  std::int64_t step = 0;
  double mse = 0.0;       // batch MSE in standardized units
  double smoothed = 0.0;  // exponential moving average of mse
};

struct EvalPoint {
  std::int64_t step = 0;
  double mse = 0.0;  // deterministic forward pass, standardized units
};

struct TrainResult {
  Checkpoint final;
  std::optional<Checkpoint> early;
  std::vector<LossPoint> curve;
  std::vector<EvalPoint> evals;
};

struct TrainHooks {
  // Called every eval_every steps (and at the end) with the current model.
  std::function<void(const Checkpoint&)> on_checkpoint;
  // Progress line sink; nullptr silences it.
  std::function<void(const std::string&)> log;
};

// Trains from random initialization. feature_scale in the returned config is
// the largest demand of `train_set`; labels are standardized with its
// statistics. `validation` (may be empty) feeds the periodic eval MSE.
TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& validation,
                  ModelConfig model_config, Target target, const TrainConfig& config,
                  const TrainHooks& hooks = {});

// Continues from `init` (typically an early delay checkpoint) with fresh
// optimizer state and the labels/normalization of `target`.
TrainResult fine_tune(const Checkpoint& init, const std::vector<Sample>& train_set,
                      const std::vector<Sample>& validation, Target target, const TrainConfig& config,
                      const TrainHooks& hooks = {});

inline TrainResult transfer_to_jitter(const Checkpoint& delay_checkpoint, const std::vector<Sample>& train_set,
                                      const std::vector<Sample>& validation, const TrainConfig& config,
                                      const TrainHooks& hooks = {}) {
  return fine_tune(delay_checkpoint, train_set, validation, Target::jitter, config, hooks);
}

// Mean squared error in standardized units of the deterministic forward pass.
double standardized_mse(const Checkpoint& ckpt, const std::vector<Sample>& samples);

void write_loss_curve_csv(const std::vector<LossPoint>& curve, const std::filesystem::path& path);

struct Residual {
  std::size_t sample = 0;
  int src = 0;
  int dst = 0;
  double target = 0.0;
  double prediction = 0.0;  // MC median
  double lower = 0.0;
  double upper = 0.0;
};

struct EvalReport {
  double r_squared = 0.0;
  double pearson_rho = 0.0;
  bool degenerate = false;  // zero-variance targets: R^2 undefined
  std::size_t relative_error_skipped = 0;  // targets equal to zero
  std::vector<std::pair<double, double>> relative_error_cdf;  // (probability, quantile of (p - y)/y)
  std::vector<Residual> residuals;
};

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& samples, int n_mc, std::uint64_t seed);

std::string format_summary(const EvalReport& report);
void write_residuals_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace netgnn
