#include "netgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "netgnn/dataset.hpp"
#include "netgnn/error.hpp"
#include "netgnn/metrics.hpp"
#include "netgnn/parallel.hpp"

namespace netgnn {

std::string to_string(L2Scope s) { return s == L2Scope::all_weights ? "all" : "readout"; }

L2Scope l2_scope_from_string(const std::string& s) {
  if (s == "all") return L2Scope::all_weights;
  if (s == "readout") return L2Scope::readout;
  throw ConfigError("unknown l2 scope '" + s + "' (expected all or readout)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (!(lr > 0.0) || !(lr_after > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(lr_after < lr)) throw ConfigError("lr_after must be smaller than lr");
  if (lr_switch_step < 1) throw ConfigError("lr_switch_step must be >= 1");
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ConfigError("l2_lambda must be >= 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (!(early_fraction > 0.0 && early_fraction <= 1.0)) throw ConfigError("early_fraction must be in (0, 1]");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ConfigError("smoothing must be in [0, 1)");
}

std::int64_t TrainConfig::early_step() const {
  return std::max<std::int64_t>(1, std::llround(early_fraction * static_cast<double>(total_steps)));
}

std::vector<double> target_labels(const Sample& sample, Target target) {
  std::vector<double> y;
  y.reserve(sample.labels.pairs.size());
  for (const PairStats& s : sample.labels.pairs) y.push_back(target == Target::delay ? s.mean_delay : s.jitter);
  return y;
}

double max_demand(const std::vector<Sample>& samples) {
  double m = 0.0;
  for (const Sample& s : samples) m = std::max(m, s.tm.max_entry());
  if (!(m > 0.0)) throw DataError("training set has no positive demand");
  return m;
}

LabelNorm fit_label_norm(const std::vector<Sample>& samples, Target target) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Sample& s : samples) {
    for (double y : target_labels(s, target)) {
      sum += y;
      ++n;
    }
  }
  if (n == 0) throw DataError("no labels to standardize");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const Sample& s : samples) {
    for (double y : target_labels(s, target)) ss += (y - mean) * (y - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw DataError("labels have zero variance; cannot standardize");
  return LabelNorm{mean, sd};
}

bool in_l2_scope(const std::string& param_name, bool regularized, L2Scope scope) {
  if (!regularized) return false;
  return scope == L2Scope::all_weights || param_name.rfind("readout.", 0) == 0;
}

double loss(std::span<const double> predictions, std::span<const double> targets,
            const ad::ParamStore<double>& params, double l2_lambda, L2Scope scope) {
  if (predictions.size() != targets.size() || targets.empty()) {
    throw DataError("loss: predictions and targets must be nonempty and aligned");
  }
  double se = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) se += (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
  double l2 = 0.0;
  for (const auto& p : params) {
    if (!in_l2_scope(p.name, p.regularized, scope)) continue;
    for (double w : p.value.values()) l2 += w * w;
  }
  return se / static_cast<double>(targets.size()) + l2_lambda * l2;
}

namespace {

struct Prepared {
  std::vector<InstanceEncoding> inputs;
  std::vector<std::vector<float>> labels;  // standardized
};

Prepared prepare(const std::vector<Sample>& samples, const Checkpoint& ckpt) {
  Prepared out;
  out.inputs.resize(samples.size());
  out.labels.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    out.inputs[i] = InstanceEncoding::from_network(s.topology, s.routing, s.tm, ckpt.config.feature_scale);
    for (double y : target_labels(s, ckpt.target)) out.labels[i].push_back(static_cast<float>(ckpt.label_norm.forward(y)));
  });
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

TrainResult run(Checkpoint ckpt, const std::vector<Sample>& train_set, const std::vector<Sample>& validation,
                const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  const Prepared data = prepare(train_set, ckpt);
  auto log = [&](const std::string& line) {
    if (hooks.log) hooks.log(line);
  };

  TrainResult result;
  const std::uint64_t batch_master = derive_seed(config.seed, 1);
  const std::int64_t early = config.early_step();
  const auto width = static_cast<std::size_t>(ckpt.config.readout_width);
  const auto rate = static_cast<float>(ckpt.config.dropout);
  std::uniform_int_distribution<std::size_t> pick(0, data.inputs.size() - 1);
  double smoothed = 0.0;

  for (std::int64_t step = 0; step < config.total_steps; ++step) {
    const std::uint64_t batch_seed = derive_seed(batch_master, static_cast<std::uint64_t>(step));
    Rng rng(batch_seed);
    std::vector<const InstanceEncoding*> parts;
    std::vector<float> targets;
    for (int b = 0; b < config.batch_size; ++b) {
      const std::size_t i = pick(rng);
      parts.push_back(&data.inputs[i]);
      targets.insert(targets.end(), data.labels[i].begin(), data.labels[i].end());
    }
    double mse = 0.0;
    try {
      const InstanceEncoding batch = InstanceEncoding::merge(parts);
      ad::Tape<float> tape;
      auto bound = ckpt.params.bind(tape);
      auto vars = model_vars(ckpt.params, bound);
      auto init = init_states<float>(batch, ckpt.config);
      auto [hp, hl] = message_passing(tape.constant(std::move(init.paths)), tape.constant(std::move(init.links)),
                                      batch, vars, ckpt.config.iterations);
      auto masks = sample_readout_masks<float>(static_cast<std::size_t>(batch.n_paths()), width,
                                               ckpt.config.dropout, rng);
      auto y = readout<float>(hp, vars, &masks, rate);
      ad::Tensor<float> t(ad::Shape{targets.size(), 1}, targets);
      auto total = loss_term<float>(y, t, ckpt.params, bound, config.l2_lambda, config.l2_scope);
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const double d = static_cast<double>(y.value()[k]) - targets[k];
        mse += d * d;
      }
      mse /= static_cast<double>(targets.size());
      if (!std::isfinite(total.value()[0]) || !std::isfinite(mse)) throw NumericError("non-finite loss");
      tape.backward(total);
      ad::adam_update(ckpt.params, ckpt.params.gradients(bound), ad::AdamConfig{config.lr_at(step)});
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at step " + std::to_string(step) + " (batch seed " +
                         std::to_string(batch_seed) + ")");
    }
    smoothed = step == 0 ? mse : config.smoothing * smoothed + (1.0 - config.smoothing) * mse;
    result.curve.push_back(LossPoint{step, mse, smoothed});

    const std::int64_t done = step + 1;
    ckpt.step = done;
    if (done == early) result.early = ckpt;
    if (done % config.eval_every == 0 || done == config.total_steps) {
      std::string line = "step " + std::to_string(done) + " loss(ema) " + fmt(smoothed) + " lr " + fmt(config.lr_at(step));
      if (!validation.empty()) {
        const double v = standardized_mse(ckpt, validation);
        result.evals.push_back(EvalPoint{done, v});
        line += " val_mse " + fmt(v);
      }
      log(line);
      if (hooks.on_checkpoint) hooks.on_checkpoint(ckpt);
    }
  }
  result.final = std::move(ckpt);
  return result;
}

}  // namespace

TrainResult train(const std::vector<Sample>& train_set, const std::vector<Sample>& validation,
                  ModelConfig model_config, Target target, const TrainConfig& config, const TrainHooks& hooks) {
  if (train_set.empty()) throw DataError("training set is empty");
  model_config.feature_scale = max_demand(train_set);
  model_config.validate();
  Checkpoint ckpt;
  ckpt.config = model_config;
  ckpt.params = init_params<float>(model_config, derive_seed(config.seed, 0));
  ckpt.label_norm = fit_label_norm(train_set, target);
  ckpt.target = target;
  return run(std::move(ckpt), train_set, validation, config, hooks);
}

TrainResult fine_tune(const Checkpoint& init, const std::vector<Sample>& train_set,
                      const std::vector<Sample>& validation, Target target, const TrainConfig& config,
                      const TrainHooks& hooks) {
  if (train_set.empty()) throw DataError("training set is empty");
  Checkpoint ckpt;
  ckpt.config = init.config;
  ckpt.target = target;
  ckpt.label_norm = fit_label_norm(train_set, target);
  for (const auto& p : init.params) {
    ckpt.params.add(p.name, p.value, p.regularized);
  }
  return run(std::move(ckpt), train_set, validation, config, hooks);
}

double standardized_mse(const Checkpoint& ckpt, const std::vector<Sample>& samples) {
  if (samples.empty()) throw DataError("standardized_mse: no samples");
  std::vector<double> se(samples.size(), 0.0);
  std::vector<std::size_t> count(samples.size(), 0);
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    auto enc = InstanceEncoding::from_network(s.topology, s.routing, s.tm, ckpt.config.feature_scale);
    auto y = predict(ckpt.params, ckpt.config, enc);
    auto t = target_labels(s, ckpt.target);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double d = y[k] - ckpt.label_norm.forward(t[k]);
      se[i] += d * d;
    }
    count[i] = t.size();
  });
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < se.size(); ++i) {
    total += se[i];
    n += count[i];
  }
  return total / static_cast<double>(n);
}

void write_loss_curve_csv(const std::vector<LossPoint>& curve, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  w.stream() << "step,mse,smoothed_mse\n" << std::setprecision(17);
  for (const LossPoint& p : curve) w.stream() << p.step << ',' << p.mse << ',' << p.smoothed << '\n';
  w.commit();
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& samples, int n_mc, std::uint64_t seed) {
  if (samples.empty()) throw DataError("evaluate: dataset is empty");
  if (n_mc < 1) throw ConfigError("evaluate: n_mc must be >= 1");
  std::vector<std::vector<Residual>> per_sample(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    auto enc = InstanceEncoding::from_network(s.topology, s.routing, s.tm, ckpt.config.feature_scale);
    auto dist = predict_labels(ckpt, enc, n_mc, derive_seed(seed, i));
    auto t = target_labels(s, ckpt.target);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Path& p = s.routing.paths()[k];
      per_sample[i].push_back(Residual{i, p.src, p.dst, t[k], dist.median[k], dist.lower[k], dist.upper[k]});
    }
  });
  EvalReport report;
  for (auto& v : per_sample) report.residuals.insert(report.residuals.end(), v.begin(), v.end());
  std::vector<double> y, yhat, rel;
  for (const Residual& r : report.residuals) {
    y.push_back(r.target);
    yhat.push_back(r.prediction);
    if (r.target == 0.0) {
      ++report.relative_error_skipped;
    } else {
      rel.push_back((r.prediction - r.target) / r.target);
    }
  }
  report.r_squared = r_squared(yhat, y);
  report.pearson_rho = pearson(yhat, y);
  report.degenerate = std::isnan(report.r_squared);
  if (!rel.empty()) {
    for (double q : {0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 1.0}) {
      report.relative_error_cdf.emplace_back(q, quantile(rel, q));
    }
  }
  return report;
}

std::string format_summary(const EvalReport& report) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "paths " << report.residuals.size() << '\n';
  if (report.degenerate) {
    os << "R2 undefined (targets have zero variance)\n";
  } else {
    os << "R2 " << report.r_squared << '\n';
  }
  os << "rho " << report.pearson_rho << '\n';
  os << "relative error (pred - true) / true quantiles:\n";
  for (const auto& [p, q] : report.relative_error_cdf) os << "  p=" << p << " " << q << '\n';
  if (report.relative_error_skipped > 0) {
    os << "relative error skipped for " << report.relative_error_skipped << " zero targets\n";
  }
  return os.str();
}

void write_residuals_csv(const EvalReport& report, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  w.stream() << "sample,src,dst,target,prediction,lower,upper,residual\n" << std::setprecision(17);
  for (const Residual& r : report.residuals) {
    w.stream() << r.sample << ',' << r.src << ',' << r.dst << ',' << r.target << ',' << r.prediction << ','
               << r.lower << ',' << r.upper << ',' << (r.prediction - r.target) << '\n';
  }
  w.commit();
}

}  // namespace netgnn
