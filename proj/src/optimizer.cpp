#include "netgnn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "netgnn/dataset.hpp"
#include "netgnn/error.hpp"
#include "netgnn/parallel.hpp"

namespace netgnn {

double Objective::reduce(std::span<const double> per_pair, const std::vector<bool>& mask) const {
  if (!mask.empty() && mask.size() != per_pair.size()) throw DataError("objective mask size mismatch");
  double sum = 0.0, max = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (std::size_t i = 0; i < per_pair.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    sum += per_pair[i];
    max = std::max(max, per_pair[i]);
    ++n;
  }
  if (n == 0) throw DataError("objective over an empty pair set");
  return takes_max() ? max : sum / static_cast<double>(n);
}

Objective objective_from_string(const std::string& s) {
  if (s == "mean-delay") return {ObjectiveKind::mean_delay};
  if (s == "max-delay") return {ObjectiveKind::max_delay};
  if (s == "mean-jitter") return {ObjectiveKind::mean_jitter};
  if (s == "max-jitter") return {ObjectiveKind::max_jitter};
  throw ConfigError("unknown objective '" + s + "' (expected mean-delay, max-delay, mean-jitter or max-jitter)");
}

std::string to_string(const Objective& o) {
  switch (o.kind) {
    case ObjectiveKind::mean_delay: return "mean-delay";
    case ObjectiveKind::max_delay: return "max-delay";
    case ObjectiveKind::mean_jitter: return "mean-jitter";
    case ObjectiveKind::max_jitter: return "max-jitter";
  }
  return "?";
}

void SlaSpec::validate(const Topology& topology) const {
  if (!(delay_bound > 0.0)) throw ConfigError("SLA delay bound must be positive");
  const int n = topology.node_count();
  for (auto [s, d] : pairs) {
    if (s < 0 || d < 0 || s >= n || d >= n || s == d) {
      throw ConfigError("SLA pair (" + std::to_string(s) + "," + std::to_string(d) + ") is not valid for the topology");
    }
  }
}

ModelEvaluator::ModelEvaluator(std::optional<Checkpoint> delay, std::optional<Checkpoint> jitter, int n_mc)
    : delay_(std::move(delay)), jitter_(std::move(jitter)), n_mc_(n_mc) {
  if (n_mc_ < 1) throw ConfigError("MC sample count must be >= 1");
  if (delay_ && delay_->target != Target::delay) throw ConfigError("delay checkpoint was trained on jitter");
  if (jitter_ && jitter_->target != Target::jitter) throw ConfigError("jitter checkpoint was trained on delay");
}

PairEstimates ModelEvaluator::estimate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm,
                                       Target target, std::uint64_t seed) const {
  const auto& ckpt = target == Target::delay ? delay_ : jitter_;
  if (!ckpt) throw ConfigError("no " + to_string(target) + " checkpoint supplied");
  auto enc = InstanceEncoding::from_network(topology, routing, tm, ckpt->config.feature_scale);
  auto dist = predict_labels(*ckpt, enc, n_mc_, seed);
  return PairEstimates{std::move(dist.samples), std::move(dist.median)};
}

PairEstimates SimulatorEvaluator::estimate(const Topology& topology, const RoutingScheme& routing,
                                           const TrafficMatrix& tm, Target target, std::uint64_t) const {
  auto stats = simulate(topology, routing, tm, config_, seed_);
  std::vector<double> v;
  for (const PairStats& s : stats.pairs) v.push_back(target == Target::delay ? s.mean_delay : s.jitter);
  return PairEstimates{{v}, v};
}

namespace {

void check_candidates(const Topology& topology, const TrafficMatrix& tm, const std::vector<RoutingScheme>& candidates) {
  if (candidates.empty()) throw ConfigError("candidate set is empty");
  if (tm.size() != topology.node_count()) throw DataError("traffic matrix size does not match the topology");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      candidates[i].validate(topology);
    } catch (const std::runtime_error& e) {
      throw DataError("candidate " + std::to_string(i) + " is invalid: " + e.what());
    }
  }
}

CandidateResult score(const PairEstimates& est, std::size_t index, const Objective& objective,
                      const std::vector<bool>& mask) {
  CandidateResult r;
  r.index = index;
  r.objective = objective.reduce(est.median, mask);
  std::vector<double> per_sample;
  for (const auto& s : est.samples) per_sample.push_back(objective.reduce(s, mask));
  r.lower = quantile(per_sample, 0.025);
  r.upper = quantile(per_sample, 0.975);
  r.median = est.median;
  return r;
}

void rank(OptimizationReport& report) {
  std::stable_sort(report.ranked.begin(), report.ranked.end(), [](const CandidateResult& a, const CandidateResult& b) {
    return a.objective != b.objective ? a.objective < b.objective : a.index < b.index;
  });
  for (const CandidateResult& r : report.ranked) {
    if (r.feasible) {
      report.winner = r.index;
      break;
    }
  }
  report.infeasible = !report.winner.has_value();
}

}  // namespace

OptimizationReport evaluate_candidates(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                                       const std::vector<RoutingScheme>& candidates, const Objective& objective,
                                       std::uint64_t seed) {
  check_candidates(topology, tm, candidates);
  OptimizationReport report;
  report.objective = objective;
  report.ranked.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    auto est = evaluator.estimate(topology, candidates[i], tm, objective.target(), derive_seed(seed, i));
    report.ranked[i] = score(est, i, objective, {});
  });
  rank(report);
  return report;
}

OptimizationReport optimize_with_sla(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                                     const std::vector<RoutingScheme>& candidates, const SlaSpec& sla,
                                     const Objective& objective, std::uint64_t seed) {
  sla.validate(topology);
  if (sla.vacuous()) return evaluate_candidates(evaluator, topology, tm, candidates, objective, seed);
  check_candidates(topology, tm, candidates);
  const int n = topology.node_count();
  std::vector<bool> free_pairs(static_cast<std::size_t>(pair_count(n)), true);
  for (auto [s, d] : sla.pairs) free_pairs[static_cast<std::size_t>(pair_index(s, d, n))] = false;
  if (std::none_of(free_pairs.begin(), free_pairs.end(), [](bool b) { return b; })) {
    free_pairs.clear();  // every pair is constrained: rank over all of them
  }

  OptimizationReport report;
  report.objective = objective;
  report.ranked.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, i);
    auto delay = evaluator.estimate(topology, candidates[i], tm, Target::delay, s);
    auto est = objective.target() == Target::delay
                   ? delay
                   : evaluator.estimate(topology, candidates[i], tm, objective.target(), s);
    CandidateResult r = score(est, i, objective, free_pairs);
    for (auto [src, dst] : sla.pairs) {
      if (!(delay.median[static_cast<std::size_t>(pair_index(src, dst, n))] <= sla.delay_bound)) r.feasible = false;
    }
    report.ranked[i] = std::move(r);
  });
  rank(report);
  return report;
}

void verify_winner(OptimizationReport& report, const Topology& topology, const TrafficMatrix& tm,
                   const std::vector<RoutingScheme>& candidates, const SimConfig& config, std::uint64_t seed) {
  if (!report.winner) return;
  report.verified = simulate(topology, candidates.at(*report.winner), tm, config, seed);
}

std::vector<double> link_utilization(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm) {
  routing.validate(topology);
  if (tm.size() != topology.node_count()) throw DataError("traffic matrix size does not match the topology");
  std::vector<double> load(static_cast<std::size_t>(topology.link_count()), 0.0);
  for (const Path& p : routing.paths()) {
    for (int l : p.links) load[static_cast<std::size_t>(l)] += tm.at(p.src, p.dst);
  }
  for (std::size_t l = 0; l < load.size(); ++l) load[l] /= topology.link(static_cast<int>(l)).capacity;
  return load;
}

std::size_t utilization_baseline(const Topology& topology, const TrafficMatrix& tm,
                                 const std::vector<RoutingScheme>& candidates, const Objective& objective) {
  check_candidates(topology, tm, candidates);
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto u = link_utilization(topology, candidates[i], tm);
    const double v = objective.reduce(u);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

FailureSweepReport link_failure_sweep(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                                      int n_failures, int trials, int candidates_per_trial,
                                      const Objective& objective, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("link_failure_sweep needs at least one trial");
  if (candidates_per_trial < 1) throw ConfigError("link_failure_sweep needs at least one candidate per trial");
  FailureSweepReport out;
  out.n_failures = n_failures;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    FailureTrial trial;
    trial.failed_links = sample_edge_failures(topology, n_failures, derive_seed(trial_seed, 0));
    const Topology survivors =
        n_failures == 0 ? topology : apply_link_failures(topology, trial.failed_links).topology;
    auto candidates = candidate_routings(survivors, candidates_per_trial, derive_seed(trial_seed, 1));
    auto report = evaluate_candidates(evaluator, survivors, tm, candidates, objective, derive_seed(trial_seed, 2));
    trial.winner = *report.winner;
    trial.best_objective = report.ranked.front().objective;
    trial.candidate_count = candidates.size();
    out.trials.push_back(std::move(trial));
  }
  double sum = 0.0;
  out.max_objective = -std::numeric_limits<double>::infinity();
  for (const FailureTrial& t : out.trials) {
    sum += t.best_objective;
    out.max_objective = std::max(out.max_objective, t.best_objective);
  }
  out.mean_objective = sum / static_cast<double>(out.trials.size());
  return out;
}

AddUsersReport whatif_add_users(const Evaluator& evaluator, const Topology& topology,
                                const std::vector<RoutingScheme>& candidates, const TrafficMatrix& tm,
                                const std::vector<int>& node_order, double factor, double delay_bound,
                                const Objective& objective, std::uint64_t seed) {
  if (!(factor > 0.0)) throw ConfigError("user demand factor must be positive");
  for (int node : node_order) {
    if (node < 0 || node >= topology.node_count()) {
      throw ConfigError("user node " + std::to_string(node) + " is not in the topology");
    }
  }
  AddUsersReport out;
  TrafficMatrix current = tm;
  for (std::size_t k = 0; k <= node_order.size(); ++k) {
    UserStep step;
    step.users = static_cast<int>(k);
    if (k > 0) {
      step.node = node_order[k - 1];
      current = scale_user_demand(current, step.node, factor);
    }
    // Same seed at every step so only the demand changes between steps.
    auto report = evaluate_candidates(evaluator, topology, current, candidates, objective, seed);
    const CandidateResult& best = report.ranked.front();
    step.winner = best.index;
    step.objective = best.objective;
    auto delays = objective.target() == Target::delay
                      ? best.median
                      : evaluator.estimate(topology, candidates[best.index], current, Target::delay,
                                           derive_seed(seed, best.index))
                            .median;
    step.mean_delay = Objective{ObjectiveKind::mean_delay}.reduce(delays);
    step.max_delay = Objective{ObjectiveKind::max_delay}.reduce(delays);
    if (k > 0 && !out.first_breaking && step.objective > delay_bound) out.first_breaking = step.users;
    out.steps.push_back(step);
  }
  return out;
}

std::vector<Edge> unlinked_pairs(const Topology& topology) {
  std::vector<Edge> out;
  for (int u = 0; u < topology.node_count(); ++u) {
    for (int v = u + 1; v < topology.node_count(); ++v) {
      if (!topology.find_link(u, v) && !topology.find_link(v, u)) out.emplace_back(u, v);
    }
  }
  return out;
}

AddLinkReport whatif_add_link(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                              const std::vector<Edge>& candidate_pairs, const Objective& objective, int n_candidates,
                              std::uint64_t seed) {
  if (n_candidates < 1) throw ConfigError("whatif_add_link needs at least one routing candidate");
  for (auto [u, v] : candidate_pairs) {
    if (topology.find_link(u, v) || topology.find_link(v, u)) {
      throw ConfigError("nodes " + std::to_string(u) + " and " + std::to_string(v) + " are already linked");
    }
  }
  auto optimize = [&](const Topology& topo) {
    auto candidates = candidate_routings(topo, n_candidates, derive_seed(seed, 0));
    auto report = evaluate_candidates(evaluator, topo, tm, candidates, objective, derive_seed(seed, 1));
    return std::make_pair(report.ranked.front().objective, *report.winner);
  };
  AddLinkReport out;
  out.before = optimize(topology).first;
  for (auto [u, v] : candidate_pairs) {
    auto [value, winner] = optimize(add_bidirectional_link(topology, u, v));
    Placement p{u, v, value, winner};
    if (!out.best || p.objective < out.best->objective) out.best = p;
    out.placements.push_back(p);
  }
  if (out.best && out.before != 0.0) out.reduction = (out.before - out.best->objective) / out.before;
  return out;
}

void write_report_csv(const OptimizationReport& report, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  w.stream() << "candidate,objective,lower,upper,sla_feasible\n" << std::setprecision(17);
  for (const CandidateResult& r : report.ranked) {
    w.stream() << r.index << ',' << r.objective << ',' << r.lower << ',' << r.upper << ','
               << (r.feasible ? "yes" : "no") << '\n';
  }
  w.commit();
}

std::string format_summary(const OptimizationReport& report) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "objective " << to_string(report.objective) << ", " << report.ranked.size() << " candidates\n";
  if (report.infeasible) {
    os << "infeasible: no candidate satisfies the SLA\n";
    return os.str();
  }
  auto it = std::find_if(report.ranked.begin(), report.ranked.end(),
                         [&](const CandidateResult& r) { return r.index == *report.winner; });
  os << "winner candidate " << it->index << " objective " << it->objective << " [" << it->lower << ", "
     << it->upper << "]\n";
  if (report.verified) {
    std::vector<double> v;
    for (const PairStats& s : report.verified->pairs) {
      v.push_back(report.objective.target() == Target::delay ? s.mean_delay : s.jitter);
    }
    os << "simulated objective " << report.objective.reduce(v) << '\n';
  }
  return os.str();
}

}  // namespace netgnn
