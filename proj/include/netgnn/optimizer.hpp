#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netgnn/checkpoint.hpp"
#include "netgnn/graph.hpp"
#include "netgnn/netsim.hpp"
#include "netgnn/traffic.hpp"

namespace netgnn {

enum class ObjectiveKind { mean_delay, max_delay, mean_jitter, max_jitter };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::mean_delay;

  bool takes_max() const { return kind == ObjectiveKind::max_delay || kind == ObjectiveKind::max_jitter; }
  Target target() const {
    return kind == ObjectiveKind::mean_delay || kind == ObjectiveKind::max_delay ? Target::delay : Target::jitter;
  }
  // Mean or max over the selected entries (all when `mask` is empty).
  double reduce(std::span<const double> per_pair, const std::vector<bool>& mask = {}) const;
};

// "mean-delay", "max-delay", "mean-jitter", "max-jitter"
Objective objective_from_string(const std::string& s);
std::string to_string(const Objective& o);

struct SlaSpec {
  std::vector<Edge> pairs;  // (src, dst)
  double delay_bound = std::numeric_limits<double>::infinity();

  void validate(const Topology& topology) const;
  // No pair can ever violate it.
  bool vacuous() const { return pairs.empty() || std::isinf(delay_bound); }
};

// Per-pair estimates for one (topology, routing, tm): MC samples when the
// source is stochastic, otherwise a single sample.
struct PairEstimates {
  std::vector<std::vector<double>> samples;  // n_samples x n_pairs
  std::vector<double> median;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual PairEstimates estimate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm,
                                 Target target, std::uint64_t seed) const = 0;
};

// MC-dropout predictions from trained checkpoints (one per target).
class ModelEvaluator : public Evaluator {
 public:
  ModelEvaluator(std::optional<Checkpoint> delay, std::optional<Checkpoint> jitter, int n_mc = 50);
  PairEstimates estimate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm,
                         Target target, std::uint64_t seed) const override;

 private:
  std::optional<Checkpoint> delay_;
  std::optional<Checkpoint> jitter_;
  int n_mc_;
};

// Ground truth by simulation. Every call uses the evaluator's own seed, so
// candidates are compared under common random numbers.
class SimulatorEvaluator : public Evaluator {
 public:
  SimulatorEvaluator(SimConfig config, std::uint64_t seed) : config_(config), seed_(seed) {}
  PairEstimates estimate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm,
                         Target target, std::uint64_t seed) const override;

 private:
  SimConfig config_;
  std::uint64_t seed_;
};

struct CandidateResult {
  std::size_t index = 0;      // position in the candidate list
  double objective = 0.0;     // objective of the per-pair medians
  double lower = 0.0;         // 2.5th percentile of the objective over samples
  double upper = 0.0;         // 97.5th percentile
  bool feasible = true;       // SLA verdict
  std::vector<double> median; // per-pair medians of the objective's target
};

struct OptimizationReport {
  Objective objective;
  std::vector<CandidateResult> ranked;  // ascending objective; ties by index
  bool infeasible = false;              // no candidate met the SLA
  std::optional<std::size_t> winner;    // candidate index
  std::optional<FlowStats> verified;    // simulator ground truth of the winner
};

OptimizationReport evaluate_candidates(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                                       const std::vector<RoutingScheme>& candidates, const Objective& objective,
                                       std::uint64_t seed);

// Survivors: every SLA pair's median delay <= bound. They are ranked by the
// objective over the non-SLA pairs. A vacuous SLA reduces to
// evaluate_candidates.
OptimizationReport optimize_with_sla(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                                     const std::vector<RoutingScheme>& candidates, const SlaSpec& sla,
                                     const Objective& objective, std::uint64_t seed);

// Simulates the winner and stores the result in report.verified.
void verify_winner(OptimizationReport& report, const Topology& topology, const TrafficMatrix& tm,
                   const std::vector<RoutingScheme>& candidates, const SimConfig& config, std::uint64_t seed);

// Offered load / capacity per link.
std::vector<double> link_utilization(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm);

// Index of the candidate with the least mean (mean-kind objectives) or least
// maximum (max-kind) link utilization; first index wins ties.
std::size_t utilization_baseline(const Topology& topology, const TrafficMatrix& tm,
                                 const std::vector<RoutingScheme>& candidates, const Objective& objective);

struct FailureTrial {
  std::vector<int> failed_links;  // ids in the intact topology
  double best_objective = 0.0;
  std::size_t winner = 0;
  std::size_t candidate_count = 0;
};

struct FailureSweepReport {
  int n_failures = 0;
  std::vector<FailureTrial> trials;
  double mean_objective = 0.0;
  double max_objective = 0.0;
};

FailureSweepReport link_failure_sweep(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                                      int n_failures, int trials, int candidates_per_trial,
                                      const Objective& objective, std::uint64_t seed);

struct UserStep {
  int users = 0;            // 0 = baseline
  int node = -1;            // node that received the latest user
  std::size_t winner = 0;
  double objective = 0.0;
  double mean_delay = 0.0;  // over all pairs, winner's medians
  double max_delay = 0.0;
};

struct AddUsersReport {
  std::vector<UserStep> steps;
  std::optional<int> first_breaking;  // user count whose optimized objective exceeds the bound
};

AddUsersReport whatif_add_users(const Evaluator& evaluator, const Topology& topology,
                                const std::vector<RoutingScheme>& candidates, const TrafficMatrix& tm,
                                const std::vector<int>& node_order, double factor, double delay_bound,
                                const Objective& objective, std::uint64_t seed);

struct Placement {
  int u = 0;
  int v = 0;
  double objective = 0.0;
  std::size_t winner = 0;
};

struct AddLinkReport {
  double before = 0.0;
  std::vector<Placement> placements;  // in candidate-pair order
  std::optional<Placement> best;
  double reduction = 0.0;  // (before - best) / before
};

// Unordered node pairs with no link in either direction.
std::vector<Edge> unlinked_pairs(const Topology& topology);

// Each placement gets `n_candidates` routings from candidate_routings on the
// augmented topology; the baseline uses the same recipe on the original.
AddLinkReport whatif_add_link(const Evaluator& evaluator, const Topology& topology, const TrafficMatrix& tm,
                              const std::vector<Edge>& candidate_pairs, const Objective& objective, int n_candidates,
                              std::uint64_t seed);

void write_report_csv(const OptimizationReport& report, const std::filesystem::path& path);
std::string format_summary(const OptimizationReport& report);

}  // namespace netgnn
