#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "checks.hpp"
#include "doctest.h"
#include "netgnn/error.hpp"
#include "netgnn/optimizer.hpp"

using namespace netgnn;

namespace {

// Deterministic stand-in: per-pair "delay" = sum over the path of
// 1 / (capacity - load), i.e. an M/M/1-style estimate from link loads, with
// a few fake MC samples spread around it.
class LoadEvaluator : public Evaluator {
 public:
  PairEstimates estimate(const Topology& topology, const RoutingScheme& routing, const TrafficMatrix& tm, Target target,
                         std::uint64_t) const override {
    auto load = link_utilization(topology, routing, tm);
    std::vector<double> v;
    for (const Path& p : routing.paths()) {
      double d = 0.0;
      for (int l : p.links) d += 1.0 / (topology.capacity() * std::max(1e-3, 1.0 - load[static_cast<std::size_t>(l)]));
      v.push_back(target == Target::delay ? d : d * d);
    }
    PairEstimates e;
    for (double f : {0.9, 1.0, 1.1}) {
      std::vector<double> s = v;
      for (double& x : s) x *= f;
      e.samples.push_back(s);
    }
    e.median = v;
    return e;
  }
};

// Wraps another evaluator and applies a strictly increasing transform.
class Monotone : public Evaluator {
 public:
  explicit Monotone(const Evaluator& inner) : inner_(inner) {}
  PairEstimates estimate(const Topology& t, const RoutingScheme& r, const TrafficMatrix& tm, Target target,
                         std::uint64_t seed) const override {
    auto e = inner_.estimate(t, r, tm, target, seed);
    for (auto& s : e.samples)
      for (double& x : s) x = std::exp(x) + 3.0 * x;
    for (double& x : e.median) x = std::exp(x) + 3.0 * x;
    return e;
  }

 private:
  const Evaluator& inner_;
};

SimConfig quick_sim() {
  SimConfig c;
  c.duration = 4000;
  c.warmup = 200;
  return c;
}

}  // namespace

TEST_CASE("objectives") {
  std::vector<double> v{1, 4, 2};
  CHECK(objective_from_string("mean-delay").reduce(v) == doctest::Approx(7.0 / 3.0));
  CHECK(objective_from_string("max-jitter").reduce(v) == 4.0);
  CHECK(objective_from_string("max-delay").reduce(v, {true, false, true}) == 2.0);
  CHECK(objective_from_string("mean-jitter").target() == Target::jitter);
  CHECK(to_string(objective_from_string("max-delay")) == "max-delay");
  CHECK_THROWS_AS(objective_from_string("median"), ConfigError);
}

TEST_CASE("link utilization equals brute-force accumulation") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto inst = checks::random_instance(700 + seed, 4, 4);
    auto u = link_utilization(inst.topology, inst.routing, inst.tm);
    for (const Link& l : inst.topology.links()) {
      double load = 0.0;
      for (int s = 0; s < 4; ++s)
        for (int d = 0; d < 4; ++d) {
          if (s == d) continue;
          const Path& p = inst.routing.paths()[static_cast<std::size_t>(pair_index(s, d, 4))];
          if (std::find(p.links.begin(), p.links.end(), l.id) != p.links.end()) load += inst.tm.at(s, d);
        }
      CHECK(u[static_cast<std::size_t>(l.id)] == doctest::Approx(load / l.capacity));
    }
  }
}

TEST_CASE("utilization baseline: min-max avoids the overloaded link") {
  // Triangle 0-1-2: pair (0,2) either goes direct or via 1, where (0,1) already carries a lot.
  auto topo = build_topology(3, bidirectional(std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}}), 10.0);
  auto direct = shortest_path_routing(topo);
  std::vector<double> w(static_cast<std::size_t>(topo.link_count()), 1.0);
  w[static_cast<std::size_t>(*topo.find_link(0, 2))] = 5.0;
  auto detour = shortest_path_routing(topo, w);
  TrafficMatrix tm(3);
  tm.set(0, 1, 8.0);
  tm.set(0, 2, 4.0);
  std::vector<RoutingScheme> c{detour, direct};
  CHECK(utilization_baseline(topo, tm, c, objective_from_string("max-delay")) == 1);
  std::vector<RoutingScheme> same{direct, direct, direct};
  CHECK(utilization_baseline(topo, tm, same, objective_from_string("mean-delay")) == 0);
}

TEST_CASE("evaluate_candidates ranks by objective") {
  auto t8 = topologies::testbed8(6.0);
  auto tm = generate_tm(8, 14.0, 2);
  auto cands = candidate_routings(t8, 12, 3);
  LoadEvaluator ev;
  auto rep = evaluate_candidates(ev, t8, tm, cands, objective_from_string("mean-delay"), 1);
  REQUIRE(rep.ranked.size() == 12);
  for (std::size_t i = 1; i < rep.ranked.size(); ++i) CHECK(rep.ranked[i - 1].objective <= rep.ranked[i].objective);
  CHECK(*rep.winner == rep.ranked.front().index);
  for (const auto& r : rep.ranked) {
    CHECK(r.lower <= r.objective);
    CHECK(r.objective <= r.upper);
  }
  auto single = evaluate_candidates(ev, t8, tm, {cands[5]}, objective_from_string("max-delay"), 1);
  CHECK(*single.winner == 0);
  CHECK_THROWS_AS(evaluate_candidates(ev, t8, tm, {}, objective_from_string("max-delay"), 1), ConfigError);
  auto ring = topologies::ring(8, 6.0);
  CHECK_THROWS_AS(evaluate_candidates(ev, ring, tm, cands, objective_from_string("max-delay"), 1), DataError);
}

TEST_CASE("a strictly monotone transform keeps the argmin") {
  auto t8 = topologies::testbed8(6.0);
  auto cands = candidate_routings(t8, 15, 7);
  LoadEvaluator ev;
  Monotone mono(ev);
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto tm = generate_tm(8, 12.0, s);
    auto objective = objective_from_string(s % 2 ? "max-delay" : "mean-delay");
    if (!objective.takes_max()) continue;  // the mean of transformed values is not a transform of the mean
    auto a = evaluate_candidates(ev, t8, tm, cands, objective, s);
    auto b = evaluate_candidates(mono, t8, tm, cands, objective, s);
    CHECK(*a.winner == *b.winner);
  }
}

TEST_CASE("identical candidates: model, utilization and shortest path agree") {
  auto t8 = topologies::testbed8(6.0);
  auto sp = shortest_path_routing(t8);
  std::vector<RoutingScheme> cands(4, sp);
  auto tm = generate_tm(8, 10.0, 1);
  LoadEvaluator ev;
  auto rep = evaluate_candidates(ev, t8, tm, cands, objective_from_string("mean-delay"), 1);
  CHECK(*rep.winner == 0);
  CHECK(utilization_baseline(t8, tm, cands, objective_from_string("mean-delay")) == 0);
  CHECK(cands[*rep.winner] == sp);
}

TEST_CASE("SLA filtering") {
  auto nsf = topologies::nsfnet(6.0);
  auto cands = candidate_routings(nsf, 20, 4);
  auto tm = generate_tm(14, 12.0, 3);
  LoadEvaluator ev;
  const auto objective = objective_from_string("mean-delay");
  SlaSpec sla{{{0, 3}, {3, 4}, {3, 5}, {3, 6}}, std::numeric_limits<double>::infinity()};
  auto vacuous = optimize_with_sla(ev, nsf, tm, cands, sla, objective, 2);
  auto plain = evaluate_candidates(ev, nsf, tm, cands, objective, 2);
  CHECK(*vacuous.winner == *plain.winner);
  for (std::size_t i = 0; i < cands.size(); ++i) CHECK(vacuous.ranked[i].objective == plain.ranked[i].objective);

  // A bound between the best and worst SLA-pair delays splits the candidates.
  double lo = 1e300, hi = 0;
  for (const auto& r : plain.ranked) {
    double worst = 0;
    for (auto [s, d] : sla.pairs) worst = std::max(worst, r.median[static_cast<std::size_t>(pair_index(s, d, 14))]);
    lo = std::min(lo, worst);
    hi = std::max(hi, worst);
  }
  REQUIRE(lo < hi);
  sla.delay_bound = 0.5 * (lo + hi);
  auto rep = optimize_with_sla(ev, nsf, tm, cands, sla, objective, 2);
  REQUIRE(rep.winner.has_value());
  const auto& win = *std::find_if(rep.ranked.begin(), rep.ranked.end(), [&](const auto& r) { return r.index == *rep.winner; });
  CHECK(win.feasible);
  auto delays = ev.estimate(nsf, cands[*rep.winner], tm, Target::delay, 0).median;
  for (auto [s, d] : sla.pairs) CHECK(delays[static_cast<std::size_t>(pair_index(s, d, 14))] <= sla.delay_bound);
  CHECK(std::count_if(rep.ranked.begin(), rep.ranked.end(), [](const auto& r) { return !r.feasible; }) > 0);

  sla.delay_bound = 0.5 * lo;
  auto none = optimize_with_sla(ev, nsf, tm, cands, sla, objective, 2);
  CHECK(none.infeasible);
  CHECK_FALSE(none.winner.has_value());
  CHECK(format_summary(none).find("infeasible") != std::string::npos);

  SlaSpec bad{{{0, 0}}, 1.0};
  CHECK_THROWS_AS(optimize_with_sla(ev, nsf, tm, cands, bad, objective, 2), ConfigError);
}

TEST_CASE("link failure sweep") {
  auto nsf = topologies::nsfnet(6.0);
  auto tm = generate_tm(14, 8.0, 1);
  LoadEvaluator ev;
  const auto objective = objective_from_string("mean-delay");
  auto zero = link_failure_sweep(ev, nsf, tm, 0, 2, 5, objective, 3);
  auto direct = evaluate_candidates(ev, nsf, tm, candidate_routings(nsf, 5, derive_seed(derive_seed(3, 0), 1)), objective,
                                    derive_seed(derive_seed(3, 0), 2));
  CHECK(zero.trials[0].best_objective == direct.ranked.front().objective);
  CHECK(zero.trials[0].failed_links.empty());

  double previous = 0.0;
  for (int f : {0, 2, 4}) {
    auto rep = link_failure_sweep(ev, nsf, tm, f, 10, 5, objective, 9);
    CHECK(rep.trials.size() == 10);
    CHECK(rep.mean_objective >= previous);
    previous = rep.mean_objective;
    for (const auto& t : rep.trials) CHECK(t.failed_links.size() == static_cast<std::size_t>(2 * f));
  }
  CHECK_THROWS_AS(link_failure_sweep(ev, topologies::line(4), tm, 1, 1, 1, objective, 1), ConfigError);
}

TEST_CASE("adding users") {
  auto nsf = topologies::nsfnet(6.0);
  auto tm = generate_tm(14, 6.0, 1);
  auto cands = candidate_routings(nsf, 5, 2);
  LoadEvaluator ev;
  const auto objective = objective_from_string("mean-delay");
  std::vector<int> order{10, 2, 8, 5, 12, 1, 7, 0};
  auto same = whatif_add_users(ev, nsf, cands, tm, order, 1.0, 1e9, objective, 1);
  REQUIRE(same.steps.size() == 9);
  for (const auto& s : same.steps) CHECK(s.objective == same.steps.front().objective);
  CHECK_FALSE(same.first_breaking.has_value());

  auto fixed = whatif_add_users(ev, nsf, {cands[0]}, tm, order, 1.3, 1e9, objective, 1);
  for (std::size_t i = 1; i < fixed.steps.size(); ++i) {
    CHECK(fixed.steps[i].mean_delay >= fixed.steps[i - 1].mean_delay);
    CHECK(fixed.steps[i].node == order[i - 1]);
  }
  const double bound = 0.5 * (fixed.steps[2].objective + fixed.steps[3].objective);
  auto breaking = whatif_add_users(ev, nsf, {cands[0]}, tm, order, 1.3, bound, objective, 1);
  CHECK(breaking.first_breaking == 3);
  CHECK_THROWS_AS(whatif_add_users(ev, nsf, cands, tm, {14}, 2.0, 1.0, objective, 1), ConfigError);
}

TEST_CASE("adding a link: placement search matches a brute-force simulator sweep") {
  // Star with centre 0 and leaves 1..4; leaves 1 and 2 exchange heavy traffic
  // through the centre.
  auto star = topologies::star(4, 4.0);
  TrafficMatrix tm(5);
  for (int s = 0; s < 5; ++s)
    for (int d = 0; d < 5; ++d)
      if (s != d) tm.set(s, d, 0.2);
  tm.set(1, 2, 2.2);
  tm.set(2, 1, 2.2);
  SimulatorEvaluator sim(quick_sim(), 5);
  const auto objective = objective_from_string("mean-delay");
  auto pairs = unlinked_pairs(star);
  CHECK(pairs.size() == 6);
  auto rep = whatif_add_link(sim, star, tm, pairs, objective, 1, 1);

  Edge best{-1, -1};
  double best_value = std::numeric_limits<double>::infinity();
  for (auto [u, v] : pairs) {
    auto topo = add_bidirectional_link(star, u, v);
    auto stats = simulate(topo, shortest_path_routing(topo), tm, quick_sim(), 5);
    double mean = 0;
    for (const auto& s : stats.pairs) mean += s.mean_delay;
    mean /= static_cast<double>(stats.pairs.size());
    if (mean < best_value) {
      best_value = mean;
      best = {u, v};
    }
  }
  REQUIRE(rep.best.has_value());
  CHECK(Edge{rep.best->u, rep.best->v} == best);
  CHECK(best == Edge{1, 2});
  CHECK(rep.best->objective == doctest::Approx(best_value));
  CHECK(rep.reduction > 0.0);
  CHECK_THROWS_AS(whatif_add_link(sim, star, tm, {{0, 1}}, objective, 1, 1), ConfigError);
}

TEST_CASE("a link nobody routes over changes nothing") {
  // Line 0-1-2-3 plus a 0-2 shortcut only helps pairs that use it; with
  // demand on (2,3) only, it is useless.
  auto line = topologies::line(4, 4.0);
  TrafficMatrix tm(4);
  tm.set(2, 3, 1.0);
  SimulatorEvaluator sim(quick_sim(), 2);
  auto rep = whatif_add_link(sim, line, tm, {{0, 2}}, objective_from_string("max-delay"), 1, 1);
  CHECK(std::abs(rep.reduction) < 1e-12);
}

TEST_CASE("report CSV round-trips") {
  auto t8 = topologies::testbed8(6.0);
  auto cands = candidate_routings(t8, 4, 1);
  LoadEvaluator ev;
  auto rep = evaluate_candidates(ev, t8, generate_tm(8, 10.0, 1), cands, objective_from_string("mean-delay"), 1);
  auto path = std::filesystem::temp_directory_path() / "netgnn_test_report.csv";
  write_report_csv(rep, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "candidate,objective,lower,upper,sla_feasible");
  for (const auto& r : rep.ranked) {
    std::getline(in, line);
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 5);
    CHECK(std::stoul(f[0]) == r.index);
    CHECK(std::stod(f[1]) == r.objective);
    CHECK(std::stod(f[2]) == r.lower);
    CHECK(std::stod(f[3]) == r.upper);
    CHECK(f[4] == "yes");
  }
}
