#include "netgnn/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "netgnn/checkpoint.hpp"
#include "netgnn/dataset.hpp"
#include "netgnn/error.hpp"
#include "netgnn/optimizer.hpp"
#include "netgnn/trainer.hpp"

namespace netgnn {

namespace fs = std::filesystem;

std::vector<double> parse_number_list(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError("bad number '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<std::string> parts;
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) throw ConfigError("bad range '" + text + "' (expected a:b or a:b:step)");
    const double a = number(parts[0]), b = number(parts[1]);
    const double step = parts.size() == 3 ? number(parts[2]) : 1.0;
    if (!(step > 0.0) || b < a) throw ConfigError("bad range '" + text + "'");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::vector<std::pair<int, int>> parse_pair_list(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) {
    const auto dash = p.find('-');
    try {
      if (dash == std::string::npos) throw std::invalid_argument(p);
      std::size_t a_used = 0, b_used = 0;
      const int a = std::stoi(p.substr(0, dash), &a_used);
      const int b = std::stoi(p.substr(dash + 1), &b_used);
      if (a_used != dash || b_used != p.size() - dash - 1) throw std::invalid_argument(p);
      out.emplace_back(a, b);
    } catch (const std::logic_error&) {
      throw ConfigError("bad node pair '" + p + "' (expected src-dst)");
    }
  }
  if (out.empty()) throw ConfigError("empty node pair list");
  return out;
}

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string out;
};

struct SimFlags {
  double duration = SimConfig{}.duration;
  double warmup = SimConfig{}.warmup;
  int buffer = SimConfig{}.buffer_packets;
  std::string size_law = "exponential";

  void add(CLI::App* app) {
    app->add_option("--sim-duration", duration, "Traffic generation horizon");
    app->add_option("--sim-warmup", warmup, "Packets created before this time are not measured");
    app->add_option("--buffer", buffer, "Egress queue size in packets");
    app->add_option("--size-law", size_law, "Packet sizes: exponential or fixed")
        ->check(CLI::IsMember({"exponential", "fixed"}));
  }
  SimConfig config() const {
    SimConfig c;
    c.duration = duration;
    c.warmup = warmup;
    c.buffer_packets = buffer;
    c.size_law = size_law == "fixed" ? PacketSizeLaw::fixed : PacketSizeLaw::exponential;
    c.validate();
    return c;
  }
};

struct NetworkFlags {
  std::string topology = "testbed8";
  double capacity = 6.0;
  double ti = 16.0;

  void add(CLI::App* app) {
    app->add_option("--topology", topology, "nsf, testbed8, testbed10, ringN, lineN or starN");
    app->add_option("--capacity", capacity, "Link capacity");
    app->add_option("--ti", ti, "Traffic intensity of the generated traffic matrix");
  }
  Topology build() const { return topologies::by_name(topology, capacity); }
};

struct EvaluatorFlags {
  std::string kind = "model";
  std::string ckpt;
  std::string jitter_ckpt;
  int mc = 50;

  void add(CLI::App* app) {
    app->add_option("--evaluator", kind, "model (MC-dropout predictions) or simulator")
        ->check(CLI::IsMember({"model", "simulator"}));
    app->add_option("--ckpt", ckpt, "Delay checkpoint");
    app->add_option("--jitter-ckpt", jitter_ckpt, "Jitter checkpoint (jitter objectives)");
    app->add_option("--mc", mc, "MC-dropout samples per prediction");
  }
  std::unique_ptr<Evaluator> build(const SimConfig& sim, std::uint64_t seed) const {
    if (kind == "simulator") return std::make_unique<SimulatorEvaluator>(sim, seed);
    std::optional<Checkpoint> d, j;
    if (!ckpt.empty()) d = load_checkpoint(ckpt);
    if (!jitter_ckpt.empty()) j = load_checkpoint(jitter_ckpt);
    if (!d && !j) throw ConfigError("the model evaluator needs --ckpt and/or --jitter-ckpt");
    return std::make_unique<ModelEvaluator>(std::move(d), std::move(j), mc);
  }
};

fs::path out_dir(const Common& c, const char* fallback) {
  fs::path dir = c.out.empty() ? fs::path(fallback) : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  AtomicFileWriter w(path);
  w.stream() << text;
  w.commit();
}

std::vector<Sample> load_samples(const std::string& path) {
  if (path.empty()) throw ConfigError("a dataset file is required (--data)");
  auto samples = read_dataset(path);
  if (samples.empty()) throw DataError("dataset '" + path + "' has no samples");
  return samples;
}

std::string label_summary(const std::vector<Sample>& samples) {
  auto line = [&](const char* name, Target t) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    std::size_t n = 0;
    for (const Sample& s : samples) {
      for (double v : target_labels(s, t)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++n;
      }
    }
    std::ostringstream os;
    os << std::setprecision(6) << name << " mean " << sum / static_cast<double>(n) << " min " << lo << " max " << hi
       << '\n';
    return os.str();
  };
  std::uint64_t dropped = 0, generated = 0;
  for (const Sample& s : samples) {
    for (const PairStats& p : s.labels.pairs) {
      dropped += p.dropped;
      generated += p.generated;
    }
  }
  std::ostringstream os;
  os << line("delay", Target::delay) << line("jitter", Target::jitter) << std::setprecision(6) << "drop rate "
     << (generated ? static_cast<double>(dropped) / static_cast<double>(generated) : 0.0) << '\n';
  return os.str();
}

TrafficMatrix scenario_tm(const Topology& topo, double ti, std::uint64_t seed) {
  return generate_tm(topo.node_count(), ti, derive_seed(seed, 100));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-network performance model: simulate, train, evaluate, optimize"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed, --out and --config may follow the subcommand
  app.set_config("--config", "", "TOML/INI file with option values; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  Common common;
  app.add_option("--seed", common.seed, "Master seed")->capture_default_str();
  app.add_option("--out", common.out, "Output file (simulate) or directory (other commands)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a labelled JSON-lines dataset");
  std::string sim_topology = "random";
  int sim_nodes = 0;
  double sim_degree = 3.6, sim_capacity = 6.0;
  int sim_routings = 10, sim_samples = 1;
  std::string sim_ti = "8:16";
  SimFlags sim_flags;
  sim->add_option("--topology", sim_topology, "random, nsf, testbed8, testbed10, ringN, lineN or starN");
  sim->add_option("--nodes", sim_nodes, "Node count (random topology)");
  sim->add_option("--degree", sim_degree, "Mean node degree (random topology)");
  sim->add_option("--capacity", sim_capacity, "Link capacity");
  sim->add_option("--routings", sim_routings, "Random-weight shortest-path routings");
  sim->add_option("--ti", sim_ti, "Traffic intensities: a:b, a:b:step, a,b,c or a single value");
  sim->add_option("--samples", sim_samples, "Samples per (routing, TI)");
  sim_flags.add(sim);

  // train
  auto* tr = app.add_subcommand("train", "Train a model (from scratch or from --init)");
  std::string tr_data, tr_val, tr_target = "delay", tr_init, tr_scope = "readout";
  TrainConfig tc;
  ModelConfig mc;
  std::int64_t tr_switch = 0;
  tr->add_option("--data", tr_data, "Training dataset (JSON lines)");
  tr->add_option("--val", tr_val, "Validation dataset for periodic eval MSE");
  tr->add_option("--target", tr_target, "delay or jitter")->check(CLI::IsMember({"delay", "jitter"}));
  tr->add_option("--init", tr_init, "Start from this checkpoint (e.g. an early delay model for jitter transfer)");
  tr->add_option("--steps", tc.total_steps, "Training steps");
  tr->add_option("--batch", tc.batch_size, "Samples per batch");
  tr->add_option("--lr", tc.lr, "Initial learning rate");
  tr->add_option("--lr-after", tc.lr_after, "Learning rate after the switch step");
  tr->add_option("--lr-switch", tr_switch, "Switch step (default: half of --steps)");
  tr->add_option("--l2", tc.l2_lambda, "L2 weight-decay coefficient");
  tr->add_option("--l2-scope", tr_scope, "all or readout")->check(CLI::IsMember({"all", "readout"}));
  tr->add_option("--eval-every", tc.eval_every, "Steps between eval/checkpoint");
  tr->add_option("--early-fraction", tc.early_fraction, "Step fraction of the saved early checkpoint");
  tr->add_option("--iterations", mc.iterations, "Message-passing rounds");
  tr->add_option("--path-dim", mc.dim_hp, "Path state width");
  tr->add_option("--link-dim", mc.dim_hl, "Link state width");
  tr->add_option("--readout-width", mc.readout_width, "Readout hidden width");
  tr->add_option("--dropout", mc.dropout, "Readout dropout rate");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string ev_ckpt, ev_data;
  int ev_mc = 50;
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint");
  ev->add_option("--data", ev_data, "Dataset (JSON lines)");
  ev->add_option("--mc", ev_mc, "MC-dropout samples");

  // optimize
  auto* op = app.add_subcommand("optimize", "Pick the best routing among candidates");
  NetworkFlags op_net;
  EvaluatorFlags op_eval;
  SimFlags op_sim;
  std::string op_objective = "mean-delay", op_sla;
  double op_bound = std::numeric_limits<double>::infinity();
  int op_candidates = 100;
  bool op_verify = false;
  op_net.add(op);
  op_eval.add(op);
  op_sim.add(op);
  op->add_option("--objective", op_objective, "mean-delay, max-delay, mean-jitter or max-jitter");
  op->add_option("--candidates", op_candidates, "Candidate routings (hop-count shortest path first)");
  op->add_option("--sla", op_sla, "Constrained pairs, e.g. 0-3,3-4");
  op->add_option("--sla-bound", op_bound, "Delay bound for the SLA pairs");
  op->add_flag("--verify", op_verify, "Simulate the winner");

  // whatif
  auto* wi = app.add_subcommand("whatif", "What-if analyses");
  wi->require_subcommand(1);
  NetworkFlags wi_net;
  EvaluatorFlags wi_eval;
  SimFlags wi_sim;
  std::string wi_objective = "mean-delay";
  int wi_candidates = 20;
  auto add_shared = [&](CLI::App* c) {
    wi_net.add(c);
    wi_eval.add(c);
    wi_sim.add(c);
    c->add_option("--objective", wi_objective, "mean-delay, max-delay, mean-jitter or max-jitter");
    c->add_option("--candidates", wi_candidates, "Candidate routings per optimization");
  };
  auto* wu = wi->add_subcommand("add-users", "Scale demand node by node until a delay bound breaks");
  std::string wu_users = "0";
  double wu_factor = 2.5, wu_bound = std::numeric_limits<double>::infinity();
  add_shared(wu);
  wu->add_option("--users", wu_users, "Nodes receiving users, in order, e.g. 10,2,8");
  wu->add_option("--factor", wu_factor, "Demand multiplier per user");
  wu->add_option("--bound", wu_bound, "Objective bound");
  auto* wl = wi->add_subcommand("add-link", "Best placement of one new bidirectional link");
  std::string wl_pairs = "all";
  add_shared(wl);
  wl->add_option("--pairs", wl_pairs, "all, or candidate node pairs e.g. 1-9,2-3");
  auto* wf = wi->add_subcommand("link-failures", "Optimized objective under random edge failures");
  std::string wf_failures = "1";
  int wf_trials = 10;
  add_shared(wf);
  wf->add_option("--failures", wf_failures, "Failed edges per trial; a list or range sweeps several counts");
  wf->add_option("--trials", wf_trials, "Trials per failure count");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (sim->parsed()) {
      if (common.out.empty()) throw ConfigError("simulate needs --out <file>");
      Topology topo;
      if (sim_topology == "random") {
        if (sim_nodes < 2) throw ConfigError("random topology needs --nodes >= 2");
        topo = topologies::random_connected(sim_nodes, sim_degree, derive_seed(common.seed, 10), sim_capacity);
      } else {
        topo = topologies::by_name(sim_topology, sim_capacity);
        if (sim_nodes != 0 && sim_nodes != topo.node_count()) {
          throw ConfigError("--nodes does not match topology '" + sim_topology + "'");
        }
      }
      if (sim_routings < 1 || sim_samples < 1) throw ConfigError("--routings and --samples must be >= 1");
      DatasetSpec spec;
      spec.topologies = {topo};
      spec.routings = {random_routing_variants(topo, sim_routings, derive_seed(common.seed, 11))};
      spec.ti_list = parse_number_list(sim_ti);
      spec.samples_per_cell = sim_samples;
      spec.config = sim_flags.config();
      spec.seed = derive_seed(common.seed, 12);
      std::vector<Sample> samples;
      AtomicFileWriter w(common.out);
      generate_dataset(spec, [&](Sample&& s) {
        w.stream() << sample_to_json(s).dump() << '\n';
        samples.push_back(std::move(s));
      });
      w.commit();
      out << "wrote " << samples.size() << " samples to " << common.out << '\n';
      if (!samples.empty()) out << label_summary(samples);
      return kExitOk;
    }

    if (tr->parsed()) {
      const fs::path dir = out_dir(common, "train_out");
      tc.seed = common.seed;
      tc.l2_scope = l2_scope_from_string(tr_scope);
      tc.lr_switch_step = tr_switch > 0 ? tr_switch : std::max<std::int64_t>(1, tc.total_steps / 2);
      tc.validate();
      auto train_set = load_samples(tr_data);
      std::vector<Sample> val;
      if (!tr_val.empty()) val = load_samples(tr_val);
      TrainHooks hooks;
      hooks.log = [&](const std::string& line) { err << line << '\n'; };
      hooks.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(c, dir / "latest.ckpt"); };
      const Target target = target_from_string(tr_target);
      TrainResult r = tr_init.empty() ? train(train_set, val, mc, target, tc, hooks)
                                      : fine_tune(load_checkpoint(tr_init), train_set, val, target, tc, hooks);
      save_checkpoint(r.final, dir / "model.ckpt");
      if (r.early) save_checkpoint(*r.early, dir / "early.ckpt");
      write_loss_curve_csv(r.curve, dir / "loss_curve.csv");
      out << "trained " << r.final.step << " steps; final smoothed MSE " << r.curve.back().smoothed << '\n';
      out << "checkpoint " << (dir / "model.ckpt").string() << '\n';
      return kExitOk;
    }

    if (ev->parsed()) {
      const fs::path dir = out_dir(common, "eval_out");
      if (ev_ckpt.empty()) throw ConfigError("eval needs --ckpt");
      auto ckpt = load_checkpoint(ev_ckpt);
      auto samples = load_samples(ev_data);
      auto report = evaluate(ckpt, samples, ev_mc, common.seed);
      const std::string summary = "target " + to_string(ckpt.target) + '\n' + format_summary(report);
      write_residuals_csv(report, dir / "residuals.csv");
      write_text(dir / "summary.txt", summary);
      out << summary;
      return kExitOk;
    }

    if (op->parsed()) {
      const fs::path dir = out_dir(common, "optimize_out");
      const Topology topo = op_net.build();
      const TrafficMatrix tm = scenario_tm(topo, op_net.ti, common.seed);
      const SimConfig simc = op_sim.config();
      auto evaluator = op_eval.build(simc, derive_seed(common.seed, 101));
      auto candidates = candidate_routings(topo, op_candidates, derive_seed(common.seed, 102));
      const Objective objective = objective_from_string(op_objective);
      SlaSpec sla;
      if (!op_sla.empty()) sla.pairs = parse_pair_list(op_sla);
      sla.delay_bound = op_bound;
      auto report = optimize_with_sla(*evaluator, topo, tm, candidates, sla, objective, derive_seed(common.seed, 103));
      if (op_verify) verify_winner(report, topo, tm, candidates, simc, derive_seed(common.seed, 104));
      const std::size_t baseline = utilization_baseline(topo, tm, candidates, objective);
      std::string summary = format_summary(report);
      summary += "utilization baseline candidate " + std::to_string(baseline) + '\n';
      write_report_csv(report, dir / "report.csv");
      write_text(dir / "summary.txt", summary);
      out << summary;
      return kExitOk;
    }

    if (wi->parsed()) {
      const fs::path dir = out_dir(common, "whatif_out");
      const Topology topo = wi_net.build();
      const TrafficMatrix tm = scenario_tm(topo, wi_net.ti, common.seed);
      const SimConfig simc = wi_sim.config();
      auto evaluator = wi_eval.build(simc, derive_seed(common.seed, 101));
      const Objective objective = objective_from_string(wi_objective);
      std::ostringstream csv, text;
      csv << std::setprecision(17);
      text << std::setprecision(6);
      if (wu->parsed()) {
        std::vector<int> nodes;
        for (double v : parse_number_list(wu_users)) nodes.push_back(static_cast<int>(v));
        auto candidates = candidate_routings(topo, wi_candidates, derive_seed(common.seed, 102));
        auto r = whatif_add_users(*evaluator, topo, candidates, tm, nodes, wu_factor, wu_bound, objective,
                                  derive_seed(common.seed, 103));
        csv << "users,node,winner,objective,mean_delay,max_delay\n";
        for (const UserStep& s : r.steps) {
          csv << s.users << ',' << s.node << ',' << s.winner << ',' << s.objective << ',' << s.mean_delay << ','
              << s.max_delay << '\n';
          text << "users " << s.users << " objective " << s.objective << '\n';
        }
        if (r.first_breaking) {
          text << "bound first exceeded with " << *r.first_breaking << " users\n";
        } else {
          text << "bound never exceeded\n";
        }
        write_text(dir / "add_users.csv", csv.str());
      } else if (wl->parsed()) {
        std::vector<Edge> pairs;
        if (wl_pairs == "all") {
          pairs = unlinked_pairs(topo);
        } else {
          for (auto [u, v] : parse_pair_list(wl_pairs)) pairs.emplace_back(u, v);
        }
        if (pairs.empty()) throw ConfigError("no candidate node pairs to link");
        auto r = whatif_add_link(*evaluator, topo, tm, pairs, objective, wi_candidates, derive_seed(common.seed, 103));
        csv << "u,v,objective,winner\n";
        for (const Placement& p : r.placements) csv << p.u << ',' << p.v << ',' << p.objective << ',' << p.winner << '\n';
        text << "objective before " << r.before << '\n';
        text << "best placement " << r.best->u << '-' << r.best->v << " objective " << r.best->objective
             << " reduction " << 100.0 * r.reduction << "%\n";
        write_text(dir / "add_link.csv", csv.str());
      } else {
        csv << "failures,trial,failed_links,winner,objective\n";
        for (double f : parse_number_list(wf_failures)) {
          const int n = static_cast<int>(f);
          auto r = link_failure_sweep(*evaluator, topo, tm, n, wf_trials, wi_candidates, objective,
                                      derive_seed(common.seed, 200 + static_cast<std::uint64_t>(n)));
          for (std::size_t t = 0; t < r.trials.size(); ++t) {
            csv << n << ',' << t << ',';
            for (std::size_t k = 0; k < r.trials[t].failed_links.size(); ++k) {
              csv << (k ? " " : "") << r.trials[t].failed_links[k];
            }
            csv << ',' << r.trials[t].winner << ',' << r.trials[t].best_objective << '\n';
          }
          text << "failures " << n << " mean " << r.mean_objective << " max " << r.max_objective << '\n';
        }
        write_text(dir / "link_failures.csv", csv.str());
      }
      write_text(dir / "summary.txt", text.str());
      out << text.str();
      return kExitOk;
    }
  } catch (const VersionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitVersion;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace netgnn
