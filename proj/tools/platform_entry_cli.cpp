// platform-entry: command-line front end.
//
//   gittins   per-product indices under a platform policy
//   optimize  optimal entry policy for a single-seller market
//   table     reference-market table rows
//   gen-env   two-seller scenario generation
//   sweep     entry-time sweep over trained equilibria
//   train     independent training with checkpoints
//   simulate  random-action episode written as a trajectory log
//   replay    re-simulate and check a trajectory log
//
// PLATFORM_ENTRY_WORKERS sets the sweep worker count.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "platform_entry/config_io.hpp"
#include "platform_entry/experiment.hpp"
#include "platform_entry/gittins.hpp"
#include "platform_entry/market_game.hpp"
#include "platform_entry/marl_trainer.hpp"
#include "platform_entry/markets.hpp"
#include "platform_entry/platform_optimizer.hpp"
#include "platform_entry/scenario.hpp"
#include "platform_entry/seller_sim.hpp"

using namespace platform_entry;
using nlohmann::json;

namespace {

struct MarketSource {
  std::string config_path;
  std::string market;

  void add_to(CLI::App* app) {
    auto* c = app->add_option("--config", config_path, "market config JSON");
    auto* m = app->add_option("--market", market, "reference market")->check(CLI::IsMember({"AB", "3A1B", "1A3B"}));
    c->excludes(m);
  }

  MarketConfig load() const {
    if (!config_path.empty()) return load_config(config_path);
    if (market == "AB") return markets::toy_ab();
    if (market == "3A1B") return markets::market_3a1b();
    if (market == "1A3B") return markets::market_1a3b();
    throw std::invalid_argument("give --config or --market");
  }
};

EntryTime parse_entry(const std::string& s) {
  if (s == "inf" || s == "never") return EntryTime::never();
  return EntryTime(std::stoi(s));
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int v = std::stoi(s);
    return {v, v};
  }
  return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json metrics_json(const PlatformPolicy& p, const SingleSellerMetrics& m) {
  return {{"policy", encode(p)},
          {"platform", m.platform_utility},
          {"seller", m.seller_utility},
          {"buyer", m.buyer_utility},
          {"explored", m.products_explored}};
}

struct TrainingFlags {
  std::string optimizer = "adam";
  double lr = 0.0;
  double reward_scale = 0.0;
  int episodes = 0;
  int max_rounds = 0;

  void add_to(CLI::App* app) {
    app->add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
    app->add_option("--lr", lr, "learning rate (default by optimizer)");
    app->add_option("--reward-scale", reward_scale, "reward multiplier inside TD targets");
    app->add_option("--train-episodes", episodes, "independent-training episodes per round");
    app->add_option("--max-rounds", max_rounds, "best-response rounds");
  }

  Hyperparameters build() const {
    Hyperparameters h = desk_hyperparameters();
    if (optimizer == "sgd") {
      h.optimizer = OptimizerKind::kSgd;
      h.lr = 1e-4;
      h.reward_scale = 1.0;
    }
    if (lr > 0.0) h.lr = lr;
    if (reward_scale > 0.0) h.reward_scale = reward_scale;
    if (episodes > 0) h.episodes_per_round = episodes;
    if (max_rounds > 0) h.max_rounds = max_rounds;
    h.validate();
    return h;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Platform entry policies, seller exploration and market-game experiments"};
  app.require_subcommand(1);

  // gittins
  auto* gittins = app.add_subcommand("gittins", "print the index of every product in every state");
  MarketSource g_src;
  g_src.market = "AB";
  g_src.add_to(gittins);
  std::string g_entry = "inf";
  double g_alpha = 0.0;
  gittins->add_option("--entry", g_entry, "entry time (integer or inf)");
  gittins->add_option("--alpha", g_alpha, "transaction fee")->check(CLI::Range(0.0, 1.0));

  // optimize
  auto* opt = app.add_subcommand("optimize", "optimal platform policy for a single-seller market");
  MarketSource o_src;
  o_src.market = "AB";
  o_src.add_to(opt);
  std::string o_setting = "global";
  double o_cap = -1.0;
  int o_floor = 0;
  int o_tmax = 30;
  opt->add_option("--setting", o_setting, "policy class")->check(CLI::IsMember({"global", "fee", "hetero"}));
  opt->add_option("--alpha-cap", o_cap, "largest fee allowed")->check(CLI::Range(0.0, 1.0));
  opt->add_option("--entry-floor", o_floor, "earliest entry time allowed")->check(CLI::PositiveNumber);
  opt->add_option("--t-max", o_tmax, "latest finite entry time searched")->check(CLI::PositiveNumber);

  // table
  auto* table = app.add_subcommand("table", "reference-market table rows");
  std::string t_env;
  table->add_option("--env", t_env, "market")->required()->check(CLI::IsMember({"3A1B", "1A3B"}));

  // gen-env
  auto* gen = app.add_subcommand("gen-env", "generate a two-seller scenario");
  std::string gen_kind;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  int gen_controls = 3;
  double gen_gbar = 50.0;
  gen->add_option("--kind", gen_kind, "scenario kind")->required()->check(CLI::IsMember({"c1", "c2", "d1", "d2"}));
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--controls", gen_controls, "control products")->check(CLI::NonNegativeNumber);
  gen->add_option("--g-bar", gen_gbar, "index threshold");
  gen->add_option("--out", gen_out, "output file (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "entry-time sweep over trained equilibria");
  std::string s_config, s_tp = "1..15", s_csv, s_json, s_solver = "marl", s_eval = "mc";
  int s_seeds = 5, s_episodes = 4000;
  std::uint64_t s_seed = 0;
  TrainingFlags s_train;
  sweep->add_option("--config", s_config, "market config JSON")->required();
  sweep->add_option("--tp", s_tp, "entry times, e.g. 1..15");
  sweep->add_option("--seeds", s_seeds, "training seeds per entry time")->check(CLI::PositiveNumber);
  sweep->add_option("--episodes", s_episodes, "evaluation episodes per entry time")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", s_seed, "first training seed");
  sweep->add_option("--solver", s_solver, "marl, or exact for one seller")->check(CLI::IsMember({"marl", "exact"}));
  sweep->add_option("--eval", s_eval, "mc or exact evaluation")->check(CLI::IsMember({"mc", "exact"}));
  sweep->add_option("--csv", s_csv, "CSV output (default stdout)");
  sweep->add_option("--json", s_json, "JSON output");
  s_train.add_to(sweep);

  // train
  auto* train = app.add_subcommand("train", "independent training with checkpoints");
  std::string tr_config, tr_entry = "8", tr_ckpt, tr_resume;
  std::uint64_t tr_seed = 0;
  int tr_episodes = 1000;
  TrainingFlags tr_flags;
  train->add_option("--config", tr_config, "market config JSON");
  train->add_option("--entry", tr_entry, "entry time");
  train->add_option("--seed", tr_seed, "training seed");
  train->add_option("--episodes", tr_episodes, "episodes to run")->check(CLI::NonNegativeNumber);
  train->add_option("--checkpoint", tr_ckpt, "write a checkpoint here");
  train->add_option("--resume", tr_resume, "continue from this checkpoint")->excludes("--config");
  tr_flags.add_to(train);

  // simulate
  auto* sim = app.add_subcommand("simulate", "random-action episode written as a trajectory log");
  MarketSource sim_src;
  std::string sim_entry = "8", sim_log;
  std::uint64_t sim_seed = 0;
  sim_src.add_to(sim);
  sim->add_option("--entry", sim_entry, "entry time");
  sim->add_option("--seed", sim_seed, "episode seed");
  sim->add_option("--log", sim_log, "log file")->required();

  // replay
  auto* rep = app.add_subcommand("replay", "re-simulate and check a trajectory log");
  std::string rep_log;
  rep->add_option("--log", rep_log, "log file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gittins) {
      const auto cfg = g_src.load();
      const auto entry = parse_entry(g_entry);
      const double gamma = cfg.discounts.gamma_seller;
      std::printf("%-8s %-6s %12s  %s\n", "product", "state", "index", "rule");
      for (std::size_t j = 0; j < cfg.n_products(); ++j) {
        const auto& p = cfg.products[j];
        const auto u = index_undeveloped(p, cfg.cost(0, j), gamma, entry, g_alpha);
        std::printf("%-8zu %-6s %12.6f  %s\n", j, "U", u.value, to_string(u.rule));
        for (auto s : {ProductState::kGood, ProductState::kBad, ProductState::kEntered})
          std::printf("%-8zu %-6c %12.6f  %s\n", j, state_letter(s),
                      index_state(p, cfg.cost(0, j), gamma, s, entry.as_real(), g_alpha), "-");
      }
      return 0;
    }
    if (*opt) {
      const auto cfg = o_src.load();
      const PolicySetting setting = o_setting == "fee"      ? PolicySetting::kGlobalFee
                                    : o_setting == "hetero" ? PolicySetting::kHeterogeneous
                                                            : PolicySetting::kGlobal;
      OptimizeConstraints c;
      if (o_cap >= 0.0) c.alpha_cap = o_cap;
      if (o_floor > 0) c.entry_floor = o_floor;
      PolicyBounds bounds;
      bounds.t_max = o_tmax;
      const auto r = optimize(cfg, setting, c, bounds);
      std::cout << metrics_json(r.policy, r.metrics).dump(2) << '\n';
      return 0;
    }
    if (*table) {
      json rows = json::array();
      for (const auto& r : reproduce_tables(t_env))
        rows.push_back({{"row", r.label},
                        {"policy", encode(r.policy)},
                        {"platform", r.platform},
                        {"seller", r.seller},
                        {"buyer", r.buyer},
                        {"explored", r.explored}});
      std::cout << rows.dump(2) << '\n';
      return 0;
    }
    if (*gen) {
      ScenarioParams params;
      params.n_control = static_cast<std::size_t>(gen_controls);
      params.g_bar = gen_gbar;
      const auto spec = generate(scenario_kind_from_string(gen_kind), gen_seed, params);
      write_text(gen_out, encode(spec).dump(2) + "\n");
      return 0;
    }
    if (*sweep) {
      SweepOptions o;
      std::tie(o.tp_first, o.tp_last) = parse_range(s_tp);
      o.seeds = s_seeds;
      o.eval_episodes = s_episodes;
      o.base_seed = s_seed;
      o.solver = s_solver == "exact" ? SweepSolver::kExact : SweepSolver::kMarl;
      o.eval = s_eval == "exact" ? EvalMode::kExact : EvalMode::kMonteCarlo;
      o.hyper = s_train.build();
      o.workers = workers_from_env();
      const auto report = sweep_tp(load_config(s_config), o);
      write_text(s_csv, sweep_csv(report));
      if (!s_json.empty()) write_text(s_json, encode(report).dump(2) + "\n");
      for (const auto& c : report.cells)
        if (!c.has_output) std::cerr << "cell tp=" << c.tp << " seed=" << c.seed << " failed: " << c.error << '\n';
      auto star = [](const std::optional<int>& t) { return t ? std::to_string(*t) : std::string("none"); };
      std::cerr << "T_p* platform " << star(report.tp_star_platform) << ", welfare " << star(report.tp_star_welfare) << '\n';
      return report.all_cells_have_output() ? 0 : 2;
    }
    if (*train) {
      auto make = [&] {
        if (!tr_resume.empty()) return load_checkpoint(tr_resume);
        if (tr_config.empty()) throw std::invalid_argument("give --config or --resume");
        return IndependentTrainer(MarketEnv{load_config(tr_config), parse_entry(tr_entry)}, tr_flags.build(), tr_seed);
      };
      auto trainer = make();
      const auto curve = trainer.train(tr_episodes);
      const auto values = seller_values(trainer.networks(), trainer.env());
      json out = {{"episodes_done", trainer.episodes_done()}, {"epsilon", trainer.epsilon()}, {"seller_values", values}};
      if (!curve.empty()) out["last_episode_return"] = curve.back();
      std::cout << out.dump(2) << '\n';
      if (!tr_ckpt.empty()) save_checkpoint(trainer, tr_ckpt);
      return 0;
    }
    if (*sim) {
      MarketGame game(sim_src.load(), parse_entry(sim_entry), sim_seed);
      std::ofstream out(sim_log);
      if (!out) throw std::runtime_error("cannot write " + sim_log);
      TrajectoryLog log(out);
      log.header(game);
      std::mt19937_64 rng(sim_seed ^ 0x5bd1e995ULL);
      const auto m = static_cast<std::uint64_t>(game.config().n_products() + 1);
      while (!game.done()) {
        JointAction a(game.config().n_sellers);
        for (auto& x : a) x = static_cast<int>(rng() % m);
        const int t = game.state().t;
        log.record(t, a, game.step(a));
      }
      return 0;
    }
    if (*rep) {
      const auto report = replay_file(rep_log);
      std::cout << "steps " << report.steps << ", mismatches " << report.mismatches.size() << '\n';
      for (const auto& m : report.mismatches) std::cout << "  " << m << '\n';
      return report.ok() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
