#pragma once

// Reproduction drivers: the reference-market tables and entry-time sweeps
// over trained seller equilibria, with CSV and JSON output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "platform_entry/config_io.hpp"
#include "platform_entry/core_types.hpp"
#include "platform_entry/marl_trainer.hpp"
#include "platform_entry/markets.hpp"
#include "platform_entry/platform_optimizer.hpp"
#include "platform_entry/profile_eval.hpp"
#include "platform_entry/seller_sim.hpp"

namespace platform_entry {

// ---- reference tables -----------------------------------------------------

struct TableRow {
  std::string label;
  PlatformPolicy policy;
  double platform = 0.0;
  double seller = 0.0;
  double buyer = 0.0;
  double explored = 0.0;
};

/// Five rows per market: no entry, optimal global entry, global entry with a
/// fee, heterogeneous entry, and a constrained variant (fee capped at 0.2 for
/// 3A1B, entry no earlier than 5 for 1A3B).
inline std::vector<TableRow> reproduce_tables(const std::string& which) {
  MarketConfig config;
  OptimizeConstraints constrained;
  PolicySetting constrained_setting;
  std::string constrained_label;
  if (which == "3A1B") {
    config = markets::market_3a1b();
    constrained.alpha_cap = 0.2;
    constrained_setting = PolicySetting::kGlobalFee;
    constrained_label = "fee cap 0.2";
  } else if (which == "1A3B") {
    config = markets::market_1a3b();
    constrained.entry_floor = 5;
    constrained_setting = PolicySetting::kHeterogeneous;
    constrained_label = "entry floor 5";
  } else {
    throw std::invalid_argument("unknown table '" + which + "' (expected 3A1B or 1A3B)");
  }

  auto row = [&](std::string label, const PlatformPolicy& p) {
    const auto m = evaluate_exact(p, config);
    return TableRow{std::move(label), p, m.platform_utility, m.seller_utility, m.buyer_utility, m.products_explored};
  };
  std::vector<TableRow> rows;
  rows.push_back(row("no entry", no_entry_policy()));
  rows.push_back(row("global", optimize(config, PolicySetting::kGlobal).policy));
  rows.push_back(row("global + fee", optimize(config, PolicySetting::kGlobalFee).policy));
  rows.push_back(row("heterogeneous", optimize(config, PolicySetting::kHeterogeneous).policy));
  rows.push_back(row(constrained_label, optimize(config, constrained_setting, constrained).policy));
  return rows;
}

// ---- sweeps ---------------------------------------------------------------

enum class SweepSolver { kMarl, kExact };
enum class EvalMode { kMonteCarlo, kExact };

struct SweepOptions {
  int tp_first = 1;
  int tp_last = 15;
  int seeds = 5;
  /// Evaluation episodes per entry time, split evenly across seeds.
  int eval_episodes = 4000;
  std::uint64_t base_seed = 0;
  Hyperparameters hyper;
  SweepSolver solver = SweepSolver::kMarl;
  EvalMode eval = EvalMode::kMonteCarlo;
  unsigned workers = 1;
};

struct SweepCell {
  int tp = 0;
  std::uint64_t seed = 0;
  bool has_output = false;
  std::string error;
  bool converged = false;
  double max_regret = std::numeric_limits<double>::quiet_NaN();
  int rounds = 0;
  EpisodeMetrics metrics;
};

struct Stat {
  double min = 0.0, mean = 0.0, max = 0.0;
};

struct SweepAggregate {
  int tp = 0;
  int n_converged = 0;
  Stat platform, seller, buyer, welfare, explored, variety, cluster;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  std::vector<SweepAggregate> aggregates;  // only entry times with a converged cell
  std::optional<int> tp_star_platform;
  std::optional<int> tp_star_welfare;

  bool all_cells_have_output() const {
    return std::all_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.has_output; });
  }
};

/// Worker count from PLATFORM_ENTRY_WORKERS, else the hardware count.
inline unsigned workers_from_env() {
  if (const char* v = std::getenv("PLATFORM_ENTRY_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n >= 1) return static_cast<unsigned>(n);
    throw std::invalid_argument("PLATFORM_ENTRY_WORKERS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(k) for k in [0, n) on a pool of `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t k = next++; k < n; k = next++) fn(k);
  };
  const unsigned extra = std::min<unsigned>(workers, static_cast<unsigned>(n)) - (n > 0 ? 1 : 0);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < extra; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

namespace detail {

inline Stat stat_of(const std::vector<double>& v) {
  Stat s{v.front(), 0.0, v.front()};
  for (double x : v) {
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
    s.mean += x;
  }
  s.mean /= static_cast<double>(v.size());
  return s;
}

inline void run_cell(const MarketConfig& config, const SweepOptions& opt, SweepCell& cell) {
  const MarketEnv env{config, EntryTime(cell.tp)};
  if (opt.solver == SweepSolver::kExact) {
    const auto m = evaluate_exact(GlobalEntry{env.entry}, config);
    cell.metrics.seller_utility = {m.seller_utility};
    cell.metrics.platform_utility = m.platform_utility;
    cell.metrics.buyer_utility = m.buyer_utility;
    cell.metrics.products_explored = m.products_explored / static_cast<double>(config.n_products());
    cell.metrics.product_variety = std::numeric_limits<double>::quiet_NaN();  // not tracked by the exact solver
    cell.converged = true;
    cell.max_regret = 0.0;
    return;
  }
  const auto eq = find_equilibrium(env, opt.hyper, cell.seed);
  cell.converged = eq.converged;
  cell.rounds = eq.rounds;
  cell.max_regret = eq.regrets_evaluated ? eq.max_regret() : std::numeric_limits<double>::quiet_NaN();
  const auto policy = greedy_profile(eq.policies, env);
  if (opt.eval == EvalMode::kExact) {
    cell.metrics = evaluate_profile_exact(config, env.entry, policy);
    return;
  }
  const int n_eval = std::max(1, opt.eval_episodes / std::max(1, opt.seeds));
  std::vector<Episode> episodes;
  for (int e = 0; e < n_eval; ++e)
    episodes.push_back(simulate_episode(config, env.entry, policy, mix_seed(cell.seed, 5000 + static_cast<std::uint64_t>(e))));
  cell.metrics = metrics_from_episodes(episodes, config);
}

}  // namespace detail

/// Aggregates converged cells per entry time and picks the platform- and
/// welfare-optimal entry times (earliest on ties).
inline void aggregate(SweepReport& report) {
  report.aggregates.clear();
  std::vector<int> tps;
  for (const auto& c : report.cells) tps.push_back(c.tp);
  std::sort(tps.begin(), tps.end());
  tps.erase(std::unique(tps.begin(), tps.end()), tps.end());
  for (int tp : tps) {
    std::vector<double> pl, se, bu, we, ex, va, cl;
    for (const auto& c : report.cells) {
      if (c.tp != tp || !c.has_output || !c.converged) continue;
      pl.push_back(c.metrics.platform_utility);
      se.push_back(c.metrics.seller_total());
      bu.push_back(c.metrics.buyer_utility);
      we.push_back(c.metrics.welfare());
      ex.push_back(c.metrics.products_explored);
      va.push_back(c.metrics.product_variety);
      cl.push_back(c.metrics.cluster_rate);
    }
    if (pl.empty()) continue;
    using detail::stat_of;
    report.aggregates.push_back({tp, static_cast<int>(pl.size()), stat_of(pl), stat_of(se), stat_of(bu), stat_of(we),
                                 stat_of(ex), stat_of(va), stat_of(cl)});
  }
  report.tp_star_platform.reset();
  report.tp_star_welfare.reset();
  double best_p = -std::numeric_limits<double>::infinity(), best_w = best_p;
  for (const auto& a : report.aggregates) {
    if (a.platform.mean > best_p) {
      best_p = a.platform.mean;
      report.tp_star_platform = a.tp;
    }
    if (a.welfare.mean > best_w) {
      best_w = a.welfare.mean;
      report.tp_star_welfare = a.tp;
    }
  }
}

/// One cell per (entry time, seed). The exact solver needs a single seller
/// and runs one cell per entry time.
inline SweepReport sweep_tp(const MarketConfig& config, const SweepOptions& opt) {
  require_valid(config);
  if (opt.tp_first < 1 || opt.tp_last < opt.tp_first) throw std::invalid_argument("entry-time range must satisfy 1 <= first <= last");
  if (opt.seeds < 1) throw std::invalid_argument("need at least one seed");
  if (opt.eval_episodes < 1) throw std::invalid_argument("need at least one evaluation episode");
  if (opt.solver == SweepSolver::kExact && config.n_sellers != 1)
    throw std::invalid_argument("the exact solver handles a single seller only");
  opt.hyper.validate();

  SweepReport report;
  const int seeds = opt.solver == SweepSolver::kExact ? 1 : opt.seeds;
  for (int tp = opt.tp_first; tp <= opt.tp_last; ++tp)
    for (int s = 0; s < seeds; ++s) {
      SweepCell c;
      c.tp = tp;
      c.seed = opt.base_seed + static_cast<std::uint64_t>(s);
      report.cells.push_back(c);
    }
  parallel_for(report.cells.size(), opt.workers, [&](std::size_t k) {
    auto& cell = report.cells[k];
    try {
      detail::run_cell(config, opt, cell);
      cell.has_output = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  aggregate(report);
  return report;
}

// ---- output ---------------------------------------------------------------

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::string sweep_csv(const SweepReport& r) {
  using detail::num;
  std::ostringstream os;
  os << "row,tp,seed,converged,max_regret,rounds,platform,seller,buyer,welfare,products_explored,product_variety,"
        "cluster_rate,error\n";
  for (const auto& c : r.cells) {
    const auto& m = c.metrics;
    os << "cell," << c.tp << ',' << c.seed << ',' << (c.converged ? 1 : 0) << ',' << num(c.max_regret) << ','
       << c.rounds << ',';
    if (c.has_output)
      os << num(m.platform_utility) << ',' << num(m.seller_total()) << ',' << num(m.buyer_utility) << ','
         << num(m.welfare()) << ',' << num(m.products_explored) << ',' << num(m.product_variety) << ','
         << num(m.cluster_rate) << ",\n";
    else
      os << ",,,,,,,\"" << c.error << "\"\n";
  }
  for (const auto& a : r.aggregates) {
    auto line = [&](const char* tag, auto pick) {
      os << tag << ',' << a.tp << ",," << a.n_converged << ",,," << num(pick(a.platform)) << ','
         << num(pick(a.seller)) << ',' << num(pick(a.buyer)) << ',' << num(pick(a.welfare)) << ','
         << num(pick(a.explored)) << ',' << num(pick(a.variety)) << ',' << num(pick(a.cluster)) << ",\n";
    };
    line("min", [](const Stat& s) { return s.min; });
    line("mean", [](const Stat& s) { return s.mean; });
    line("max", [](const Stat& s) { return s.max; });
  }
  return os.str();
}

inline nlohmann::json encode(const Stat& s) { return {{"min", s.min}, {"mean", s.mean}, {"max", s.max}}; }

inline nlohmann::json encode(const SweepReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json j = {{"tp", c.tp}, {"seed", c.seed}, {"has_output", c.has_output}, {"converged", c.converged},
                        {"rounds", c.rounds}};
    j["max_regret"] = std::isnan(c.max_regret) ? nlohmann::json() : nlohmann::json(c.max_regret);
    if (c.has_output) {
      const auto& m = c.metrics;
      j["platform"] = m.platform_utility;
      j["seller"] = m.seller_utility;
      j["buyer"] = m.buyer_utility;
      j["welfare"] = m.welfare();
      j["products_explored"] = m.products_explored;
      j["product_variety"] = m.product_variety;
      j["cluster_rate"] = m.cluster_rate;
    } else {
      j["error"] = c.error;
    }
    cells.push_back(j);
  }
  nlohmann::json aggs = nlohmann::json::array();
  for (const auto& a : r.aggregates)
    aggs.push_back({{"tp", a.tp},
                    {"n_converged", a.n_converged},
                    {"platform", encode(a.platform)},
                    {"seller", encode(a.seller)},
                    {"buyer", encode(a.buyer)},
                    {"welfare", encode(a.welfare)},
                    {"products_explored", encode(a.explored)},
                    {"product_variety", encode(a.variety)},
                    {"cluster_rate", encode(a.cluster)}});
  auto opt_int = [](const std::optional<int>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  return {{"cells", cells},
          {"aggregates", aggs},
          {"tp_star_platform", opt_int(r.tp_star_platform)},
          {"tp_star_welfare", opt_int(r.tp_star_welfare)}};
}

/// Settings that pass the single-seller sanity check within a desk budget:
/// Adam at 3e-5 on rewards scaled by 0.01, 3000 episodes per round.
inline Hyperparameters desk_hyperparameters() {
  Hyperparameters h;
  h.optimizer = OptimizerKind::kAdam;
  h.lr = 3e-5;
  h.reward_scale = 0.01;
  h.max_rounds = 3;
  h.episodes_per_round = 3000;
  return h;
}

}  // namespace platform_entry
