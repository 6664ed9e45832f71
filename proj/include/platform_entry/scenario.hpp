#pragma once

// Two-seller market environments built backwards from target no-entry
// indices: sample rewards, then pick each seller's innovation costs so the
// indices land where the scenario's inequalities require.
//
//   C1/C2  one focal product every seller prefers (shared-reward index above
//          the threshold), C2 with high-stakes rewards
//   D1     each seller has its own niche; the other niche never pays
//   D2     seller 0 is a specialist; seller 1 can serve both niches but
//          prefers its own

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "platform_entry/config_io.hpp"
#include "platform_entry/core_types.hpp"
#include "platform_entry/gittins.hpp"
#include "platform_entry/seller_sim.hpp"

namespace platform_entry {

enum class ScenarioKind { kC1Standard, kC2HighStakes, kD1Specialists, kD2SpecialistGeneralist };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kC1Standard: return "c1";
    case ScenarioKind::kC2HighStakes: return "c2";
    case ScenarioKind::kD1Specialists: return "d1";
    case ScenarioKind::kD2SpecialistGeneralist: return "d2";
  }
  return "?";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "c1") return ScenarioKind::kC1Standard;
  if (s == "c2") return ScenarioKind::kC2HighStakes;
  if (s == "d1") return ScenarioKind::kD1Specialists;
  if (s == "d2") return ScenarioKind::kD2SpecialistGeneralist;
  throw std::invalid_argument("unknown scenario kind '" + s + "' (expected c1, c2, d1 or d2)");
}

struct ScenarioParams {
  std::size_t n_control = 3;
  double g_bar = 50.0;
  double gamma_seller = 0.9;
  double gamma_platform = 0.95;
  double gamma_buyer = 0.95;
  int horizon = 30;
  int max_attempts = 1000;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kC1Standard;
  std::size_t n_control = 3;
  double g_bar = 50.0;
  std::uint64_t seed = 0;
  MarketConfig config;
  /// Focal product of each seller (the shared product in C scenarios).
  std::vector<std::size_t> focal;
  /// Certificate: no-entry index of every (seller, product) pair, and the
  /// shared-reward index of each seller's focal product.
  std::vector<std::vector<double>> index;
  std::vector<double> shared_index;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform_in(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_draw(rng); }

inline GittinsResult no_entry_index(const ProductSpec& p, double cost, double gamma) {
  return index_undeveloped(p, cost, gamma, std::numeric_limits<double>::infinity(), 0.0);
}

}  // namespace detail

/// Uniform draw from the discrete reward and probability sets; high stakes
/// adds 500 to the good reward.
inline ProductSpec sample_product(std::mt19937_64& rng, bool high_stakes) {
  static constexpr double kGood[] = {75.0, 100.0, 200.0};
  static constexpr double kBad[] = {0.0, 25.0, 50.0};
  static constexpr double kProb[] = {0.2, 0.5, 0.8};
  ProductSpec p;
  p.r_good = kGood[rng() % 3] + (high_stakes ? 500.0 : 0.0);
  p.r_bad = kBad[rng() % 3];
  p.p_good = kProb[rng() % 3];
  return p;
}

/// Innovation cost giving the product a no-entry index equal to target.
/// Each rule's index is affine in the cost, so each rule yields one
/// candidate; a candidate counts only if it is nonnegative and its rule
/// attains the maximum there. Rule 3 is preferred. With clustered_n the
/// rewards are first split among that many sellers.
inline std::optional<double> cost_for_target_index(const ProductSpec& product, double gamma, double target,
                                                   std::optional<int> clustered_n = std::nullopt) {
  if (!(target >= 0.0)) throw std::invalid_argument("target index must be >= 0");
  const ProductSpec p = clustered_n ? shared_reward_product(product, *clustered_n) : product;
  for (auto rule : {StoppingRule::kRule3, StoppingRule::kRule2}) {
    const RuleRatio at_zero = rule_ratio(p, 0.0, gamma, 0.0, rule);
    const double per_cost = rule == StoppingRule::kRule3 ? 1.0 : 1.0 - gamma;
    const double c = (at_zero.n0 - target * at_zero.d0) / per_cost;
    if (!(c >= -kMoneyTolerance)) continue;
    const double cost = std::max(c, 0.0);
    const double mine = rule_ratio(p, cost, gamma, 0.0, rule).value(0.0);
    const double other =
        rule_ratio(p, cost, gamma, 0.0, rule == StoppingRule::kRule3 ? StoppingRule::kRule2 : StoppingRule::kRule3)
            .value(0.0);
    if (mine >= other - kMoneyTolerance) return cost;
  }
  return std::nullopt;
}

/// Recomputes every index from the config and checks the kind's inequalities
/// and the absence of a dominating product for each seller.
inline bool validate_scenario(const ScenarioSpec& spec, std::string* why = nullptr) {
  auto fail = [why](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const auto& c = spec.config;
  if (!validate(c).empty()) return fail("config invalid: " + validate(c).front().message);
  if (c.n_sellers != 2) return fail("scenarios have two sellers");
  const std::size_t m = c.n_products();
  const double g = c.discounts.gamma_seller;
  const double gb = spec.g_bar;
  const bool clustered = spec.kind == ScenarioKind::kC1Standard || spec.kind == ScenarioKind::kC2HighStakes;
  const std::size_t n_focal = clustered ? 1 : 2;
  if (m != n_focal + spec.n_control) return fail("product count does not match the template");
  if (spec.focal.size() != 2) return fail("one focal product per seller");

  std::vector<std::vector<double>> G(2, std::vector<double>(m));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < m; ++j) G[i][j] = detail::no_entry_index(c.products[j], c.cost(i, j), g).value;

  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = n_focal; j < m; ++j)
      if (!(G[i][j] < gb)) return fail("control product index not below the threshold");

  if (clustered) {
    const std::size_t f = spec.focal[0];
    if (spec.focal[1] != f) return fail("clustered scenarios share one focal product");
    for (std::size_t i = 0; i < 2; ++i) {
      const double shared = clustered_index_undeveloped(c.products[f], c.cost(i, f), g, 2).value;
      if (!(shared > gb)) return fail("shared-reward index of the focal product not above the threshold");
      for (std::size_t j = 0; j < m; ++j)
        if (j != f && !(G[i][j] < gb)) return fail("another product reaches the threshold");
    }
  } else {
    const std::size_t j0 = spec.focal[0], j1 = spec.focal[1];
    if (j0 == j1) return fail("diverse scenarios need distinct niches");
    if (!(G[0][j0] > gb && gb > G[0][j1])) return fail("seller 0 niche inequality");
    if (spec.kind == ScenarioKind::kD1Specialists) {
      if (!(G[1][j1] > gb && gb > G[1][j0])) return fail("seller 1 niche inequality");
    } else {
      if (!(G[1][j1] > G[1][j0] && G[1][j0] > gb)) return fail("generalist inequality chain");
    }
  }

  for (std::size_t i = 0; i < 2; ++i) {
    MarketConfig row = single_seller_market(c.products, c.costs.row(i), c.discounts);
    if (has_dominating_product(row)) return fail("seller " + std::to_string(i) + " has a dominating product");
  }

  // The certificate must match the recomputation.
  if (spec.index.size() != 2) return fail("certificate missing");
  for (std::size_t i = 0; i < 2; ++i) {
    if (spec.index[i].size() != m) return fail("certificate has the wrong shape");
    for (std::size_t j = 0; j < m; ++j)
      if (std::abs(spec.index[i][j] - G[i][j]) > 1e-6) return fail("certificate index disagrees");
  }
  return true;
}

namespace detail {

inline std::optional<ScenarioSpec> try_generate(ScenarioKind kind, const ScenarioParams& params,
                                                std::mt19937_64& rng) {
  const double gb = params.g_bar;
  const double g = params.gamma_seller;
  const bool clustered = kind == ScenarioKind::kC1Standard || kind == ScenarioKind::kC2HighStakes;
  const std::size_t n_focal = clustered ? 1 : 2;
  const std::size_t m = n_focal + params.n_control;

  std::vector<ProductSpec> products;
  for (std::size_t j = 0; j < m; ++j) {
    ProductSpec p = sample_product(rng, kind == ScenarioKind::kC2HighStakes && j < n_focal);
    p.id = j;
    products.push_back(p);
  }
  CostMatrix costs(2, m);
  auto focal_target = [&] { return uniform_in(rng, gb + 10.0, gb + 60.0); };
  auto control_target = [&] { return uniform_in(rng, 5.0, gb - 10.0); };
  auto set = [&](std::size_t i, std::size_t j, double target, std::optional<int> shared = std::nullopt) {
    auto c = cost_for_target_index(products[j], g, target, shared);
    if (!c) return false;
    costs(i, j) = *c;
    return true;
  };

  for (std::size_t j = n_focal; j < m; ++j) {
    const double t = control_target();
    if (!set(0, j, t)) return std::nullopt;
    costs(1, j) = costs(0, j);
  }

  ScenarioSpec spec;
  spec.kind = kind;
  spec.n_control = params.n_control;
  spec.g_bar = gb;
  if (clustered) {
    spec.focal = {0, 0};
    for (std::size_t i = 0; i < 2; ++i)
      if (!set(i, 0, focal_target(), 2)) return std::nullopt;
  } else {
    spec.focal = {0, 1};
    if (!set(0, 0, focal_target())) return std::nullopt;
    if (kind == ScenarioKind::kD1Specialists) {
      if (!set(1, 1, focal_target())) return std::nullopt;
      if (!set(0, 1, 0.0) || !set(1, 0, 0.0)) return std::nullopt;
    } else {
      if (!set(0, 1, control_target())) return std::nullopt;
      const double own = focal_target();
      if (!set(1, 1, own)) return std::nullopt;
      if (!set(1, 0, uniform_in(rng, gb + 0.2 * (own - gb), gb + 0.8 * (own - gb)))) return std::nullopt;
    }
  }

  MarketConfig cfg;
  cfg.products = products;
  cfg.costs = costs;
  cfg.n_sellers = 2;
  cfg.horizon = params.horizon;
  cfg.discounts = {params.gamma_seller, params.gamma_platform, params.gamma_buyer};
  spec.config = cfg;

  spec.index.assign(2, std::vector<double>(m));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < m; ++j) spec.index[i][j] = no_entry_index(products[j], costs(i, j), g).value;
    spec.shared_index.push_back(
        clustered_index_undeveloped(products[spec.focal[i]], costs(i, spec.focal[i]), g, 2).value);
  }
  return spec;
}

}  // namespace detail

/// Draws scenarios from the seed until one validates; gives up after
/// max_attempts with a ScenarioError.
inline ScenarioSpec generate(ScenarioKind kind, std::uint64_t seed, const ScenarioParams& params = {}) {
  if (params.g_bar <= 10.0) throw std::invalid_argument("threshold must exceed the control margin");
  std::mt19937_64 rng(seed);
  std::string last = "no feasible cost";
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    auto spec = detail::try_generate(kind, params, rng);
    if (!spec) continue;
    spec->seed = seed;
    if (validate_scenario(*spec, &last)) return *spec;
  }
  throw ScenarioError(std::string("no valid ") + to_string(kind) + " scenario after " +
                      std::to_string(params.max_attempts) + " draws; last problem: " + last);
}

inline nlohmann::json encode(const ScenarioSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"seed", spec.seed},
          {"g_bar", spec.g_bar},
          {"n_control", spec.n_control},
          {"config", encode(spec.config)},
          {"certificate", {{"focal", spec.focal}, {"index", spec.index}, {"shared_index", spec.shared_index}}}};
}

inline ScenarioSpec decode_scenario(const nlohmann::json& j) {
  ScenarioSpec s;
  s.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  s.g_bar = j.at("g_bar").get<double>();
  s.n_control = j.at("n_control").get<std::size_t>();
  s.config = decode_config(j.at("config"));
  const auto& cert = j.at("certificate");
  s.focal = cert.at("focal").get<std::vector<std::size_t>>();
  s.index = cert.at("index").get<std::vector<std::vector<double>>>();
  s.shared_index = cert.at("shared_index").get<std::vector<double>>();
  return s;
}

}  // namespace platform_entry
