#pragma once

// Exact evaluation of a single seller following the Gittins-index policy
// under a committed platform policy.
//
// Timing: exploring product j at step t pays c_j at t and yields the realised
// reward at t. A good product is sold by the seller for exactly T_j steps
// (t .. t+T_j-1), the platform owns it from t+T_j on, and the seller's next
// decision happens at t+T_j. A bad product chosen as the argmax is sold
// forever. Because the argmax depends only on the product-state vector, every
// flow from state S at time t equals gamma^t times the flow from (S, 0), so the
// recursion memoizes on S alone.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "platform_entry/core_types.hpp"
#include "platform_entry/gittins.hpp"

namespace platform_entry {

inline constexpr std::size_t kMaxExactProducts = 12;

struct SingleMarketState {
  std::vector<ProductState> product_states;
  int t = 0;

  static SingleMarketState initial(std::size_t n_products) {
    return {std::vector<ProductState>(n_products, ProductState::kUndeveloped), 0};
  }
};

struct SingleSellerMetrics {
  double seller_utility = 0.0;
  double buyer_utility = 0.0;
  double products_explored = 0.0;
  double platform_utility = 0.0;
};

namespace detail {

/// Per-product indices under one policy, from seller 0's point of view.
struct PolicyIndices {
  std::vector<double> undeveloped;
  std::vector<double> bad;
  std::vector<double> good;
  std::vector<EntryTime> entry;
  double alpha = 0.0;

  PolicyIndices(const PlatformPolicy& policy, const MarketConfig& config) {
    auto v = validate(policy, config.n_products());
    if (!v.empty()) throw std::invalid_argument("invalid policy: " + v.front().message);
    alpha = fee_of(policy);
    const double gamma = config.discounts.gamma_seller;
    for (std::size_t j = 0; j < config.n_products(); ++j) {
      const auto& p = config.products[j];
      entry.push_back(entry_for(policy, j));
      undeveloped.push_back(index_undeveloped(p, config.cost(0, j), gamma, entry.back(), alpha).value);
      bad.push_back((1.0 - alpha) * p.r_bad);
      good.push_back((1.0 - alpha) * p.r_good);
    }
  }

  double of(std::size_t j, ProductState s) const {
    switch (s) {
      case ProductState::kUndeveloped: return undeveloped[j];
      case ProductState::kGood: return good[j];
      case ProductState::kBad: return bad[j];
      case ProductState::kEntered: return 0.0;
    }
    return 0.0;
  }

  /// Highest index wins, lowest id on ties; nothing if no index is positive.
  std::optional<std::size_t> argmax(const std::vector<ProductState>& states) const {
    std::optional<std::size_t> best;
    double best_value = 0.0;
    for (std::size_t j = 0; j < states.size(); ++j) {
      double v = of(j, states[j]);
      if (v > best_value + kMoneyTolerance) {
        best_value = v;
        best = j;
      }
    }
    return best;
  }
};

// Base-3 code of a state vector with only U/B/E entries.
inline std::size_t state_digit(ProductState s) {
  switch (s) {
    case ProductState::kUndeveloped: return 0;
    case ProductState::kBad: return 1;
    case ProductState::kEntered: return 2;
    default: throw std::logic_error("good states are transient in the exact recursion");
  }
}

class ExactRecursion {
 public:
  ExactRecursion(const PlatformPolicy& policy, const MarketConfig& config)
      : config_(config), idx_(policy, config) {
    const std::size_t m = config.n_products();
    if (m > kMaxExactProducts) throw std::invalid_argument("exact evaluation supports at most 12 products");
    pow3_.assign(m + 1, 1);
    for (std::size_t j = 1; j <= m; ++j) pow3_[j] = pow3_[j - 1] * 3;
    memo_.assign(pow3_[m], std::nullopt);
    decisions_.assign(pow3_[m], kUnvisited);
  }

  SingleSellerMetrics root() {
    std::vector<ProductState> s(config_.n_products(), ProductState::kUndeveloped);
    return solve(s, 0);
  }

  /// Seller choice at every state reached from the root (kNone = idle).
  const std::vector<std::int32_t>& decisions() {
    root();
    return decisions_;
  }

  static constexpr std::int32_t kUnvisited = -2;
  static constexpr std::int32_t kNone = -1;

 private:
  SingleSellerMetrics solve(std::vector<ProductState>& s, std::size_t code) {
    if (memo_[code]) return *memo_[code];
    SingleSellerMetrics out;
    const auto choice = idx_.argmax(s);
    decisions_[code] = choice ? static_cast<std::int32_t>(*choice) : kNone;
    if (choice) {
      const std::size_t j = *choice;
      const auto& prod = config_.products[j];
      const double a = idx_.alpha;
      const double gs = config_.discounts.gamma_seller;
      const double gp = config_.discounts.gamma_platform;
      const double gb = config_.discounts.gamma_buyer;

      if (s[j] == ProductState::kBad) {
        // Sold forever.
        out.seller_utility = (1.0 - a) * prod.r_bad / (1.0 - gs);
        out.platform_utility = a * prod.r_bad / (1.0 - gp);
        out.buyer_utility = prod.r_bad / (1.0 - gb);
      } else {
        const double p = prod.p_good;
        const EntryTime entry = idx_.entry[j];
        const double xs = discount_power(gs, entry.as_real());
        const double xp = discount_power(gp, entry.as_real());
        const double xb = discount_power(gb, entry.as_real());

        SingleSellerMetrics good;
        good.seller_utility = (1.0 - a) * prod.r_good * (1.0 - xs) / (1.0 - gs);
        good.platform_utility = a * prod.r_good * (1.0 - xp) / (1.0 - gp) + prod.r_good * xp / (1.0 - gp);
        good.buyer_utility = prod.r_good / (1.0 - gb);
        if (!entry.is_never()) {
          s[j] = ProductState::kEntered;
          auto next = solve(s, code + 2 * pow3_[j]);
          s[j] = ProductState::kUndeveloped;
          good.seller_utility += xs * next.seller_utility;
          good.platform_utility += xp * next.platform_utility;
          good.buyer_utility += xb * next.buyer_utility;
          good.products_explored = next.products_explored;
        }

        s[j] = ProductState::kBad;
        auto next_bad = solve(s, code + pow3_[j]);
        s[j] = ProductState::kUndeveloped;
        SingleSellerMetrics bad;
        bad.seller_utility = (1.0 - a) * prod.r_bad + gs * next_bad.seller_utility;
        bad.platform_utility = a * prod.r_bad + gp * next_bad.platform_utility;
        bad.buyer_utility = prod.r_bad + gb * next_bad.buyer_utility;
        bad.products_explored = next_bad.products_explored;

        out.seller_utility = -config_.cost(0, j) + p * good.seller_utility + (1.0 - p) * bad.seller_utility;
        out.platform_utility = p * good.platform_utility + (1.0 - p) * bad.platform_utility;
        out.buyer_utility = p * good.buyer_utility + (1.0 - p) * bad.buyer_utility;
        out.products_explored = 1.0 + p * good.products_explored + (1.0 - p) * bad.products_explored;
      }
    }
    memo_[code] = out;
    return out;
  }

  const MarketConfig& config_;
  PolicyIndices idx_;
  std::vector<std::size_t> pow3_;
  std::vector<std::optional<SingleSellerMetrics>> memo_;
  std::vector<std::int32_t> decisions_;
};

}  // namespace detail

/// Product the Gittins-index seller offers in this state, or nothing.
inline std::optional<std::size_t> gittins_action(const SingleMarketState& state, const PlatformPolicy& policy,
                                                 const MarketConfig& config) {
  if (state.product_states.size() != config.n_products())
    throw std::invalid_argument("state has the wrong number of products");
  return detail::PolicyIndices(policy, config).argmax(state.product_states);
}

/// Expected discounted seller, platform and buyer utilities plus the expected
/// number of explored products, from the all-undeveloped state at t = 0.
inline SingleSellerMetrics evaluate_exact(const PlatformPolicy& policy, const MarketConfig& config) {
  require_valid(config);
  return detail::ExactRecursion(policy, config).root();
}

/// The seller's choice at every state reachable under the policy, indexed by
/// the base-3 code of the (U, B, E) state vector. Two policies in the same
/// region produce identical maps.
inline std::vector<std::int32_t> seller_decision_map(const PlatformPolicy& policy, const MarketConfig& config) {
  detail::ExactRecursion rec(policy, config);
  return rec.decisions();
}

/// True when product j's smallest possible undeveloped index beats every
/// rival's largest possible one. The extremes sit at T=1 with the fee at its
/// cap, and at no entry with no fee.
inline bool is_dominating(std::size_t j, const MarketConfig& config, double alpha_cap = 0.0) {
  if (j >= config.n_products()) throw std::out_of_range("product id out of range");
  const double gamma = config.discounts.gamma_seller;
  const double floor_j = index_undeveloped(config.products[j], config.cost(0, j), gamma, 1.0, alpha_cap).value;
  for (std::size_t k = 0; k < config.n_products(); ++k) {
    if (k == j) continue;
    const double top_k = index_undeveloped(config.products[k], config.cost(0, k), gamma,
                                           std::numeric_limits<double>::infinity(), 0.0)
                             .value;
    if (!(floor_j > top_k + kMoneyTolerance)) return false;
  }
  return true;
}

inline bool has_dominating_product(const MarketConfig& config, double alpha_cap = 0.0) {
  for (std::size_t j = 0; j < config.n_products(); ++j)
    if (is_dominating(j, config, alpha_cap)) return true;
  return false;
}

}  // namespace platform_entry
