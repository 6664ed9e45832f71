#pragma once

// Closed-form Gittins indices for the four-state product chain
// U -> {G, B}, G -> E under an entry delay T and a transaction fee alpha.
//
// Only three stopping sets can be optimal from U:
//   Rule1  stop at {U}      never explore, index 0
//   Rule2  stop at {E}      keep selling a bad product, stop at entry
//   Rule3  stop at {B, E}   abandon a bad product immediately
// Each rule's index is a ratio of affine functions of x = gamma^T, and the
// numerator is affine in alpha and in the cost, which the boundary solver and
// the cost inversion both exploit.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "platform_entry/core_types.hpp"

namespace platform_entry {

enum class StoppingRule { kRule1 = 1, kRule2 = 2, kRule3 = 3 };

inline const char* to_string(StoppingRule r) {
  switch (r) {
    case StoppingRule::kRule1: return "Rule1";
    case StoppingRule::kRule2: return "Rule2";
    case StoppingRule::kRule3: return "Rule3";
  }
  return "?";
}

struct GittinsResult {
  double value = 0.0;
  StoppingRule rule = StoppingRule::kRule1;
};

namespace detail {

inline void check_index_domain(double gamma, double entry_time, double alpha) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("discount factor must lie in (0,1)");
  if (!(entry_time >= 1.0)) throw std::domain_error("entry time must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::domain_error("fee alpha must lie in [0,1]");
}

}  // namespace detail

/// Numerator and denominator of a rule's index, both affine in x = gamma^T:
/// index(x) = (n0 + n1 x) / (d0 + d1 x).
struct RuleRatio {
  double n0 = 0.0, n1 = 0.0, d0 = 1.0, d1 = 0.0;

  double value(double x) const { return (n0 + n1 * x) / (d0 + d1 * x); }
  double numerator(double x) const { return n0 + n1 * x; }
  double denominator(double x) const { return d0 + d1 * x; }
};

/// Affine-in-x form of rule 2 or 3 (rule must not be Rule1).
inline RuleRatio rule_ratio(const ProductSpec& product, double cost, double gamma, double alpha, StoppingRule rule) {
  const double p = product.p_good;
  const double keep = 1.0 - alpha;
  RuleRatio r;
  if (rule == StoppingRule::kRule2) {
    // [(1-g)(-c) + keep (p rg (1-x) + (1-p) rb)] / [p (1-x) + (1-p)]
    r.n0 = (1.0 - gamma) * (-cost) + keep * (p * product.r_good + (1.0 - p) * product.r_bad);
    r.n1 = -keep * p * product.r_good;
    r.d0 = 1.0;
    r.d1 = -p;
  } else if (rule == StoppingRule::kRule3) {
    // [-c + keep (p rg (1-x)/(1-g) + (1-p) rb)] / [p (1-x)/(1-g) + (1-p)]
    const double w = p / (1.0 - gamma);
    r.n0 = -cost + keep * (w * product.r_good + (1.0 - p) * product.r_bad);
    r.n1 = -keep * w * product.r_good;
    r.d0 = w + (1.0 - p);
    r.d1 = -w;
  } else {
    throw std::invalid_argument("Rule1 has no ratio form");
  }
  return r;
}

/// Index when the seller stops only at platform entry.
inline double index_rule2(const ProductSpec& product, double cost, double gamma, double entry_time, double alpha) {
  detail::check_index_domain(gamma, entry_time, alpha);
  return rule_ratio(product, cost, gamma, alpha, StoppingRule::kRule2).value(discount_power(gamma, entry_time));
}

/// Index when the seller abandons the product once it is bad or entered.
inline double index_rule3(const ProductSpec& product, double cost, double gamma, double entry_time, double alpha) {
  detail::check_index_domain(gamma, entry_time, alpha);
  return rule_ratio(product, cost, gamma, alpha, StoppingRule::kRule3).value(discount_power(gamma, entry_time));
}

/// Largest of the candidate rule indices (Rule1 contributes 0). Ties go to
/// the lower-numbered rule.
inline GittinsResult index_undeveloped(const ProductSpec& product, double cost, double gamma, double entry_time,
                                       double alpha) {
  const double g2 = index_rule2(product, cost, gamma, entry_time, alpha);
  const double g3 = index_rule3(product, cost, gamma, entry_time, alpha);
  GittinsResult best{0.0, StoppingRule::kRule1};
  if (g2 > best.value + kMoneyTolerance) best = {g2, StoppingRule::kRule2};
  if (g3 > best.value + kMoneyTolerance) best = {g3, StoppingRule::kRule3};
  return best;
}

inline GittinsResult index_undeveloped(const ProductSpec& product, double cost, double gamma, EntryTime entry,
                                       double alpha) {
  return index_undeveloped(product, cost, gamma, entry.as_real(), alpha);
}

/// max(rule2, rule3) without the Rule1 floor; its sign decides whether the
/// product is worth exploring at all.
inline double unfloored_index(const ProductSpec& product, double cost, double gamma, double entry_time,
                              double alpha) {
  return std::max(index_rule2(product, cost, gamma, entry_time, alpha),
                  index_rule3(product, cost, gamma, entry_time, alpha));
}

/// Index of a product in any state. Developed-state rewards are reported in
/// seller-receipt units, i.e. scaled by (1 - alpha).
inline double index_state(const ProductSpec& product, double cost, double gamma, ProductState state,
                          double entry_time, double alpha) {
  switch (state) {
    case ProductState::kUndeveloped: return index_undeveloped(product, cost, gamma, entry_time, alpha).value;
    case ProductState::kGood: return (1.0 - alpha) * product.r_good;
    case ProductState::kBad: return (1.0 - alpha) * product.r_bad;
    case ProductState::kEntered: return 0.0;
  }
  return 0.0;
}

/// Product with its per-step rewards shared evenly among n sellers.
inline ProductSpec shared_reward_product(ProductSpec product, int n_sellers) {
  if (n_sellers < 1) throw std::invalid_argument("n_sellers must be >= 1");
  product.r_good /= n_sellers;
  product.r_bad /= n_sellers;
  return product;
}

/// No-entry index of a product whose rewards are split among n sellers; the
/// innovation cost is still paid in full.
inline GittinsResult clustered_index_undeveloped(const ProductSpec& product, double cost, double gamma,
                                                 int n_sellers) {
  return index_undeveloped(shared_reward_product(product, n_sellers), cost, gamma,
                           std::numeric_limits<double>::infinity(), 0.0);
}

}  // namespace platform_entry
