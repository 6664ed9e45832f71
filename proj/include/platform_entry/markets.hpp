#pragma once

// The two reference product types and the small markets built from them.

#include <string>
#include <vector>

#include "platform_entry/core_types.hpp"

namespace platform_entry::markets {

/// Moderate, stable payoff with a low innovation cost.
inline ProductSpec type_a() { return {0, 0.5, 100.0, 50.0}; }
inline constexpr double kTypeACost = 50.0;

/// Risky product: higher upside, higher cost.
inline ProductSpec type_b() { return {0, 0.2, 200.0, 0.0}; }
inline constexpr double kTypeBCost = 120.0;

/// gamma_s = 0.9, gamma_p = 0.95; buyer flows discounted like the platform's.
inline DiscountProfile table_discounts() { return {0.9, 0.95, 0.95}; }

/// Builds a single-seller market from a string of 'A'/'B' letters.
inline MarketConfig from_letters(const std::string& letters, DiscountProfile d = table_discounts()) {
  std::vector<ProductSpec> products;
  std::vector<double> costs;
  for (char c : letters) {
    if (c == 'A') {
      products.push_back(type_a());
      costs.push_back(kTypeACost);
    } else if (c == 'B') {
      products.push_back(type_b());
      costs.push_back(kTypeBCost);
    } else {
      throw std::invalid_argument("market letters must be A or B");
    }
  }
  return single_seller_market(std::move(products), costs, d);
}

inline MarketConfig market_3a1b() { return from_letters("AAAB"); }
inline MarketConfig market_1a3b() { return from_letters("ABBB"); }
/// Two-product toy: product 0 is type A, product 1 is type B.
inline MarketConfig toy_ab() { return from_letters("AB"); }

}  // namespace platform_entry::markets
