#pragma once

// Fixed-length observation encoding for the value networks.
//
// Layout: product-state one-hots (U, G, B, E per product), offering matrix,
// elapsed matrix / horizon, entry countdowns / T_p, own costs / own max cost,
// t / horizon.

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "platform_entry/core_types.hpp"
#include "platform_entry/market_game.hpp"

namespace platform_entry {

inline std::size_t feature_size(std::size_t n_sellers, std::size_t n_products) {
  return 4 * n_products + 2 * n_sellers * n_products + 2 * n_products + 1;
}

inline std::size_t feature_size(const MarketConfig& config) {
  return feature_size(config.n_sellers, config.n_products());
}

namespace detail {

inline std::size_t state_slot(ProductState s) {
  switch (s) {
    case ProductState::kUndeveloped: return 0;
    case ProductState::kGood: return 1;
    case ProductState::kBad: return 2;
    case ProductState::kEntered: return 3;
  }
  return 0;
}

}  // namespace detail

/// Writes the encoding of (state, own costs) into out, which must already
/// have feature_size entries.
inline void encode_into(const MultiMarketState& s, const std::vector<double>& own_costs, const MarketConfig& config,
                        EntryTime entry, Eigen::Ref<Eigen::VectorXd> out) {
  const std::size_t n = s.n_sellers, m = s.n_products;
  const double horizon = static_cast<double>(config.horizon);
  out.setZero();
  std::size_t k = 0;
  for (std::size_t j = 0; j < m; ++j) out[static_cast<Eigen::Index>(k + 4 * j + detail::state_slot(s.product_states[j]))] = 1.0;
  k += 4 * m;
  for (std::size_t q = 0; q < n * m; ++q) out[static_cast<Eigen::Index>(k + q)] = s.offering[q];
  k += n * m;
  for (std::size_t q = 0; q < n * m; ++q) out[static_cast<Eigen::Index>(k + q)] = s.elapsed[q] / horizon;
  k += n * m;
  for (std::size_t j = 0; j < m; ++j) {
    const int c = s.entry_countdown[j];
    double v = 0.0;
    if (c == kNoEntryCountdown) v = 1.0;
    else if (c > 0) v = static_cast<double>(c) / entry.steps();
    out[static_cast<Eigen::Index>(k + j)] = v;
  }
  k += m;
  const double max_cost = own_costs.empty() ? 0.0 : *std::max_element(own_costs.begin(), own_costs.end());
  for (std::size_t j = 0; j < m; ++j)
    out[static_cast<Eigen::Index>(k + j)] = max_cost > 0.0 ? own_costs[j] / max_cost : 0.0;
  k += m;
  out[static_cast<Eigen::Index>(k)] = s.t / horizon;
}

inline Eigen::VectorXd encode(const Observation& obs, const MarketConfig& config, EntryTime entry) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(feature_size(obs.state.n_sellers, obs.state.n_products)));
  encode_into(obs.state, obs.own_costs, config, entry, out);
  return out;
}

}  // namespace platform_entry
