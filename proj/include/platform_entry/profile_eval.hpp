#pragma once

// Evaluation of joint seller policies in the market game.
//
// A deterministic profile only meets randomness when an undeveloped product
// is first offered, so its expected outcome is a finite sum over reveal
// outcomes (at most 2^M leaves). evaluate_profile_exact walks that tree;
// simulate_episode draws single episodes for Monte-Carlo use.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "platform_entry/core_types.hpp"
#include "platform_entry/market_game.hpp"

namespace platform_entry {

/// Maps a seller's observation to an action (0 = no-op, j+1 = product j).
using SellerPolicy = std::function<int(const Observation&)>;
using JointPolicy = std::vector<SellerPolicy>;

struct EpisodeMetrics {
  std::vector<double> seller_utility;  // per seller, discounted with gamma_s
  double platform_utility = 0.0;
  double buyer_utility = 0.0;
  double products_explored = 0.0;  // fraction of products revealed
  double product_variety = 0.0;    // mean fraction of distinct products offered per step
  double cluster_rate = 0.0;       // fraction of steps where two sellers share a product

  double seller_total() const {
    double s = 0.0;
    for (double v : seller_utility) s += v;
    return s;
  }
  double welfare() const { return platform_utility + seller_total() + buyer_utility; }
};

struct Episode {
  MultiMarketState initial;
  std::vector<JointAction> actions;
  std::vector<StepOutcome> outcomes;
};

namespace detail {

inline void accumulate_step(const MarketConfig& config, const MultiMarketState& before, const JointAction& action,
                            const StepOutcome& out, double weight, EpisodeMetrics& acc) {
  const int t = before.t;
  const std::size_t m = config.n_products();
  const auto& d = config.discounts;
  for (std::size_t i = 0; i < acc.seller_utility.size(); ++i)
    acc.seller_utility[i] += weight * std::pow(d.gamma_seller, t) * out.seller_rewards[i];
  acc.platform_utility += weight * std::pow(d.gamma_platform, t) * out.platform_reward;
  acc.buyer_utility += weight * std::pow(d.gamma_buyer, t) * out.buyer_reward;

  std::vector<int> takers(m, 0);
  for (int a : action)
    if (a > 0) ++takers[static_cast<std::size_t>(a - 1)];
  int distinct = 0, revealed = 0;
  bool shared = false;
  for (std::size_t j = 0; j < m; ++j) {
    distinct += takers[j] > 0;
    shared = shared || takers[j] >= 2;
    revealed += before.product_states[j] == ProductState::kUndeveloped &&
                out.next_state.product_states[j] != ProductState::kUndeveloped;
  }
  const double steps = static_cast<double>(config.horizon);
  acc.products_explored += weight * revealed / static_cast<double>(m);
  acc.product_variety += weight * distinct / static_cast<double>(m) / steps;
  acc.cluster_rate += weight * (shared ? 1.0 : 0.0) / steps;
}

inline JointAction act(const JointPolicy& policy, const MultiMarketState& s, const MarketConfig& config) {
  JointAction a(policy.size());
  for (std::size_t i = 0; i < policy.size(); ++i) a[i] = policy[i](Observation{s, i, config.costs.row(i)});
  return a;
}

inline void check_profile(const MarketConfig& config, const JointPolicy& policy) {
  if (policy.size() != config.n_sellers) throw std::invalid_argument("need one policy per seller");
}

inline void expand(const MarketConfig& config, EntryTime entry, const JointPolicy& policy, MultiMarketState s,
                   double weight, EpisodeMetrics& acc) {
  const std::size_t m = config.n_products();
  while (s.t < config.horizon) {
    const JointAction a = act(policy, s, config);
    std::vector<std::size_t> fresh;
    std::vector<bool> chosen(m, false);
    for (int x : a)
      if (x > 0) chosen[static_cast<std::size_t>(x - 1)] = true;
    for (std::size_t j = 0; j < m; ++j)
      if (chosen[j] && s.product_states[j] == ProductState::kUndeveloped) fresh.push_back(j);

    if (fresh.empty()) {
      const MultiMarketState before = s;
      const auto out = apply_step(config, entry, s, a, [](std::size_t) -> bool {
        throw std::logic_error("unexpected reveal");
      });
      accumulate_step(config, before, a, out, weight, acc);
      continue;
    }
    for (std::uint32_t mask = 0; mask < (1u << fresh.size()); ++mask) {
      double prob = 1.0;
      for (std::size_t q = 0; q < fresh.size(); ++q) {
        const double p = config.products[fresh[q]].p_good;
        prob *= (mask >> q) & 1u ? p : 1.0 - p;
      }
      if (prob == 0.0) continue;
      MultiMarketState next = s;
      std::size_t q = 0;
      const auto out = apply_step(config, entry, next, a, [&](std::size_t) { return ((mask >> q++) & 1u) != 0; });
      accumulate_step(config, s, a, out, weight * prob, acc);
      expand(config, entry, policy, std::move(next), weight * prob, acc);
    }
    return;
  }
}

}  // namespace detail

/// Expected discounted utilities and behaviour metrics of a deterministic
/// profile, summed exactly over reveal outcomes.
inline EpisodeMetrics evaluate_profile_exact(const MarketConfig& config, EntryTime entry, const JointPolicy& policy) {
  detail::check_profile(config, policy);
  EpisodeMetrics acc;
  acc.seller_utility.assign(config.n_sellers, 0.0);
  detail::expand(config, entry, policy, MultiMarketState::initial(config.n_sellers, config.n_products()), 1.0, acc);
  return acc;
}

inline Episode simulate_episode(const MarketConfig& config, EntryTime entry, const JointPolicy& policy,
                                std::uint64_t seed) {
  detail::check_profile(config, policy);
  MarketGame game(config, entry, seed);
  Episode ep;
  ep.initial = game.state();
  while (!game.done()) {
    ep.actions.push_back(detail::act(policy, game.state(), config));
    ep.outcomes.push_back(game.step(ep.actions.back()));
  }
  return ep;
}

/// Averages the per-episode metrics of recorded episodes.
inline EpisodeMetrics metrics_from_episodes(const std::vector<Episode>& episodes, const MarketConfig& config) {
  if (episodes.empty()) throw std::invalid_argument("need at least one episode");
  EpisodeMetrics acc;
  acc.seller_utility.assign(config.n_sellers, 0.0);
  const double w = 1.0 / static_cast<double>(episodes.size());
  for (const auto& ep : episodes) {
    if (ep.actions.size() != ep.outcomes.size()) throw std::invalid_argument("episode actions and outcomes differ in length");
    const MultiMarketState* before = &ep.initial;
    for (std::size_t k = 0; k < ep.actions.size(); ++k) {
      detail::accumulate_step(config, *before, ep.actions[k], ep.outcomes[k], w, acc);
      before = &ep.outcomes[k].next_state;
    }
  }
  return acc;
}

}  // namespace platform_entry
