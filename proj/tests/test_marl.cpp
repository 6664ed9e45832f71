#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "platform_entry/features.hpp"
#include "platform_entry/markets.hpp"
#include "platform_entry/marl_trainer.hpp"
#include "platform_entry/profile_eval.hpp"
#include "platform_entry/qnetwork.hpp"
#include "platform_entry/replay_buffer.hpp"
#include "platform_entry/seller_sim.hpp"

using namespace platform_entry;

namespace {

MarketConfig two_seller_config() {
  MarketConfig c;
  c.products = {{0, 0.5, 100.0, 50.0}, {1, 0.2, 200.0, 0.0}, {2, 0.8, 75.0, 25.0}};
  c.costs = CostMatrix::from_rows({{50.0, 120.0, 30.0}, {60.0, 100.0, 30.0}});
  c.n_sellers = 2;
  c.horizon = 12;
  return c;
}

MarketConfig single_product(double r_good, double r_bad, double cost) {
  auto c = single_seller_market({{0, 0.5, r_good, r_bad}}, {cost});
  c.horizon = 15;
  return c;
}

Hyperparameters quick(int episodes) {
  Hyperparameters h;
  h.optimizer = OptimizerKind::kAdam;
  h.lr = 1e-3;
  h.reward_scale = 0.01;
  h.episodes_per_round = episodes;
  h.buffer = 20000;
  h.explore_decay = 0.999;
  h.br_explore_decay = 0.999;
  h.max_rounds = 1;
  return h;
}

}  // namespace

// ---- encoding ---------------------------------------------------------------

TEST(Encode, LayoutOfResetState) {
  const auto c = two_seller_config();
  MarketGame g(c, EntryTime(3), 1);
  const auto x = encode(g.observe(0), c, EntryTime(3));
  ASSERT_EQ(static_cast<std::size_t>(x.size()), feature_size(2, 3));
  EXPECT_EQ(feature_size(2, 3), 4u * 3 + 2u * 2 * 3 + 2u * 3 + 1);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(x[4 * j + 0], 1.0);
    EXPECT_EQ(x[4 * j + 1] + x[4 * j + 2] + x[4 * j + 3], 0.0);
  }
  EXPECT_EQ(x[x.size() - 1], 0.0);
  // own costs / own max cost for seller 0: 50/120, 1, 30/120
  const Eigen::Index costs = x.size() - 1 - 3;
  EXPECT_DOUBLE_EQ(x[costs + 0], 50.0 / 120.0);
  EXPECT_DOUBLE_EQ(x[costs + 1], 1.0);
  const auto y = encode(g.observe(1), c, EntryTime(3));
  EXPECT_DOUBLE_EQ(y[costs + 0], 0.6);
}

TEST(Encode, EnteredProductHasZeroCountdown) {
  auto c = single_product(100.0, 50.0, 10.0);
  MultiMarketState s = MultiMarketState::initial(1, 1);
  apply_step(c, EntryTime(2), s, {1}, [](std::size_t) { return true; });
  auto x = encode(Observation{s, 0, {10.0}}, c, EntryTime(2));
  EXPECT_EQ(x[1], 1.0);                      // good
  EXPECT_DOUBLE_EQ(x[4 + 1 + 1], 0.5);       // countdown 1 of 2
  apply_step(c, EntryTime(2), s, {0}, [](std::size_t) { return true; });
  x = encode(Observation{s, 0, {10.0}}, c, EntryTime(2));
  EXPECT_EQ(x[3], 1.0);                      // entered
  EXPECT_EQ(x[4 + 1 + 1], 0.0);
}

TEST(Encode, InjectiveOnSampledStates) {
  const auto c = two_seller_config();
  std::mt19937_64 rng(5);
  std::set<std::vector<double>> codes;
  std::vector<MultiMarketState> states;
  for (int e = 0; e < 300; ++e) {
    MarketGame g(c, EntryTime(2), rng());
    while (!g.done()) {
      for (std::size_t i = 0; i < 2; ++i) {
        const auto s = g.state();
        bool seen = false;
        for (const auto& t : states) seen = seen || t == s;
        if (!seen) states.push_back(s);
      }
      g.step({static_cast<int>(rng() % 4), static_cast<int>(rng() % 4)});
    }
  }
  for (const auto& s : states) {
    const auto x = encode(Observation{s, 0, c.costs.row(0)}, c, EntryTime(2));
    codes.insert(std::vector<double>(x.data(), x.data() + x.size()));
  }
  EXPECT_GT(states.size(), 500u);
  EXPECT_EQ(codes.size(), states.size());
}

// ---- network ---------------------------------------------------------------

TEST(QNetworkTest, OutputDimensionIsActionsPlusNoop) {
  const auto c = two_seller_config();
  QNetwork net(feature_size(c), c.n_products() + 1, 3);
  EXPECT_EQ(net.forward(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(feature_size(c)))).size(), 4);
  EXPECT_EQ(net.hidden(), 64u);
}

TEST(QNetworkTest, GradientMatchesCentralDifferences) {
  const std::size_t in = 33, out = 5, batch = 32;
  QNetwork net(in, out, 11);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd x(in, batch);
  for (Eigen::Index q = 0; q < x.size(); ++q) x.data()[q] = n01(rng);
  std::vector<int> a(batch);
  Eigen::VectorXd y(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    a[b] = static_cast<int>(rng() % out);
    y[static_cast<Eigen::Index>(b)] = n01(rng) * 3.0;
  }
  Eigen::VectorXd grad;
  net.td_loss(x, a, y, &grad);
  const Eigen::VectorXd p0 = net.parameters();
  Eigen::VectorXd fd(p0.size());
  const double h = 1e-5;
  for (Eigen::Index k = 0; k < p0.size(); ++k) {
    Eigen::VectorXd p = p0;
    p[k] += h;
    net.set_parameters(p);
    const double up = net.td_loss(x, a, y, nullptr);
    p[k] -= 2 * h;
    net.set_parameters(p);
    const double down = net.td_loss(x, a, y, nullptr);
    fd[k] = (up - down) / (2 * h);
  }
  net.set_parameters(p0);
  const double rel = (grad - fd).norm() / std::max(grad.norm(), fd.norm());
  EXPECT_LE(rel, 1e-4);
}

TEST(QNetworkTest, TargetSyncCopiesVerbatim) {
  const auto c = two_seller_config();
  Hyperparameters h = quick(1);
  h.target_sync = 7;
  Learner l(QNetwork(feature_size(c), 4, 1), h);
  std::mt19937_64 rng(3);
  const Eigen::VectorXd z = Eigen::VectorXd::Random(static_cast<Eigen::Index>(feature_size(c)));
  for (int k = 0; k < 40; ++k) l.buffer.push(z * (k % 3), k % 4, k, z, false);
  for (int k = 0; k < 6; ++k) detail::learn_step(l, h, rng);
  EXPECT_FALSE(l.online == l.target);
  detail::learn_step(l, h, rng);
  EXPECT_TRUE(l.online == l.target);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd v = Eigen::VectorXd::Random(z.size());
    EXPECT_EQ(l.online.greedy(v), l.target.greedy(v));
  }
}

TEST(QNetworkTest, ParameterRoundTrip) {
  QNetwork a(9, 3, 1), b(9, 3, 2);
  EXPECT_FALSE(a == b);
  b.set_parameters(a.parameters());
  EXPECT_TRUE(a == b);
  EXPECT_THROW(b.set_parameters(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

// ---- replay -------------------------------------------------------------------

TEST(Replay, NeverExceedsCapacityAndEvictsOldestFirst) {
  ReplayBuffer buf(10, 2);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  for (int k = 0; k < 27; ++k) {
    buf.push(x, k, static_cast<double>(k), x, false);
    EXPECT_LE(buf.size(), 10u);
  }
  EXPECT_EQ(buf.size(), 10u);
  // Survivors are pushes 17..26; the oldest is at the next write slot.
  const std::size_t oldest = buf.oldest_slot();
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(buf.reward_at((oldest + k) % 10), 17.0 + k);
}

TEST(Replay, SamplingIsUniform) {
  const std::size_t cap = 40;
  ReplayBuffer buf(cap, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  for (int k = 0; k < 100; ++k) buf.push(x, 0, 0.0, x, false);
  std::mt19937_64 rng(9);
  const std::size_t n = 40000;
  std::vector<double> counts(cap, 0.0);
  for (auto i : buf.sample_indices(n, rng)) counts[i] += 1.0;
  const double expected = static_cast<double>(n) / cap;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99th percentile of chi-square with 39 degrees of freedom.
  EXPECT_LT(chi2, 62.428);
}

TEST(Replay, GatherReturnsStoredTransition) {
  ReplayBuffer buf(4, 2);
  Eigen::VectorXd a(2), b(2);
  a << 0.5, -1.0;
  b << 2.0, 3.0;
  buf.push(a, 3, 1.25, b, true);
  const auto batch = buf.gather({0});
  EXPECT_EQ(batch.actions[0], 3);
  EXPECT_EQ(batch.rewards[0], 1.25);
  EXPECT_EQ(batch.done[0], 1.0);
  EXPECT_EQ(batch.obs(1, 0), -1.0);
  EXPECT_EQ(batch.next_obs(0, 0), 2.0);
  EXPECT_THROW(buf.gather({2}), std::out_of_range);
}

// ---- hyperparameters ----------------------------------------------------------

TEST(HyperparametersTest, Defaults) {
  Hyperparameters h;
  EXPECT_EQ(h.lr, 0.0001);
  EXPECT_EQ(h.discount, 0.9);
  EXPECT_EQ(h.batch, 32u);
  EXPECT_EQ(h.buffer, 450000u);
  EXPECT_EQ(h.explore_decay, 0.99995);
  EXPECT_EQ(h.explore_floor, 0.25);
  EXPECT_EQ(h.br_explore_decay, 0.999925);
  EXPECT_EQ(h.br_explore_floor, 0.1);
  EXPECT_EQ(h.total_episodes, 70000);
  EXPECT_EQ(h.epsilon_nash, 0.33);
  EXPECT_EQ(h.k_episodes(), 70000 / (5 * 2));
  EXPECT_EQ(h.br_episodes_for(2), 3500);
  EXPECT_NO_THROW(h.validate());
  h.explore_floor = 1.0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
  h = Hyperparameters{};
  h.lr = 0.0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
}

TEST(HyperparametersTest, JsonRoundTrip) {
  Hyperparameters h = quick(17);
  h.br_episodes = 4;
  const auto back = decode_hyperparameters(nlohmann::json::parse(encode(h).dump()));
  EXPECT_EQ(encode(back).dump(), encode(h).dump());
}

// ---- evaluation ---------------------------------------------------------------

TEST(ProfileEval, ExactMatchesMonteCarlo) {
  const auto c = two_seller_config();
  const EntryTime entry(3);
  // Seller i offers the lowest-id product that is not bad or entered.
  auto policy = [](const Observation& o) {
    for (std::size_t j = 0; j < o.state.n_products; ++j) {
      const auto s = o.state.product_states[j];
      if (s == ProductState::kUndeveloped || s == ProductState::kGood) return static_cast<int>(j) + 1 + (o.seller == 1 && j == 0);
    }
    return 0;
  };
  const JointPolicy profile{policy, policy};
  const auto exact = evaluate_profile_exact(c, entry, profile);
  std::vector<Episode> eps;
  for (int e = 0; e < 20000; ++e) eps.push_back(simulate_episode(c, entry, profile, 100 + e));
  const auto mc = metrics_from_episodes(eps, c);
  EXPECT_NEAR(mc.platform_utility, exact.platform_utility, 0.02 * exact.platform_utility + 1.0);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(mc.seller_utility[i], exact.seller_utility[i], 15.0);
  EXPECT_NEAR(mc.products_explored, exact.products_explored, 0.01);
  EXPECT_NEAR(mc.cluster_rate, exact.cluster_rate, 0.01);
  EXPECT_NEAR(mc.product_variety, exact.product_variety, 0.01);
}

TEST(ProfileEval, MetricExamples) {
  const auto c = two_seller_config();
  auto always = [](int a) { return [a](const Observation&) { return a; }; };
  const auto same = evaluate_profile_exact(c, EntryTime(3), {always(1), always(1)});
  EXPECT_DOUBLE_EQ(same.cluster_rate, 1.0);
  EXPECT_NEAR(same.product_variety, 1.0 / 3.0, 1e-12);
  const auto apart = evaluate_profile_exact(c, EntryTime(3), {always(1), always(2)});
  EXPECT_DOUBLE_EQ(apart.cluster_rate, 0.0);
  EXPECT_NEAR(apart.product_variety, 2.0 / 3.0, 1e-12);
  const auto idle = evaluate_profile_exact(c, EntryTime(3), {always(0), always(0)});
  EXPECT_EQ(idle.products_explored, 0.0);
  EXPECT_LE(idle.platform_utility, 0.0);
  EXPECT_LE(idle.seller_total(), 0.0);
  EXPECT_LE(idle.buyer_utility, 0.0);
  EXPECT_DOUBLE_EQ(idle.welfare(), idle.platform_utility + idle.seller_total() + idle.buyer_utility);
  EXPECT_THROW(evaluate_profile_exact(c, EntryTime(3), {always(0)}), std::invalid_argument);
}

// ---- single-seller oracle -----------------------------------------------------

TEST(GameOracle, DominatesGittinsPolicyAndMatchesRestedLimit) {
  for (const auto& letters : {"AB", "AAAB", "ABBB"}) {
    auto cfg = markets::from_letters(letters);
    for (int tp : {2, 5, 8}) {
      const PlatformPolicy pol = GlobalEntry{EntryTime(tp)};
      auto gittins = [&](const Observation& o) {
        SingleMarketState s{o.state.product_states, o.state.t};
        auto a = gittins_action(s, pol, cfg);
        return a ? static_cast<int>(*a) + 1 : 0;
      };
      const double dp = oracle::GameDp(cfg, EntryTime(tp)).optimal_value();
      const double g = evaluate_profile_exact(cfg, EntryTime(tp), {gittins}).seller_utility[0];
      EXPECT_GE(dp, g - 1e-9) << letters << " tp " << tp;
    }
    // With no entry the seller faces a rested bandit, where the index policy
    // is optimal; the only gap is the finite horizon.
    const double dp = oracle::GameDp(cfg, EntryTime::never()).optimal_value();
    const double rested = evaluate_exact(no_entry_policy(), cfg).seller_utility;
    const double tail = std::pow(0.9, cfg.horizon) * 200.0 / 0.1;
    EXPECT_NEAR(dp, rested, tail) << letters;
  }
}

// ---- training -------------------------------------------------------------------

TEST(Training, FixedSeedIsBitwiseReproducible) {
  MarketEnv env{two_seller_config(), EntryTime(3)};
  std::vector<double> a, b;
  const auto na = train_independent(env, quick(40), 12, &a);
  const auto nb = train_independent(env, quick(40), 12, &b);
  ASSERT_EQ(a.size(), 40u);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(na[0] == nb[0] && na[1] == nb[1]);
  std::vector<double> c;
  train_independent(env, quick(40), 13, &c);
  EXPECT_NE(a, c);
}

TEST(Training, WorthlessMarketNeverPaysACost) {
  // Valid products need r_good > r_bad, so the reward is negligible rather
  // than zero.
  MarketEnv env{single_product(1e-3, 0.0, 20.0), EntryTime(5)};
  const auto nets = train_independent(env, quick(300), 1);
  EXPECT_EQ(seller_values(nets, env)[0], 0.0);
}

TEST(Training, ExploresALoneWorthwhileProductAtOnce) {
  MarketEnv env{single_product(100.0, 50.0, 50.0), EntryTime(20)};
  const auto nets = train_independent(env, quick(300), 2);
  MarketGame g(env.config, env.entry, 0);
  EXPECT_EQ(nets[0].greedy(encode(g.observe(0), env.config, env.entry)), 1);
  const auto exact = gittins_action(SingleMarketState::initial(1), GlobalEntry{env.entry}, env.config);
  ASSERT_TRUE(exact);
  EXPECT_EQ(*exact, 0u);
}

TEST(Training, RegretIsClampedAtZero) {
  EXPECT_EQ(regrets({5.0, 2.0}, {3.0, 2.5}), (std::vector<double>{0.0, 0.5}));
}

TEST(Training, OptimalProfileHasNoRegretAndUntrainedOneDoes) {
  MarketEnv env{single_product(100.0, 50.0, 50.0), EntryTime(20)};
  Hyperparameters h = quick(300);
  const auto trained = train_independent(env, h, 3);
  const double opt = oracle::GameDp(env.config, env.entry).optimal_value();
  ASSERT_NEAR(seller_values(trained, env)[0], opt, 1e-6);
  const auto br = best_response(env, trained, 0, h, 4, 100);
  EXPECT_NEAR(std::max(0.0, br.value - seller_values(trained, env)[0]), 0.0, 1e-9);

  // An untrained network that idles at the start loses value a best response
  // recovers.
  std::vector<QNetwork> raw;
  for (std::uint64_t s = 0; raw.empty(); ++s) {
    QNetwork q(feature_size(env.config), 2, 1000 + s);
    if (seller_values({q}, env)[0] < opt - 10.0) raw.push_back(q);
  }
  const auto fix = best_response(env, raw, 0, h, 5, 300);
  const auto r = regrets(seller_values(raw, env), {fix.value});
  EXPECT_GT(r[0], h.epsilon_nash);
}

TEST(Equilibrium, ZeroRoundsIsUnconvergedAndUnevaluated) {
  MarketEnv env{two_seller_config(), EntryTime(3)};
  Hyperparameters h = quick(10);
  h.max_rounds = 0;
  const auto eq = find_equilibrium(env, h, 1);
  EXPECT_FALSE(eq.converged);
  EXPECT_FALSE(eq.regrets_evaluated);
  EXPECT_TRUE(eq.regrets.empty());
  EXPECT_EQ(eq.policies.size(), 2u);
}

TEST(Equilibrium, DominantProductConvergesInRoundOne) {
  MarketEnv env{single_product(100.0, 50.0, 50.0), EntryTime(20)};
  Hyperparameters h = quick(300);
  h.max_rounds = 3;
  const auto eq = find_equilibrium(env, h, 8);
  EXPECT_TRUE(eq.converged);
  EXPECT_EQ(eq.rounds, 1);
  EXPECT_LE(eq.max_regret(), h.epsilon_nash);
}

TEST(Equilibrium, ConvergedImpliesSmallRegret) {
  MarketEnv env{two_seller_config(), EntryTime(3)};
  Hyperparameters h = quick(150);
  h.max_rounds = 2;
  const auto eq = find_equilibrium(env, h, 21);
  ASSERT_TRUE(eq.regrets_evaluated);
  EXPECT_EQ(eq.regrets.size(), 2u);
  for (double r : eq.regrets) EXPECT_GE(r, 0.0);
  if (eq.converged) {
    EXPECT_LE(eq.max_regret(), h.epsilon_nash);
  } else {
    EXPECT_EQ(eq.rounds, 2);
    EXPECT_GT(eq.max_regret(), h.epsilon_nash);
  }
  EXPECT_EQ(eq.max_regret_history.size(), static_cast<std::size_t>(eq.rounds));
}

// ---- checkpoints ------------------------------------------------------------------

TEST(Checkpoint, RestoresNetworksScheduleAndRng) {
  MarketEnv env{two_seller_config(), EntryTime(4)};
  IndependentTrainer t(env, quick(20), 6);
  t.train(20);
  const auto j = t.checkpoint();
  EXPECT_EQ(j.at("version"), kCheckpointVersion);
  auto r = IndependentTrainer::restore(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(r.epsilon(), t.epsilon());
  EXPECT_EQ(r.episodes_done(), 20);
  EXPECT_EQ(r.rng()(), t.rng()());
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(r.learner(i).online == t.learner(i).online);
    EXPECT_TRUE(r.learner(i).target == t.learner(i).target);
    EXPECT_EQ(r.learner(i).updates, t.learner(i).updates);
  }
  auto bad = j;
  bad["version"] = 99;
  EXPECT_THROW(IndependentTrainer::restore(bad), std::invalid_argument);
}
