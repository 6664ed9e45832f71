#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "platform_entry/markets.hpp"
#include "platform_entry/platform_optimizer.hpp"

using namespace platform_entry;

namespace {

std::vector<double> global_loci(const std::vector<Boundary>& bs) {
  std::vector<double> out;
  for (const auto& b : bs)
    for (const auto& p : b.locus) out.push_back(p.entry[0]);
  std::sort(out.begin(), out.end());
  return out;
}

// Root of f on [lo, hi] by bisection; f changes sign on the bracket.
template <typename F>
double bisect(F f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f(lo) > 0) == (f(mid) > 0)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

int entry_of(const PlatformPolicy& p, std::size_t j = 0) { return entry_for(p, j).steps(); }

MarketConfig random_market(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ProductSpec> ps;
  std::vector<double> cs;
  for (std::size_t j = 0; j < m; ++j) {
    const double rb = std::round(u(rng) * 80);
    ps.push_back({j, 0.1 + 0.8 * u(rng), rb + 5 + std::round(u(rng) * 200), rb});
    cs.push_back(std::round(u(rng) * 250));
  }
  return single_seller_market(ps, cs, {0.9, 0.95, 0.95});
}

}  // namespace

TEST(SolveBoundaries, ToyExample) {
  const auto c = markets::toy_ab();
  const auto bs = solve_boundaries(c, PolicySetting::kGlobal);
  const auto loci = global_loci(bs);
  ASSERT_EQ(loci.size(), 3u);
  EXPECT_NEAR(loci[0], 3.38, 0.01);
  EXPECT_NEAR(loci[1], 7.23, 0.01);
  EXPECT_NEAR(loci[2], 15.27, 0.01);
  EXPECT_NEAR(loci[0], std::log(0.7) / std::log(0.9), 1e-9);

  // Type A's index is already positive at T = 1: its zero crossing lies below
  // the domain.
  const auto a = markets::type_a();
  EXPECT_GT(unfloored_index(a, 50, 0.9, 1.0, 0.0), 0.0);
  for (double r : solve_index_level(a, 50, 0.9, 0.0, 0.0)) EXPECT_LT(r, 1.0);
  for (double t = 1.0; t < 40.0; t += 0.25) EXPECT_GT(unfloored_index(a, 50, 0.9, t, 0.0), 0.0);
}

TEST(SolveBoundaries, ZeroBoundaryAgreesWithBisection) {
  const auto b = markets::type_b();
  const double root = bisect([&](double t) { return unfloored_index(b, 120, 0.9, t, 0.0); }, 1.0, 10.0);
  const auto roots = solve_index_level(b, 120, 0.9, 0.0, 0.0);
  ASSERT_EQ(roots.size(), 1u);
  EXPECT_NEAR(roots[0], root, 1e-9);
  EXPECT_NEAR(root, 3.385, 1e-3);
}

TEST(SolveBoundaries, SingleProductHasOnlyZeroBoundary) {
  auto c = single_seller_market({markets::type_b()}, {120}, markets::table_discounts());
  const auto bs = solve_boundaries(c, PolicySetting::kGlobal);
  ASSERT_EQ(bs.size(), 1u);
  EXPECT_EQ(bs[0].kind, BoundaryKind::kZero);
  const auto rs = enumerate_regions(c, bs, PolicySetting::kGlobal);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(rs[0].entry(rs[0].size() - 1, 0), 3);
  EXPECT_EQ(rs[1].entry(0, 0), 4);
}

TEST(SolveBoundaries, RejectsEmptyRange) {
  PolicyBounds b;
  b.t_max = 0;
  EXPECT_THROW(solve_boundaries(markets::toy_ab(), PolicySetting::kGlobal, b), std::invalid_argument);
}

TEST(SolveBoundaries, ResidualsVanishOnEveryLocus) {
  std::mt19937_64 rng(31);
  std::vector<MarketConfig> cs = {markets::toy_ab(), markets::market_3a1b(), markets::market_1a3b()};
  for (int k = 0; k < 6; ++k) cs.push_back(random_market(rng, 2 + k % 3));
  for (const auto& c : cs)
    for (auto s : {PolicySetting::kGlobal, PolicySetting::kGlobalFee, PolicySetting::kHeterogeneous})
      for (const auto& b : solve_boundaries(c, s))
        for (const auto& pt : b.locus) EXPECT_LE(std::abs(boundary_residual(b, c, pt)), 1e-6) << to_string(b.kind);
}

TEST(EnumerateRegions, ToyRegionsAndCandidates) {
  const auto c = markets::toy_ab();
  const auto bs = solve_boundaries(c, PolicySetting::kGlobal);
  const auto rs = enumerate_regions(c, bs, PolicySetting::kGlobal);
  ASSERT_EQ(rs.size(), 4u);
  const double lo[] = {1.0, 3.38, 7.23, 15.27};
  const double hi[] = {3.38, 7.23, 15.27, std::numeric_limits<double>::infinity()};
  std::vector<int> cand;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(rs[i].lower, lo[i], 0.01);
    if (std::isinf(hi[i])) EXPECT_TRUE(std::isinf(rs[i].upper));
    else EXPECT_NEAR(rs[i].upper, hi[i], 0.01);
    const auto ps = pareto_candidates(rs[i], 2);
    ASSERT_EQ(ps.size(), 1u);
    cand.push_back(entry_of(ps[0]));
  }
  EXPECT_EQ(cand, (std::vector<int>{1, 4, 8, 16}));
}

TEST(EnumerateRegions, HeterogeneousLimit) {
  auto c = markets::from_letters("AAAABBB");
  EXPECT_THROW(enumerate_regions(c, {}, PolicySetting::kHeterogeneous), std::invalid_argument);
}

TEST(ParetoCandidates, SinglePointAndFrontier) {
  Region r;
  r.setting = PolicySetting::kGlobalFee;
  r.add({5}, 0.3);
  auto one = pareto_candidates(r, 2);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], PlatformPolicy(GlobalEntryFee{EntryTime(5), 0.3}));

  r.add({4}, 0.1);
  r.add({4}, 0.2);
  r.add({6}, 0.5);
  r.add({6}, 0.3);
  auto front = pareto_candidates(r, 2);
  EXPECT_EQ(front.size(), 3u);  // (4,0.2) (5,0.3) (6,0.5)

  Region h;
  h.setting = PolicySetting::kHeterogeneous;
  h.dims = 2;
  h.add({1, 7}, 0.0);
  h.add({2, 6}, 0.0);
  h.add({2, 7}, 0.0);
  h.add({1, 9}, 0.0);
  EXPECT_EQ(pareto_candidates(h, 2).size(), 2u);
}

TEST(Optimize, ToyGlobalAndHeterogeneous) {
  const auto c = markets::toy_ab();
  auto t0 = std::chrono::steady_clock::now();
  auto g = optimize(c, PolicySetting::kGlobal);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
  EXPECT_EQ(g.policy, PlatformPolicy(GlobalEntry{EntryTime(8)}));

  t0 = std::chrono::steady_clock::now();
  auto h = optimize(c, PolicySetting::kHeterogeneous);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
  EXPECT_EQ(h.policy, PlatformPolicy(HeterogeneousEntry{{EntryTime(1), EntryTime(7)}}));
}

TEST(Optimize, ReferenceMarkets) {
  EXPECT_EQ(optimize(markets::market_3a1b(), PolicySetting::kGlobal).policy, PlatformPolicy(GlobalEntry{EntryTime(3)}));
  EXPECT_EQ(optimize(markets::market_1a3b(), PolicySetting::kGlobal).policy, PlatformPolicy(GlobalEntry{EntryTime(8)}));

  auto f = optimize(markets::market_1a3b(), PolicySetting::kGlobalFee);
  EXPECT_EQ(f.policy, PlatformPolicy(GlobalEntryFee{EntryTime(8), 0.08}));
  EXPECT_NEAR(f.platform_utility, 1917.656602, 1e-5);

  OptimizeConstraints cap;
  cap.alpha_cap = 0.2;
  EXPECT_EQ(optimize(markets::market_3a1b(), PolicySetting::kGlobalFee, cap).policy,
            PlatformPolicy(GlobalEntryFee{EntryTime(3), 0.2}));

  auto h = optimize(markets::market_1a3b(), PolicySetting::kHeterogeneous);
  EXPECT_EQ(h.policy, PlatformPolicy(HeterogeneousEntry{{EntryTime(1), EntryTime(7), EntryTime(7), EntryTime(7)}}));
  OptimizeConstraints floor;
  floor.entry_floor = 5;
  auto hf = optimize(markets::market_1a3b(), PolicySetting::kHeterogeneous, floor);
  EXPECT_EQ(hf.policy, PlatformPolicy(HeterogeneousEntry{{EntryTime(5), EntryTime(8), EntryTime(8), EntryTime(8)}}));
  EXPECT_NEAR(hf.platform_utility, 2004.088212, 1e-5);
}

TEST(Optimize, GlobalMatchesBruteForce) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 30; ++k) {
    const auto c = random_market(rng, 2 + k % 4);
    const auto r = optimize(c, PolicySetting::kGlobal);
    double best = -1;
    int best_t = 0;
    for (int t = 1; t <= 30; ++t) {
      const double u = platform_utility(GlobalEntry{EntryTime(t)}, c);
      if (u >= best - kMoneyTolerance) {
        if (u > best + kMoneyTolerance || t > best_t) best_t = t;
        best = std::max(best, u);
      }
    }
    EXPECT_NEAR(r.platform_utility, best, 1e-9);
    EXPECT_EQ(entry_of(r.policy), best_t);
  }
}

TEST(Optimize, FeeMatchesGridBruteForce) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 4; ++k) {
    const auto c = random_market(rng, 2 + k % 2);
    const auto r = optimize(c, PolicySetting::kGlobalFee);
    double best = -1;
    for (int t = 1; t <= 30; ++t)
      for (int a = 0; a <= 100; ++a) best = std::max(best, platform_utility(GlobalEntryFee{EntryTime(t), a / 100.0}, c));
    EXPECT_NEAR(r.platform_utility, best, 1e-9);
  }
}

TEST(Optimize, ConstraintValidation) {
  OptimizeConstraints c;
  c.entry_floor = 31;
  EXPECT_THROW(optimize(markets::toy_ab(), PolicySetting::kGlobal, c), std::invalid_argument);
}

class RegionProperties : public ::testing::TestWithParam<std::tuple<const char*, PolicySetting>> {};

TEST_P(RegionProperties, MonotoneUtilityAndConstantSellerStrategy) {
  const auto [letters, setting] = GetParam();
  const auto c = markets::from_letters(letters);
  PolicyBounds bounds;
  if (setting == PolicySetting::kHeterogeneous) bounds.t_max = 12;
  if (setting == PolicySetting::kGlobalFee) bounds.alpha_step = 0.05;
  const auto rs = enumerate_regions(c, solve_boundaries(c, setting, bounds), setting, bounds);
  std::mt19937_64 rng(53);
  for (const auto& r : rs) {
    const std::size_t m = c.n_products();
    std::uniform_int_distribution<std::size_t> pick(0, r.size() - 1);
    std::vector<std::size_t> sample{0, r.size() / 2, r.size() - 1};
    for (int i = 0; i < 6; ++i) sample.push_back(pick(rng));
    const auto ref_map = seller_decision_map(r.policy_at(sample[0], m), c);
    for (auto cand : pareto_candidates(r, m)) EXPECT_EQ(seller_decision_map(cand, c), ref_map);
    for (std::size_t a : sample) {
      EXPECT_EQ(seller_decision_map(r.policy_at(a, m), c), ref_map);
      for (std::size_t b : sample) {
        bool le = r.alphas[a] >= r.alphas[b];
        for (std::size_t d = 0; d < r.dims; ++d) le = le && r.entry(a, d) <= r.entry(b, d);
        if (!le) continue;
        EXPECT_GE(platform_utility(r.policy_at(a, m), c), platform_utility(r.policy_at(b, m), c) - 1e-9);
      }
    }
  }
}

std::string region_case_name(const ::testing::TestParamInfo<RegionProperties::ParamType>& info) {
  static const char* names[] = {"global", "fee", "hetero"};
  return std::string(std::get<0>(info.param)) + "_" + names[static_cast<int>(std::get<1>(info.param))];
}

INSTANTIATE_TEST_SUITE_P(Markets, RegionProperties,
                         ::testing::Values(std::make_tuple("AB", PolicySetting::kGlobal),
                                           std::make_tuple("AAAB", PolicySetting::kGlobal),
                                           std::make_tuple("ABBB", PolicySetting::kGlobalFee),
                                           std::make_tuple("AAAB", PolicySetting::kGlobalFee),
                                           std::make_tuple("AB", PolicySetting::kHeterogeneous),
                                           std::make_tuple("ABBB", PolicySetting::kHeterogeneous),
                                           std::make_tuple("AAAB", PolicySetting::kHeterogeneous)),
                         region_case_name);
