#include <gtest/gtest.h>

#include "platform_entry/config_io.hpp"
#include "platform_entry/core_types.hpp"
#include "platform_entry/markets.hpp"

using namespace platform_entry;

namespace {

bool has_message(const std::vector<Violation>& v, const std::string& msg) {
  for (const auto& x : v)
    if (x.message == msg) return true;
  return false;
}

MarketConfig two_seller_config() {
  MarketConfig c = markets::market_3a1b();
  c.costs = CostMatrix::from_rows({{50, 50, 50, 120}, {10.125, 0.1, 3.3, 77.7}});
  c.n_sellers = 2;
  c.horizon = 25;
  c.discounts.gamma_buyer = 0.93;
  return c;
}

}  // namespace

TEST(Validate, TypeAProductIsValid) {
  auto c = single_seller_market({markets::type_a()}, {markets::kTypeACost});
  EXPECT_TRUE(validate(c).empty());
}

TEST(Validate, EqualRewardsRejected) {
  auto c = single_seller_market({{0, 0.5, 70, 70}}, {10});
  EXPECT_TRUE(has_message(validate(c), "r_good > r_bad"));
}

TEST(Validate, FeeOutOfRangeRejected) {
  PlatformPolicy p = GlobalEntryFee{EntryTime(3), 1.2};
  EXPECT_TRUE(has_message(validate(p, 4), "alpha in [0,1]"));
  EXPECT_TRUE(validate(PlatformPolicy{GlobalEntryFee{EntryTime(3), 1.0}}, 4).empty());
}

TEST(Validate, EachInvariantReported) {
  auto c = markets::market_3a1b();
  c.products[0].p_good = 1.5;
  c.products[1].r_bad = -1;
  c.costs(0, 2) = -3;
  c.discounts.gamma_seller = 1.0;
  c.horizon = 0;
  auto v = validate(c);
  EXPECT_TRUE(has_message(v, "p_good in [0,1]"));
  EXPECT_TRUE(has_message(v, "r_bad >= 0"));
  EXPECT_TRUE(has_message(v, "cost finite and >= 0"));
  EXPECT_TRUE(has_message(v, "gamma in (0,1)"));
  EXPECT_TRUE(has_message(v, "horizon >= 1"));
}

TEST(Validate, DimensionMismatch) {
  auto c = markets::market_3a1b();
  c.n_sellers = 2;
  EXPECT_FALSE(validate(c).empty());
}

TEST(Validate, PureAndIdempotent) {
  auto c = markets::market_1a3b();
  c.products[2].p_good = -0.1;
  const auto before = c;
  auto a = validate(c);
  auto b = validate(c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(c, before);
}

TEST(Validate, HeterogeneousLength) {
  PlatformPolicy p = HeterogeneousEntry{{EntryTime(1), EntryTime(7)}};
  EXPECT_TRUE(validate(p, 2).empty());
  EXPECT_TRUE(has_message(validate(p, 3), "one entry time per product"));
}

TEST(EntryTimeTest, NeverAndFinite) {
  EXPECT_THROW(EntryTime(0), std::invalid_argument);
  EXPECT_TRUE(EntryTime::never().is_never());
  EXPECT_TRUE(std::isinf(EntryTime::never().as_real()));
  EXPECT_LT(EntryTime(30), EntryTime::never());
  EXPECT_EQ(EntryTime(4).steps(), 4);
  EXPECT_EQ(discount_power(0.9, EntryTime::never().as_real()), 0.0);
}

TEST(ProductStateTest, OnlyForwardTransitions) {
  using S = ProductState;
  EXPECT_TRUE(is_legal_transition(S::kUndeveloped, S::kGood));
  EXPECT_TRUE(is_legal_transition(S::kUndeveloped, S::kBad));
  EXPECT_TRUE(is_legal_transition(S::kGood, S::kEntered));
  EXPECT_FALSE(is_legal_transition(S::kBad, S::kEntered));
  EXPECT_FALSE(is_legal_transition(S::kEntered, S::kGood));
  EXPECT_FALSE(is_legal_transition(S::kGood, S::kBad));
  EXPECT_FALSE(is_legal_transition(S::kUndeveloped, S::kEntered));
  for (char c : std::string("UGBE")) EXPECT_EQ(state_letter(state_from_letter(c)), c);
}

TEST(ConfigIo, RoundTrip) {
  for (const auto& c : {markets::market_3a1b(), markets::market_1a3b(), markets::toy_ab(), two_seller_config()}) {
    const auto j = encode(c);
    EXPECT_EQ(decode_config(j), c);
    EXPECT_EQ(encode(decode_config(j.dump())), j);
  }
}

TEST(ConfigIo, DecimalsParseExactly) {
  auto c = decode_config(R"({"products":[{"p_good":0.1,"r_good":0.3,"r_bad":0.2}],
      "costs":[[0.7]],"discounts":{"gamma_seller":0.9,"gamma_platform":0.95}})");
  EXPECT_EQ(c.products[0].p_good, 0.1);
  EXPECT_EQ(c.products[0].r_good, 0.3);
  EXPECT_EQ(c.costs(0, 0), 0.7);
  EXPECT_EQ(c.discounts.gamma_buyer, 0.95);
  EXPECT_EQ(c.horizon, 30);
  EXPECT_EQ(c.n_sellers, 1u);
}

TEST(ConfigIo, StructuralErrors) {
  EXPECT_THROW(decode_config(std::string("{")), ConfigError);
  EXPECT_THROW(decode_config(std::string(R"({"products":[]})")), ConfigError);
  EXPECT_THROW(decode_config(std::string(R"({"products":[{"p_good":"x","r_good":1,"r_bad":0}],"costs":[[1]],
      "discounts":{"gamma_seller":0.9,"gamma_platform":0.9}})")),
               ConfigError);
  EXPECT_THROW(decode_config(std::string(R"({"products":[],"costs":[[1,2],[3]],
      "discounts":{"gamma_seller":0.9,"gamma_platform":0.9}})")),
               ConfigError);
}

TEST(PolicyHelpers, EntryAndFee) {
  PlatformPolicy h = HeterogeneousEntry{{EntryTime(1), EntryTime(7), EntryTime::never()}};
  EXPECT_EQ(entry_for(h, 1), EntryTime(7));
  EXPECT_THROW(entry_for(h, 3), std::out_of_range);
  EXPECT_EQ(fee_of(h), 0.0);
  EXPECT_EQ(fee_of(PlatformPolicy{GlobalEntryFee{EntryTime(8), 0.08}}), 0.08);
  EXPECT_EQ(setting_of(h), PolicySetting::kHeterogeneous);
  EXPECT_EQ(to_string(h), "T=(1,7,inf)");
  EXPECT_EQ(encode(h).dump(), R"({"entry":[1,7,"inf"],"setting":"hetero"})");
}
