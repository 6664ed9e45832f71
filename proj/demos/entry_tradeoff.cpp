// Sweeps a global entry time on the two-product toy market and prints what a
// Gittins seller does, then asks the optimizer for the best policy per setting.
#include <cstdio>
#include <utility>

#include "platform_entry/markets.hpp"
#include "platform_entry/platform_optimizer.hpp"

using namespace platform_entry;

int main() {
  const MarketConfig market = markets::toy_ab();
  const double g = market.discounts.gamma_seller;

  std::printf("%4s %10s %10s %10s %10s %9s\n", "T_p", "index A", "index B", "platform", "seller", "explored");
  for (int t = 1; t <= 16; ++t) {
    const PlatformPolicy policy = GlobalEntry{EntryTime(t)};
    const auto m = evaluate_exact(policy, market);
    std::printf("%4d %10.3f %10.3f %10.2f %10.2f %9.2f\n", t,
                index_undeveloped(market.products[0], market.costs(0, 0), g, EntryTime(t), 0.0).value,
                index_undeveloped(market.products[1], market.costs(0, 1), g, EntryTime(t), 0.0).value,
                m.platform_utility, m.seller_utility, m.products_explored);
  }

  const std::pair<const char*, PolicySetting> settings[] = {
      {"global", PolicySetting::kGlobal}, {"fee", PolicySetting::kGlobalFee}, {"hetero", PolicySetting::kHeterogeneous}};
  for (const auto& [name, setting] : settings) {
    const auto best = optimize(market, setting);
    std::printf("%-8s %-24s platform %.2f  (%zu regions, %zu candidates)\n", name,
                to_string(best.policy).c_str(), best.platform_utility, best.n_regions, best.n_candidates);
  }
}
