// Generates a clustered two-seller market, trains independent Q-learners for a
// few hundred episodes and reports the greedy profile's exact utilities.
#include <cstdio>
#include <cstdlib>

#include "platform_entry/experiment.hpp"
#include "platform_entry/scenario.hpp"

using namespace platform_entry;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const ScenarioSpec spec = generate(ScenarioKind::kC1Standard, seed);
  std::printf("focal product per seller: %zu %zu\n", spec.focal[0], spec.focal[1]);

  Hyperparameters hyper = desk_hyperparameters();
  hyper.episodes_per_round = 400;
  for (int tp : {2, 8}) {
    const MarketEnv env{spec.config, EntryTime(tp)};
    const auto profile = greedy_profile(train_independent(env, hyper, seed), env);
    const auto m = evaluate_profile_exact(spec.config, env.entry, profile);
    std::printf("T_p=%-2d platform %8.2f  sellers %8.2f  buyer %8.2f  explored %.2f\n", tp, m.platform_utility,
                m.seller_total(), m.buyer_utility, m.products_explored);
  }
}
