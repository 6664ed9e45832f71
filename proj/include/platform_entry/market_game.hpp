#pragma once

// Finite-horizon multi-seller market game under a global entry time.
//
// Step order: first-offer costs, U resolution (one draw per chosen
// undeveloped product, shared by every seller choosing it), even-split
// rewards, platform receipts from entered products, then the entry countdown
// of good products ticks. A product revealed at step t is entered from step
// t + T_p on.

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "platform_entry/config_io.hpp"
#include "platform_entry/core_types.hpp"

namespace platform_entry {

/// Countdown value of a good product the platform never enters.
inline constexpr int kNoEntryCountdown = std::numeric_limits<int>::max();
inline constexpr int kInactiveCountdown = -1;

struct MultiMarketState {
  std::size_t n_sellers = 0;
  std::size_t n_products = 0;
  std::vector<ProductState> product_states;
  std::vector<std::uint8_t> offering;  // row-major N x M
  std::vector<int> elapsed;            // row-major N x M, -1 = never offered
  std::vector<int> entry_countdown;    // per product, -1 unless Good
  int t = 0;

  static MultiMarketState initial(std::size_t n, std::size_t m) {
    MultiMarketState s;
    s.n_sellers = n;
    s.n_products = m;
    s.product_states.assign(m, ProductState::kUndeveloped);
    s.offering.assign(n * m, 0);
    s.elapsed.assign(n * m, -1);
    s.entry_countdown.assign(m, kInactiveCountdown);
    return s;
  }

  bool offers(std::size_t i, std::size_t j) const { return offering[i * n_products + j] != 0; }
  int elapsed_of(std::size_t i, std::size_t j) const { return elapsed[i * n_products + j]; }

  std::string state_letters() const {
    std::string s;
    for (auto p : product_states) s += state_letter(p);
    return s;
  }

  friend bool operator==(const MultiMarketState&, const MultiMarketState&) = default;
};

/// Seller i's view: the public state and only its own cost row.
struct Observation {
  MultiMarketState state;
  std::size_t seller = 0;
  std::vector<double> own_costs;
};

struct StepOutcome {
  MultiMarketState next_state;
  std::vector<double> seller_rewards;
  double platform_reward = 0.0;
  /// Each offered product's reward once, plus the entered products.
  double buyer_reward = 0.0;
  bool done = false;
};

/// Joint action: one entry per seller, 0 = no-op, j+1 = offer product j.
using JointAction = std::vector<int>;

/// Reward a lone seller gets from product j in state s.
inline double realized_reward(const MarketConfig& config, const MultiMarketState& s, std::size_t j) {
  switch (s.product_states[j]) {
    case ProductState::kGood: return config.products[j].r_good;
    case ProductState::kBad: return config.products[j].r_bad;
    default: return 0.0;
  }
}

/// One transition in place. reveal_good(j) decides an undeveloped product's
/// outcome; it is called once per chosen undeveloped product, in id order.
template <typename RevealGood>
StepOutcome apply_step(const MarketConfig& config, EntryTime entry, MultiMarketState& s, const JointAction& action,
                       RevealGood&& reveal_good) {
  const std::size_t n = config.n_sellers;
  const std::size_t m = config.n_products();
  if (s.t >= config.horizon) throw std::logic_error("episode is over");
  if (action.size() != n) throw std::invalid_argument("joint action needs one entry per seller");
  for (int a : action)
    if (a < 0 || a > static_cast<int>(m)) throw std::invalid_argument("action out of range");

  StepOutcome out;
  out.seller_rewards.assign(n, 0.0);

  std::vector<int> takers(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (action[i] == 0) continue;
    const std::size_t j = static_cast<std::size_t>(action[i] - 1);
    ++takers[j];
    int& e = s.elapsed[i * m + j];
    if (e < 0) {
      out.seller_rewards[i] -= config.cost(i, j);
      e = 0;
    }
  }

  for (std::size_t j = 0; j < m; ++j) {
    if (takers[j] == 0 || s.product_states[j] != ProductState::kUndeveloped) continue;
    if (reveal_good(j)) {
      s.product_states[j] = ProductState::kGood;
      s.entry_countdown[j] = entry.is_never() ? kNoEntryCountdown : entry.steps();
    } else {
      s.product_states[j] = ProductState::kBad;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (action[i] == 0) continue;
    const std::size_t j = static_cast<std::size_t>(action[i] - 1);
    out.seller_rewards[i] += realized_reward(config, s, j) / takers[j];
  }

  for (std::size_t j = 0; j < m; ++j) {
    if (s.product_states[j] == ProductState::kEntered) out.platform_reward += config.products[j].r_good;
    if (takers[j] > 0) out.buyer_reward += realized_reward(config, s, j);
  }
  out.buyer_reward += out.platform_reward;

  std::fill(s.offering.begin(), s.offering.end(), 0);
  for (std::size_t i = 0; i < n; ++i)
    if (action[i] != 0) s.offering[i * m + static_cast<std::size_t>(action[i] - 1)] = 1;
  for (int& e : s.elapsed)
    if (e >= 0) ++e;
  for (std::size_t j = 0; j < m; ++j) {
    if (s.product_states[j] != ProductState::kGood || s.entry_countdown[j] == kNoEntryCountdown) continue;
    if (--s.entry_countdown[j] == 0) {
      s.product_states[j] = ProductState::kEntered;
      s.entry_countdown[j] = kInactiveCountdown;
    }
  }
  ++s.t;

  out.next_state = s;
  out.done = s.t >= config.horizon;
  return out;
}

class MarketGame {
 public:
  MarketGame(MarketConfig config, EntryTime entry, std::uint64_t seed)
      : config_(std::move(config)), entry_(entry) {
    require_valid(config_);
    reset(seed);
  }

  const MultiMarketState& reset(std::uint64_t seed) {
    seed_ = seed;
    rng_.seed(seed);
    state_ = MultiMarketState::initial(config_.n_sellers, config_.n_products());
    return state_;
  }

  const MultiMarketState& state() const { return state_; }
  const MarketConfig& config() const { return config_; }
  EntryTime entry_time() const { return entry_; }
  std::uint64_t seed() const { return seed_; }
  bool done() const { return state_.t >= config_.horizon; }

  StepOutcome step(const JointAction& action) {
    if (done()) throw std::logic_error("episode is over");
    return apply_step(config_, entry_, state_, action,
                      [this](std::size_t j) { return uniform() < config_.products[j].p_good; });
  }

  Observation observe(std::size_t i) const {
    if (i >= config_.n_sellers) throw std::out_of_range("seller id out of range");
    return {state_, i, config_.costs.row(i)};
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  MarketConfig config_;
  EntryTime entry_;
  std::uint64_t seed_ = 0;
  std::mt19937_64 rng_;
  MultiMarketState state_;
};

// ---- trajectory log -------------------------------------------------------

inline nlohmann::json log_header(const MarketGame& game) {
  return {{"config", encode(game.config())},
          {"entry_time", game.entry_time().is_never() ? nlohmann::json("inf") : nlohmann::json(game.entry_time().steps())},
          {"seed", game.seed()}};
}

inline nlohmann::json log_record(int t, const JointAction& action, const StepOutcome& out) {
  return {{"t", t},
          {"joint_action", action},
          {"seller_rewards", out.seller_rewards},
          {"platform_reward", out.platform_reward},
          {"product_states", out.next_state.state_letters()}};
}

/// Writes one JSON object per line: the header, then one record per step.
class TrajectoryLog {
 public:
  explicit TrajectoryLog(std::ostream& os) : os_(os) {}
  void header(const MarketGame& game) { os_ << log_header(game).dump() << '\n'; }
  void record(int t, const JointAction& action, const StepOutcome& out) {
    os_ << log_record(t, action, out).dump() << '\n';
  }

 private:
  std::ostream& os_;
};

struct ReplayReport {
  std::size_t steps = 0;
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

/// Re-simulates a logged episode from its header and checks every record.
inline ReplayReport replay(std::istream& in) {
  ReplayReport report;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty trajectory log");
  const auto header = nlohmann::json::parse(line);
  const auto config = decode_config(header.at("config"));
  const auto& e = header.at("entry_time");
  const EntryTime entry = e.is_string() ? EntryTime::never() : EntryTime(e.get<int>());
  MarketGame game(config, entry, header.at("seed").get<std::uint64_t>());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    const int t = rec.at("t").get<int>();
    std::ostringstream where;
    where << "t=" << t << ": ";
    if (t != game.state().t) {
      report.mismatches.push_back(where.str() + "step index out of sequence");
      break;
    }
    StepOutcome out;
    try {
      out = game.step(rec.at("joint_action").get<JointAction>());
    } catch (const std::exception& ex) {
      report.mismatches.push_back(where.str() + ex.what());
      break;
    }
    ++report.steps;
    if (out.seller_rewards != rec.at("seller_rewards").get<std::vector<double>>())
      report.mismatches.push_back(where.str() + "seller rewards differ");
    if (out.platform_reward != rec.at("platform_reward").get<double>())
      report.mismatches.push_back(where.str() + "platform reward differs");
    if (out.next_state.state_letters() != rec.at("product_states").get<std::string>())
      report.mismatches.push_back(where.str() + "product states differ");
  }
  return report;
}

inline ReplayReport replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open log " + path);
  return replay(in);
}

}  // namespace platform_entry
