#pragma once

// Independent deep Q-learning for the sellers of a market game, best-response
// regret checks, and the loop that alternates the two until no seller can
// gain more than epsilon_nash by deviating.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "platform_entry/config_io.hpp"
#include "platform_entry/core_types.hpp"
#include "platform_entry/features.hpp"
#include "platform_entry/market_game.hpp"
#include "platform_entry/profile_eval.hpp"
#include "platform_entry/qnetwork.hpp"
#include "platform_entry/replay_buffer.hpp"

namespace platform_entry {

struct Hyperparameters {
  double lr = 1e-4;
  double discount = 0.9;
  std::size_t batch = 32;
  std::size_t buffer = 450000;
  double explore_decay = 0.99995;
  double explore_start = 1.0;
  double explore_floor = 0.25;
  double br_explore_decay = 0.999925;
  double br_explore_start = 1.0;
  double br_explore_floor = 0.1;
  int total_episodes = 70000;
  double epsilon_nash = 0.33;

  int max_rounds = 5;
  /// Independent-training episodes per round; default total / (2 max_rounds).
  std::optional<int> episodes_per_round;
  /// Best-response episodes per seller per round; default K / N so a round
  /// costs 2K episodes.
  std::optional<int> br_episodes;
  int target_sync = 500;
  std::size_t hidden = 64;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  /// Rewards are multiplied by this before entering the TD targets.
  double reward_scale = 1.0;

  int k_episodes() const {
    if (episodes_per_round) return *episodes_per_round;
    return max_rounds > 0 ? total_episodes / (max_rounds * 2) : 0;
  }
  int br_episodes_for(std::size_t n_sellers) const {
    if (br_episodes) return *br_episodes;
    return std::max(1, k_episodes() / static_cast<int>(std::max<std::size_t>(n_sellers, 1)));
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be > 0");
    };
    positive(lr, "lr");
    positive(discount, "discount");
    positive(static_cast<double>(batch), "batch");
    positive(static_cast<double>(buffer), "buffer");
    positive(explore_decay, "explore_decay");
    positive(br_explore_decay, "br_explore_decay");
    positive(explore_floor, "explore_floor");
    positive(br_explore_floor, "br_explore_floor");
    positive(static_cast<double>(total_episodes), "total_episodes");
    positive(epsilon_nash, "epsilon_nash");
    positive(static_cast<double>(target_sync), "target_sync");
    positive(static_cast<double>(hidden), "hidden");
    positive(reward_scale, "reward_scale");
    if (discount > 1.0) throw std::invalid_argument("discount must be <= 1");
    if (explore_decay > 1.0 || br_explore_decay > 1.0) throw std::invalid_argument("decay must be <= 1");
    if (!(explore_floor < explore_start) || !(br_explore_floor < br_explore_start) || explore_start > 1.0 ||
        br_explore_start > 1.0)
      throw std::invalid_argument("exploration floor must be below its start, start at most 1");
    if (max_rounds < 0) throw std::invalid_argument("max_rounds must be >= 0");
    if (episodes_per_round && *episodes_per_round < 0) throw std::invalid_argument("episodes_per_round must be >= 0");
    if (br_episodes && *br_episodes < 0) throw std::invalid_argument("br_episodes must be >= 0");
  }
};

struct MarketEnv {
  MarketConfig config;
  EntryTime entry;
};

/// One learning seller: online and target networks, optimizer, replay.
struct Learner {
  QNetwork online;
  QNetwork target;
  Optimizer optimizer;
  ReplayBuffer buffer;
  long long updates = 0;

  Learner(QNetwork net, const Hyperparameters& h)
      : online(net), target(std::move(net)), optimizer(h.optimizer, h.lr),
        buffer(h.buffer, online.n_inputs()) {}
};

inline SellerPolicy greedy_policy(std::shared_ptr<const QNetwork> net, const MarketConfig& config, EntryTime entry) {
  const auto cfg = std::make_shared<const MarketConfig>(config);
  return [net, cfg, entry](const Observation& obs) { return net->greedy(encode(obs, *cfg, entry)); };
}

inline JointPolicy greedy_profile(const std::vector<QNetwork>& nets, const MarketEnv& env) {
  JointPolicy p;
  for (const auto& n : nets) p.push_back(greedy_policy(std::make_shared<const QNetwork>(n), env.config, env.entry));
  return p;
}

inline std::vector<double> seller_values(const std::vector<QNetwork>& nets, const MarketEnv& env) {
  return evaluate_profile_exact(env.config, env.entry, greedy_profile(nets, env)).seller_utility;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Schedule {
  double epsilon;
  double decay;
  double floor;
  void tick() { epsilon = std::max(floor, epsilon * decay); }
};

inline void learn_step(Learner& l, const Hyperparameters& h, std::mt19937_64& rng) {
  if (l.buffer.size() < h.batch) return;
  const auto b = l.buffer.sample(h.batch, rng);
  const Eigen::MatrixXd next_q = l.target.forward_batch(b.next_obs);
  Eigen::VectorXd y(b.rewards.size());
  for (Eigen::Index c = 0; c < y.size(); ++c)
    y[c] = b.rewards[c] + h.discount * (1.0 - b.done[c]) * next_q.col(c).maxCoeff();
  Eigen::VectorXd grad;
  l.online.td_loss(b.obs, b.actions, y, &grad);
  l.optimizer.step(l.online, grad);
  if (++l.updates % h.target_sync == 0) l.target = l.online;
}

/// Runs episodes in which the sellers in `learners` (nullptr = frozen) act
/// epsilon-greedily and learn; frozen sellers act greedily on `frozen`.
/// Returns each episode's discounted seller returns summed over sellers.
inline std::vector<double> run_episodes(const MarketEnv& env, std::vector<Learner*> learners,
                                        const std::vector<QNetwork>& frozen, int episodes, Schedule& schedule,
                                        const Hyperparameters& h, std::mt19937_64& rng) {
  const auto& cfg = env.config;
  const std::size_t n = cfg.n_sellers;
  const auto dim = static_cast<Eigen::Index>(feature_size(cfg));
  const int n_actions = static_cast<int>(cfg.n_products()) + 1;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(cfg.costs.row(i));

  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  MarketGame game(cfg, env.entry, 0);
  std::vector<Eigen::VectorXd> obs(n, Eigen::VectorXd(dim)), next(n, Eigen::VectorXd(dim));
  JointAction action(n);
  for (int e = 0; e < episodes; ++e) {
    game.reset(rng());
    double ret = 0.0;
    for (std::size_t i = 0; i < n; ++i) encode_into(game.state(), rows[i], cfg, env.entry, obs[i]);
    while (!game.done()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (learners[i]) {
          const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          action[i] = u < schedule.epsilon ? static_cast<int>(rng() % static_cast<std::uint64_t>(n_actions))
                                           : learners[i]->online.greedy(obs[i]);
        } else {
          action[i] = frozen[i].greedy(obs[i]);
        }
      }
      const int t = game.state().t;
      const auto out = game.step(action);
      for (std::size_t i = 0; i < n; ++i) {
        ret += std::pow(cfg.discounts.gamma_seller, t) * out.seller_rewards[i];
        encode_into(out.next_state, rows[i], cfg, env.entry, next[i]);
        if (learners[i])
          learners[i]->buffer.push(obs[i], action[i], h.reward_scale * out.seller_rewards[i], next[i], out.done);
      }
      for (std::size_t i = 0; i < n; ++i)
        if (learners[i]) learn_step(*learners[i], h, rng);
      std::swap(obs, next);
      schedule.tick();
    }
    curve.push_back(ret);
  }
  return curve;
}

}  // namespace detail

/// Trainer state for one market: the sellers' learners plus the RNG stream.
/// Checkpoints hold networks, schedule and RNG state but not the replay
/// buffer.
class IndependentTrainer {
 public:
  IndependentTrainer(MarketEnv env, Hyperparameters hyper, std::uint64_t seed)
      : env_(std::move(env)), hyper_(hyper), seed_(seed), rng_(detail::mix_seed(seed, 1000)) {
    hyper_.validate();
    require_valid(env_.config);
    const std::size_t dim = feature_size(env_.config);
    for (std::size_t i = 0; i < env_.config.n_sellers; ++i)
      learners_.emplace_back(QNetwork(dim, env_.config.n_products() + 1, detail::mix_seed(seed, i), hyper_.hidden),
                             hyper_);
    epsilon_ = hyper_.explore_start;
  }

  /// Continues independent training for `episodes` episodes; returns the
  /// learning curve of those episodes.
  std::vector<double> train(int episodes) {
    std::vector<Learner*> active;
    for (auto& l : learners_) active.push_back(&l);
    detail::Schedule s{epsilon_, hyper_.explore_decay, hyper_.explore_floor};
    const auto nets = networks();
    auto curve = detail::run_episodes(env_, active, nets, episodes, s, hyper_, rng_);
    epsilon_ = s.epsilon;
    episodes_done_ += episodes;
    return curve;
  }

  std::vector<QNetwork> networks() const {
    std::vector<QNetwork> out;
    for (const auto& l : learners_) out.push_back(l.online);
    return out;
  }

  /// Replaces seller i's network (and target) and clears its optimizer state.
  void adopt(std::size_t i, const QNetwork& net) {
    learners_.at(i).online = net;
    learners_.at(i).target = net;
    learners_.at(i).optimizer.reset();
  }

  const MarketEnv& env() const { return env_; }
  const Hyperparameters& hyper() const { return hyper_; }
  std::uint64_t seed() const { return seed_; }
  double epsilon() const { return epsilon_; }
  long long episodes_done() const { return episodes_done_; }
  std::mt19937_64& rng() { return rng_; }
  const Learner& learner(std::size_t i) const { return learners_.at(i); }

  nlohmann::json checkpoint() const;
  static IndependentTrainer restore(const nlohmann::json& j);

 private:
  MarketEnv env_;
  Hyperparameters hyper_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<Learner> learners_;
  double epsilon_ = 1.0;
  long long episodes_done_ = 0;
};

/// Trains all sellers independently for hyper.k_episodes() episodes.
inline std::vector<QNetwork> train_independent(const MarketEnv& env, const Hyperparameters& hyper, std::uint64_t seed,
                                               std::vector<double>* curve = nullptr) {
  IndependentTrainer t(env, hyper, seed);
  auto c = t.train(hyper.k_episodes());
  if (curve) *curve = std::move(c);
  return t.networks();
}

struct BestResponse {
  QNetwork network;
  /// Seller i's expected discounted utility with the retrained network
  /// against the frozen others.
  double value = 0.0;
};

/// Retrains seller i alone, starting from its current network, while the
/// others play greedily.
inline BestResponse best_response(const MarketEnv& env, const std::vector<QNetwork>& profile, std::size_t i,
                                  const Hyperparameters& hyper, std::uint64_t seed, int episodes) {
  hyper.validate();
  if (profile.size() != env.config.n_sellers) throw std::invalid_argument("profile needs one network per seller");
  if (i >= profile.size()) throw std::out_of_range("seller id out of range");
  std::mt19937_64 rng(detail::mix_seed(seed, 2000 + i));
  Learner learner(profile[i], hyper);
  std::vector<Learner*> active(profile.size(), nullptr);
  active[i] = &learner;
  detail::Schedule s{hyper.br_explore_start, hyper.br_explore_decay, hyper.br_explore_floor};
  detail::run_episodes(env, active, profile, episodes, s, hyper, rng);
  std::vector<QNetwork> deviated = profile;
  deviated[i] = learner.online;
  return {learner.online, seller_values(deviated, env)[i]};
}

/// max(0, best-response value - current value) for every seller.
inline std::vector<double> regrets(const std::vector<double>& current, const std::vector<double>& deviation) {
  std::vector<double> r(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) r[i] = std::max(0.0, deviation[i] - current[i]);
  return r;
}

struct EquilibriumProfile {
  std::vector<QNetwork> policies;
  std::vector<double> regrets;
  bool regrets_evaluated = false;
  bool converged = false;
  std::uint64_t seed = 0;
  int rounds = 0;
  /// Max regret after each round.
  std::vector<double> max_regret_history;
  std::vector<double> seller_values;

  double max_regret() const {
    double m = 0.0;
    for (double r : regrets) m = std::max(m, r);
    return m;
  }
};

/// Alternates independent training with best-response checks. A failed check
/// replaces every seller whose best response gained anything, then training
/// resumes. Stops when the largest regret is at most epsilon_nash or after
/// max_rounds rounds.
inline EquilibriumProfile find_equilibrium(const MarketEnv& env, const Hyperparameters& hyper, std::uint64_t seed) {
  IndependentTrainer trainer(env, hyper, seed);
  EquilibriumProfile out;
  out.seed = seed;
  const std::size_t n = env.config.n_sellers;
  for (int round = 1; round <= hyper.max_rounds; ++round) {
    trainer.train(hyper.k_episodes());
    const auto nets = trainer.networks();
    const auto base = seller_values(nets, env);
    std::vector<double> dev(n);
    std::vector<BestResponse> brs;
    for (std::size_t i = 0; i < n; ++i) {
      brs.push_back(best_response(env, nets, i, hyper, detail::mix_seed(seed, 100 * round), hyper.br_episodes_for(n)));
      dev[i] = brs.back().value;
    }
    out.policies = nets;
    out.seller_values = base;
    out.regrets = regrets(base, dev);
    out.regrets_evaluated = true;
    out.rounds = round;
    out.max_regret_history.push_back(out.max_regret());
    if (out.max_regret() <= hyper.epsilon_nash) {
      out.converged = true;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (out.regrets[i] > 0.0) trainer.adopt(i, brs[i].network);
  }
  if (hyper.max_rounds == 0) out.policies = trainer.networks();
  return out;
}

// ---- checkpoints ----------------------------------------------------------

inline nlohmann::json encode(const Hyperparameters& h) {
  nlohmann::json j = {{"lr", h.lr},
                      {"discount", h.discount},
                      {"batch", h.batch},
                      {"buffer", h.buffer},
                      {"explore_decay", h.explore_decay},
                      {"explore_start", h.explore_start},
                      {"explore_floor", h.explore_floor},
                      {"br_explore_decay", h.br_explore_decay},
                      {"br_explore_start", h.br_explore_start},
                      {"br_explore_floor", h.br_explore_floor},
                      {"total_episodes", h.total_episodes},
                      {"epsilon_nash", h.epsilon_nash},
                      {"max_rounds", h.max_rounds},
                      {"target_sync", h.target_sync},
                      {"hidden", h.hidden},
                      {"optimizer", h.optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
                      {"reward_scale", h.reward_scale}};
  j["episodes_per_round"] = h.episodes_per_round ? nlohmann::json(*h.episodes_per_round) : nlohmann::json();
  j["br_episodes"] = h.br_episodes ? nlohmann::json(*h.br_episodes) : nlohmann::json();
  return j;
}

inline Hyperparameters decode_hyperparameters(const nlohmann::json& j) {
  Hyperparameters h;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("lr", h.lr);
  get("discount", h.discount);
  get("batch", h.batch);
  get("buffer", h.buffer);
  get("explore_decay", h.explore_decay);
  get("explore_start", h.explore_start);
  get("explore_floor", h.explore_floor);
  get("br_explore_decay", h.br_explore_decay);
  get("br_explore_start", h.br_explore_start);
  get("br_explore_floor", h.br_explore_floor);
  get("total_episodes", h.total_episodes);
  get("epsilon_nash", h.epsilon_nash);
  get("max_rounds", h.max_rounds);
  get("target_sync", h.target_sync);
  get("hidden", h.hidden);
  get("reward_scale", h.reward_scale);
  if (j.contains("optimizer")) {
    const auto o = j.at("optimizer").get<std::string>();
    if (o == "adam") h.optimizer = OptimizerKind::kAdam;
    else if (o == "sgd") h.optimizer = OptimizerKind::kSgd;
    else throw std::invalid_argument("unknown optimizer '" + o + "'");
  }
  if (j.contains("episodes_per_round") && !j.at("episodes_per_round").is_null())
    h.episodes_per_round = j.at("episodes_per_round").get<int>();
  if (j.contains("br_episodes") && !j.at("br_episodes").is_null()) h.br_episodes = j.at("br_episodes").get<int>();
  h.validate();
  return h;
}

inline nlohmann::json encode(const QNetwork& net) {
  const Eigen::VectorXd p = net.parameters();
  return {{"inputs", net.n_inputs()},
          {"actions", net.n_actions()},
          {"hidden", net.hidden()},
          {"parameters", std::vector<double>(p.data(), p.data() + p.size())}};
}

inline QNetwork decode_network(const nlohmann::json& j) {
  QNetwork net(j.at("inputs").get<std::size_t>(), j.at("actions").get<std::size_t>(), 0,
               j.at("hidden").get<std::size_t>());
  const auto v = j.at("parameters").get<std::vector<double>>();
  net.set_parameters(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  return net;
}

inline constexpr int kCheckpointVersion = 1;

/// Networks, hyperparameters, schedule position and RNG state. Replay
/// contents and optimizer moments are not saved, so a restored trainer starts
/// with an empty buffer.
inline nlohmann::json IndependentTrainer::checkpoint() const {
  std::ostringstream rng;
  rng << rng_;
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& l : learners_) nets.push_back({{"online", encode(l.online)}, {"target", encode(l.target)}, {"updates", l.updates}});
  return {{"format", "platform-entry-checkpoint"},
          {"version", kCheckpointVersion},
          {"config", encode(env_.config)},
          {"entry_time", env_.entry.is_never() ? nlohmann::json("inf") : nlohmann::json(env_.entry.steps())},
          {"hyper", encode(hyper_)},
          {"seed", seed_},
          {"epsilon", epsilon_},
          {"episodes_done", episodes_done_},
          {"rng", rng.str()},
          {"learners", nets}};
}

inline IndependentTrainer IndependentTrainer::restore(const nlohmann::json& j) {
  if (j.at("format").get<std::string>() != "platform-entry-checkpoint") throw std::invalid_argument("not a checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion) throw std::invalid_argument("unsupported checkpoint version");
  const auto& e = j.at("entry_time");
  MarketEnv env{decode_config(j.at("config")), e.is_string() ? EntryTime::never() : EntryTime(e.get<int>())};
  IndependentTrainer t(env, decode_hyperparameters(j.at("hyper")), j.at("seed").get<std::uint64_t>());
  t.epsilon_ = j.at("epsilon").get<double>();
  t.episodes_done_ = j.at("episodes_done").get<long long>();
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> t.rng_;
  const auto& ls = j.at("learners");
  if (ls.size() != t.learners_.size()) throw std::invalid_argument("checkpoint seller count mismatch");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    t.learners_[i].online = decode_network(ls[i].at("online"));
    t.learners_[i].target = decode_network(ls[i].at("target"));
    t.learners_[i].updates = ls[i].at("updates").get<long long>();
  }
  return t;
}

inline void save_checkpoint(const IndependentTrainer& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << t.checkpoint().dump() << '\n';
}

inline IndependentTrainer load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return IndependentTrainer::restore(nlohmann::json::parse(in));
}

}  // namespace platform_entry
