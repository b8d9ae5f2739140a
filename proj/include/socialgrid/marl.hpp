#pragma once

#include <chrono>
#include <random>
#include <vector>

#include "socialgrid/game.hpp"

namespace socialgrid {

struct MdpConfig {
  double mu = 0.05;         // interest rate; discount tau = 1/(1+mu)
  int itmax = 10000;
  double c = 90.0;          // learning-rate numerator
  double d = 100.0;         // learning-rate denominator offset
  std::uint64_t seed = 0;
  int prune_k = 2;          // strategies kept per player per state
  int price_bands = 3;
  double band_lo = 0.0;     // $/MWh discretization window
  double band_hi = 120.0;
  bool literal_step3 = false;  // re-zero Q each iteration, the literal reading

  double tau() const { return 1.0 / (1.0 + mu); }

  void validate() const {
    if (mu <= 0.0) throw Error(ErrorCode::InvalidConfig, "interest rate must be positive");
    if (itmax < 1) throw Error(ErrorCode::InvalidConfig, "itmax must be at least 1");
    if (c <= 0.0 || d <= 0.0 || c / (d + 1.0) >= 1.0)
      throw Error(ErrorCode::InvalidConfig, "learning-rate constants must give alpha^1 < 1");
    if (prune_k < 1) throw Error(ErrorCode::InvalidConfig, "prune_k must be at least 1");
    if (price_bands < 1 || band_hi <= band_lo)
      throw Error(ErrorCode::InvalidConfig, "price discretization window is empty");
  }
};

inline double learning_rate(const MdpConfig& cfg, long k) {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "iteration index starts at 1");
  return cfg.c / (cfg.d + static_cast<double>(k));
}

// Hour of day crossed with the player's predicted-price band; the state
// count is 24 x price_bands.
struct MdpState {
  int hour = 0;
  int band = 0;
  int id = 0;
};

inline int price_band(const MdpConfig& cfg, double price) {
  const double f = (price - cfg.band_lo) / (cfg.band_hi - cfg.band_lo);
  const int band = static_cast<int>(std::floor(f * cfg.price_bands));
  return std::clamp(band, 0, cfg.price_bands - 1);
}

inline MdpState make_mdp_state(const MdpConfig& cfg, int hour, double price) {
  if (hour < 0 || hour > 23)
    throw Error(ErrorCode::InvalidConfig, "state hour outside a day");
  const int band = price_band(cfg, price);
  return {hour, band, hour * cfg.price_bands + band};
}

inline int state_id(const MdpConfig& cfg, int hour, double price) {
  return make_mdp_state(cfg, hour, price).id;
}

inline int num_states(const MdpConfig& cfg) { return 24 * cfg.price_bands; }

// Tabular state-action values with per-pair visit counts.
class QTable {
 public:
  QTable() = default;
  QTable(int states, int actions)
      : states_(states),
        actions_(actions),
        q_(static_cast<size_t>(states) * actions, 0.0),
        visits_(static_cast<size_t>(states) * actions, 0) {}

  int num_states() const { return states_; }
  int num_actions() const { return actions_; }

  double value(int state, int action) const { return q_[index(state, action)]; }
  long visits(int state, int action) const { return visits_[index(state, action)]; }

  double max_value(int state) const {
    double best = -kInf;
    for (int a = 0; a < actions_; ++a) best = std::max(best, value(state, a));
    return best;
  }

  void set(int state, int action, double v) { q_[index(state, action)] = v; }
  void bump_visits(int state, int action) { ++visits_[index(state, action)]; }
  void set_visits(int state, int action, long n) { visits_[index(state, action)] = n; }
  void zero_values() { std::fill(q_.begin(), q_.end(), 0.0); }

  double max_abs() const {
    double m = 0.0;
    for (double v : q_) m = std::max(m, std::abs(v));
    return m;
  }

  // Action indices in descending value order, lower index first on ties.
  std::vector<int> ranking(int state) const {
    std::vector<int> order(static_cast<size_t>(actions_));
    for (int a = 0; a < actions_; ++a) order[static_cast<size_t>(a)] = a;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return value(state, a) > value(state, b);
    });
    return order;
  }

 private:
  size_t index(int state, int action) const {
    if (state < 0 || state >= states_ || action < 0 || action >= actions_)
      throw Error(ErrorCode::InvalidConfig, "q-table index out of range");
    return static_cast<size_t>(state) * actions_ + action;
  }

  int states_ = 0;
  int actions_ = 0;
  std::vector<double> q_;
  std::vector<long> visits_;
};

// Q(i,s) <- (1-a^k) Q(i,s) + a^k [r + tau max_b Q(j,b)]; touches one entry.
inline void q_update(QTable& q, int state, int action, int next_state, double reward,
                     const MdpConfig& cfg, long k) {
  if (!std::isfinite(reward))
    throw Error(ErrorCode::InvalidConfig, "reward must be finite");
  const double a = learning_rate(cfg, k);
  const double target = reward + cfg.tau() * q.max_value(next_state);
  q.set(state, action, (1.0 - a) * q.value(state, action) + a * target);
  q.bump_visits(state, action);
}

struct TrainResult {
  MdpConfig cfg;
  std::vector<QTable> qtables;                        // per player
  std::vector<std::vector<std::vector<int>>> ranked;  // [player][state] ordered actions
  double max_abs_reward = 0.0;
  std::string rng_algorithm = "mt19937_64";

  std::vector<int> pruned_actions(int player, int state) const {
    const auto& order = ranked[static_cast<size_t>(player)][static_cast<size_t>(state)];
    const int keep = std::min<int>(cfg.prune_k, static_cast<int>(order.size()));
    std::vector<int> out(order.begin(), order.begin() + keep);
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Uniform-random exploration over the hour sequence. Rewards are the negated
// per-player social costs under predicted prices, so the Q ranking agrees
// with the game payoffs the pruned sets will feed. The learning-rate index k
// is the per-(state,action) visit count, which keeps the schedule a proper
// stochastic-approximation step size for every pair.
inline TrainResult train_pruner(const std::vector<StrategySet>& players,
                                const std::vector<int>& hours, const GameContext& gctx,
                                const MdpConfig& cfg) {
  cfg.validate();
  if (hours.empty()) throw Error(ErrorCode::InvalidConfig, "empty hour sequence");
  const ScenarioContext& sc = *gctx.scenario;
  if (players.size() != sc.profiles.size())
    throw Error(ErrorCode::InvalidConfig, "one strategy set per player required");
  for (size_t p = 0; p < players.size(); ++p)
    players[p].validate(sc.profiles[p].curve_params);

  TrainResult result;
  result.cfg = cfg;
  for (const auto& s : players)
    result.qtables.emplace_back(num_states(cfg), static_cast<int>(s.setpoints_f.size()));

  // Predicted prices per hour are action-independent; resolve them once.
  std::vector<std::vector<double>> hour_prices;  // [hour position][player]
  for (int hour : hours) hour_prices.push_back(detail::predicted_player_prices(gctx, hour));

  std::mt19937_64 rng(cfg.seed);
  std::vector<double> setpoints(players.size());
  std::vector<int> actions(players.size());
  const double tau = cfg.tau();

  for (long k = 1; k <= cfg.itmax; ++k) {
    const size_t pos = static_cast<size_t>((k - 1) % static_cast<long>(hours.size()));
    const size_t next_pos = (pos + 1) % hours.size();
    const int hour = hours[pos];
    const int next_hour = hours[next_pos];

    for (size_t p = 0; p < players.size(); ++p) {
      const auto m = players[p].setpoints_f.size();
      actions[p] = static_cast<int>(rng() % m);  // uniform across A(i)
      setpoints[p] = players[p].setpoints_f[static_cast<size_t>(actions[p])];
    }
    const HourlyOutcome out =
        social_cost_with_prices(setpoints, hour, sc, hour_prices[pos]);

    for (size_t p = 0; p < players.size(); ++p) {
      QTable& q = result.qtables[p];
      const int state = state_id(cfg, hour, hour_prices[pos][p]);
      const int next = state_id(cfg, next_hour, hour_prices[next_pos][p]);
      const double reward = -out.per_player_cost[p];
      result.max_abs_reward = std::max(result.max_abs_reward, std::abs(reward));
      if (cfg.literal_step3) {
        // Literal step 3 returns to step 1 and re-zeroes the factors, so only
        // the newest transition survives; kept as a comparison mode.
        q.zero_values();
        q_update(q, state, actions[p], next, reward, cfg, 1);
      } else {
        q_update(q, state, actions[p], next, reward, cfg, q.visits(state, actions[p]) + 1);
      }
      const double bound = result.max_abs_reward / (1.0 - tau) + 1e-6;
      if (q.max_abs() > bound)
        throw Error(ErrorCode::SolverFailure, "q-values escaped the discounted bound");
    }
  }

  for (size_t p = 0; p < players.size(); ++p) {
    std::vector<std::vector<int>> per_state;
    for (int s = 0; s < num_states(cfg); ++s)
      per_state.push_back(result.qtables[p].ranking(s));
    result.ranked.push_back(std::move(per_state));
  }
  return result;
}

struct PipelineOutcome {
  GameOutcome game;
  std::vector<StrategySet> pruned_sets;
  double wall_seconds = 0.0;
};

// Shrinks every player's strategy set to its trained best prune_k for the
// state observed at this hour, then plays the ordinary hourly game on the
// reduced grid.
inline PipelineOutcome rl_game_pipeline(const std::vector<StrategySet>& players, int hour,
                                        const GameContext& gctx, const TrainResult& trained,
                                        const BestResponseConfig& game_cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> prices = detail::predicted_player_prices(gctx, hour);

  PipelineOutcome out;
  for (size_t p = 0; p < players.size(); ++p) {
    const int state = state_id(trained.cfg, hour, prices[p]);
    StrategySet pruned;
    pruned.player_bus = players[p].player_bus;
    for (int a : trained.pruned_actions(static_cast<int>(p), state))
      pruned.setpoints_f.push_back(players[p].setpoints_f[static_cast<size_t>(a)]);
    out.pruned_sets.push_back(std::move(pruned));
  }
  out.game = best_response_loop(out.pruned_sets, hour, gctx, game_cfg);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Export/import of trained tables; only visited pairs are written.
inline nlohmann::json qtables_to_json(const TrainResult& trained,
                                      const std::vector<StrategySet>& players) {
  nlohmann::json doc;
  doc["metadata"] = {
      {"rng", trained.rng_algorithm}, {"seed", trained.cfg.seed},
      {"itmax", trained.cfg.itmax},   {"mu", trained.cfg.mu},
      {"tau", trained.cfg.tau()},     {"c", trained.cfg.c},
      {"d", trained.cfg.d},           {"prune_k", trained.cfg.prune_k},
      {"price_bands", trained.cfg.price_bands},
      {"literal_step3", trained.cfg.literal_step3}};
  doc["players"] = nlohmann::json::array();
  for (size_t p = 0; p < trained.qtables.size(); ++p) {
    const QTable& q = trained.qtables[p];
    nlohmann::json entries = nlohmann::json::array();
    for (int s = 0; s < q.num_states(); ++s)
      for (int a = 0; a < q.num_actions(); ++a)
        if (q.visits(s, a) > 0)
          entries.push_back({{"state", s},
                             {"action", a},
                             {"value", q.value(s, a)},
                             {"visits", q.visits(s, a)}});
    doc["players"].push_back({{"bus", players[p].player_bus},
                              {"num_states", q.num_states()},
                              {"num_actions", q.num_actions()},
                              {"entries", std::move(entries)}});
  }
  return doc;
}

inline std::vector<QTable> qtables_from_json(const nlohmann::json& doc) {
  std::vector<QTable> tables;
  try {
    for (const auto& jp : doc.at("players")) {
      QTable q(jp.at("num_states").get<int>(), jp.at("num_actions").get<int>());
      for (const auto& e : jp.at("entries")) {
        const int s = e.at("state").get<int>();
        const int a = e.at("action").get<int>();
        q.set(s, a, e.at("value").get<double>());
        q.set_visits(s, a, e.at("visits").get<long>());
      }
      tables.push_back(std::move(q));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad q-table document: ") + e.what());
  }
  return tables;
}

}  // namespace socialgrid
