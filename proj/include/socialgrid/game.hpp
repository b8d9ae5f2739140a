#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "socialgrid/social.hpp"

namespace socialgrid {

struct StrategySet {
  int player_bus = 0;
  std::vector<double> setpoints_f;  // strictly increasing

  void validate(const ProductivityCurve& curve) const {
    if (setpoints_f.empty())
      throw Error(ErrorCode::InvalidConfig, "empty strategy set");
    for (size_t i = 0; i + 1 < setpoints_f.size(); ++i)
      if (setpoints_f[i] >= setpoints_f[i + 1])
        throw Error(ErrorCode::InvalidConfig, "strategy set must increase strictly");
    for (double s : setpoints_f)
      if (s < curve.t_lower || s > curve.t_upper)
        throw Error(ErrorCode::OutOfBracket, "strategy outside the comfort bracket");
  }
};

enum class PriceMode { predicted, dlmp };
enum class PayoffMode { per_player, common };

// Payoffs are negated costs, one value per player per joint strategy cell.
// Cells are row-major with the first player slowest.
struct PayoffTensor {
  std::vector<int> players;               // bus ids, fixed order
  std::vector<int> shape;                 // strategies per player
  std::vector<std::vector<double>> values;  // [player][cell]
  PriceMode price_mode = PriceMode::predicted;
  long evaluations = 0;                   // joint evaluations spent building

  long size() const {
    long s = 1;
    for (int m : shape) s *= m;
    return s;
  }

  long flat_index(const std::vector<int>& joint) const {
    long f = 0;
    for (size_t p = 0; p < shape.size(); ++p) f = f * shape[p] + joint[p];
    return f;
  }

  double payoff(int player, const std::vector<int>& joint) const {
    return values[static_cast<size_t>(player)][static_cast<size_t>(flat_index(joint))];
  }

  std::vector<int> cell_of(long flat) const {
    std::vector<int> joint(shape.size());
    for (size_t p = shape.size(); p-- > 0;) {
      joint[p] = static_cast<int>(flat % shape[p]);
      flat /= shape[p];
    }
    return joint;
  }
};

struct GameContext {
  const ScenarioContext* scenario = nullptr;
  const PriceHistory* history = nullptr;
  PricePredictor predictor;
  int day = 1;
};

namespace detail {

inline std::vector<double> predicted_player_prices(const GameContext& gctx, int hour) {
  const ScenarioContext& sc = *gctx.scenario;
  if (gctx.history) {
    std::vector<double> prices;
    prices.reserve(sc.profiles.size());
    for (const auto& prof : sc.profiles) {
      const int idx = sc.network ? sc.network->bus_index(prof.bus) : 0;
      prices.push_back(gctx.predictor.predict(*gctx.history, gctx.day, hour, idx));
    }
    return prices;
  }
  if (sc.fixed_prices) return *sc.fixed_prices;
  throw Error(ErrorCode::MissingHistory, "predicted prices need a seeded history");
}

}  // namespace detail

// Builds the payoff tensor for one hour. price_mode::predicted prices every
// cell with the day-ahead prediction (one cheap evaluation per cell);
// price_mode::dlmp runs a full power-flow solve per cell.
inline PayoffTensor build_payoff_tensor(const std::vector<StrategySet>& players, int hour,
                                        const GameContext& gctx, PriceMode price_mode,
                                        PayoffMode payoff_mode = PayoffMode::per_player,
                                        double cap = 1e6) {
  const ScenarioContext& sc = *gctx.scenario;
  if (players.size() != sc.profiles.size())
    throw Error(ErrorCode::InvalidConfig, "one strategy set per player required");
  for (size_t p = 0; p < players.size(); ++p) {
    players[p].validate(sc.profiles[p].curve_params);
    if (players[p].player_bus != sc.profiles[p].bus)
      throw Error(ErrorCode::InvalidConfig, "strategy set order must match player order");
  }

  PayoffTensor t;
  t.price_mode = price_mode;
  double joint = 1.0;
  for (const auto& s : players) {
    t.players.push_back(s.player_bus);
    t.shape.push_back(static_cast<int>(s.setpoints_f.size()));
    joint *= static_cast<double>(s.setpoints_f.size());
  }
  if (joint > cap)
    throw Error(ErrorCode::GridTooLarge, "joint strategy count exceeds cap");

  std::optional<std::vector<double>> fixed;
  if (price_mode == PriceMode::predicted)
    fixed = detail::predicted_player_prices(gctx, hour);

  const long cells = t.size();
  t.values.assign(players.size(), std::vector<double>(cells, 0.0));
  std::vector<int> joint_idx(players.size(), 0);
  std::vector<double> setpoints(players.size());
  for (long f = 0; f < cells; ++f) {
    for (size_t p = 0; p < players.size(); ++p)
      setpoints[p] = players[p].setpoints_f[static_cast<size_t>(joint_idx[p])];
    const HourlyOutcome out =
        fixed ? social_cost_with_prices(setpoints, hour, sc, *fixed)
              : social_cost(setpoints, hour, sc);
    ++t.evaluations;
    for (size_t p = 0; p < players.size(); ++p)
      t.values[p][f] = payoff_mode == PayoffMode::common ? -out.social_cost
                                                         : -out.per_player_cost[p];
    for (size_t p = players.size(); p-- > 0;) {
      if (++joint_idx[p] < t.shape[p]) break;
      joint_idx[p] = 0;
    }
  }
  return t;
}

// Every joint pure strategy from which no player can improve unilaterally.
inline std::vector<std::vector<int>> pure_nash_enumerate(const PayoffTensor& t,
                                                         double tol = 1e-9) {
  std::vector<std::vector<int>> found;
  const long cells = t.size();
  for (long f = 0; f < cells; ++f) {
    std::vector<int> joint = t.cell_of(f);
    bool stable = true;
    for (size_t p = 0; p < t.shape.size() && stable; ++p) {
      const double own = t.values[p][f];
      std::vector<int> probe = joint;
      for (int j = 0; j < t.shape[p]; ++j) {
        if (j == joint[p]) continue;
        probe[p] = j;
        if (t.payoff(static_cast<int>(p), probe) > own + tol) {
          stable = false;
          break;
        }
      }
    }
    if (stable) found.push_back(std::move(joint));
  }
  return found;
}

struct GameTraceRow {
  int round = 0;
  int player_bus = 0;
  double chosen_setpoint_f = 0.0;
  double payoff_usd = 0.0;
  double price_gap = 0.0;
};

struct BestResponseConfig {
  double epsilon = 1.0;  // $/MWh price-gap threshold
  int max_rounds = 50;
  std::uint64_t seed = 0;
  PayoffMode payoff_mode = PayoffMode::per_player;
  double cap = 1e6;
};

struct GameOutcome {
  std::vector<int> equilibrium;   // joint strategy indices
  std::vector<double> setpoints_f;
  std::vector<double> payoffs;
  int iterations = 0;
  bool converged = false;
  double price_gap = 0.0;
  long evaluations = 0;
  std::vector<GameTraceRow> trace;
};

namespace detail {

// One sequential pass; each player moves only on strict improvement, and the
// lowest setpoint wins among tied improvers (a player already at a maximizer
// stays put). Returns whether anything changed.
inline bool best_response_pass(const PayoffTensor& t, std::vector<int>& joint) {
  bool changed = false;
  for (size_t p = 0; p < t.shape.size(); ++p) {
    std::vector<int> probe = joint;
    double best_v = -kInf;
    int best_j = joint[p];
    for (int j = 0; j < t.shape[p]; ++j) {
      probe[p] = j;
      const double v = t.payoff(static_cast<int>(p), probe);
      if (v > best_v + 1e-12) {
        best_v = v;
        best_j = j;
      }
    }
    if (best_v > t.payoff(static_cast<int>(p), joint) + 1e-12 && best_j != joint[p]) {
      joint[p] = best_j;
      changed = true;
    }
  }
  return changed;
}

inline std::vector<int> random_joint(const std::vector<int>& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> joint(shape.size());
  for (size_t p = 0; p < shape.size(); ++p) {
    std::uniform_int_distribution<int> pick(0, shape[p] - 1);
    joint[p] = pick(rng);
  }
  return joint;
}

inline bool is_pure_ne(const PayoffTensor& t, const std::vector<int>& joint,
                       double tol = 1e-12) {
  for (size_t p = 0; p < t.shape.size(); ++p) {
    const double own = t.payoff(static_cast<int>(p), joint);
    std::vector<int> probe = joint;
    for (int j = 0; j < t.shape[p]; ++j) {
      probe[p] = j;
      if (t.payoff(static_cast<int>(p), probe) > own + tol) return false;
    }
  }
  return true;
}

}  // namespace detail

// Best-response dynamics on a fixed tensor (prices never move); used directly
// by fixtures and as the inner engine of the full loop below.
inline GameOutcome best_response_on_tensor(const PayoffTensor& t,
                                           const BestResponseConfig& cfg) {
  GameOutcome out;
  std::vector<int> joint = detail::random_joint(t.shape, cfg.seed);
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    out.iterations = round;
    detail::best_response_pass(t, joint);
    if (detail::is_pure_ne(t, joint)) {
      out.converged = true;
      break;
    }
  }
  out.equilibrium = joint;
  out.evaluations = t.evaluations;
  for (size_t p = 0; p < t.shape.size(); ++p)
    out.payoffs.push_back(t.payoff(static_cast<int>(p), joint));
  return out;
}

// The full hourly game: bootstrap prices from the day-ahead prediction,
// rebuild payoffs each round, let every player take a turn, then clear the
// DLMP at the standing joint strategy and feed the nodal prices back. Stops
// when a whole round leaves strategies unchanged and the price gap is within
// epsilon.
inline GameOutcome best_response_loop(const std::vector<StrategySet>& players, int hour,
                                      const GameContext& gctx,
                                      const BestResponseConfig& cfg) {
  const ScenarioContext& sc = *gctx.scenario;
  if (cfg.max_rounds < 1)
    throw Error(ErrorCode::InvalidConfig, "max_rounds must be at least 1");
  std::vector<double> prices = detail::predicted_player_prices(gctx, hour);

  GameOutcome out;
  std::vector<int> shape;
  for (const auto& s : players) shape.push_back(static_cast<int>(s.setpoints_f.size()));
  std::vector<int> joint = detail::random_joint(shape, cfg.seed);

  ScenarioContext priced = sc;  // per-round fixed-price view
  GameContext inner = gctx;
  inner.scenario = &priced;

  PayoffTensor tensor;
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    out.iterations = round;
    priced.fixed_prices = prices;
    tensor = build_payoff_tensor(players, hour, inner, PriceMode::predicted,
                                 cfg.payoff_mode, cfg.cap);
    out.evaluations += tensor.evaluations;

    const size_t trace_base = out.trace.size();
    detail::best_response_pass(tensor, joint);
    const bool stable = detail::is_pure_ne(tensor, joint);
    for (size_t p = 0; p < players.size(); ++p)
      out.trace.push_back({out.iterations, players[p].player_bus,
                           players[p].setpoints_f[static_cast<size_t>(joint[p])],
                           tensor.payoff(static_cast<int>(p), joint), 0.0});

    // Clear the market at the standing strategies and measure the gap
    // between the prices the players assumed and the realized DLMPs.
    std::vector<double> setpoints(players.size());
    for (size_t p = 0; p < players.size(); ++p)
      setpoints[p] = players[p].setpoints_f[static_cast<size_t>(joint[p])];
    const DlmpSolution cleared = solve_dlmp_for_setpoints(setpoints, hour, sc);
    std::vector<double> realized;
    realized.reserve(players.size());
    for (const auto& prof : sc.profiles)
      realized.push_back(cleared.price_at(*sc.network, prof.bus).total);
    double gap = 0.0;
    for (size_t p = 0; p < players.size(); ++p)
      gap = std::max(gap, std::abs(realized[p] - prices[p]));
    out.price_gap = gap;
    for (size_t i = trace_base; i < out.trace.size(); ++i) out.trace[i].price_gap = gap;
    prices = std::move(realized);

    if (stable && gap <= cfg.epsilon) {
      out.converged = true;
      break;
    }
  }

  out.equilibrium = joint;
  for (size_t p = 0; p < players.size(); ++p) {
    out.setpoints_f.push_back(players[p].setpoints_f[static_cast<size_t>(joint[p])]);
    out.payoffs.push_back(tensor.payoff(static_cast<int>(p), joint));
  }
  return out;
}

// Equilibrium residual of a mixed profile: sum over players of the best pure
// deviation payoff minus the profile payoff. Nonnegative everywhere, zero
// exactly at a Nash equilibrium.
inline double verify_theorem1(const PayoffTensor& t,
                              const std::vector<std::vector<double>>& mixed,
                              double simplex_tol = 1e-9) {
  const size_t n = t.shape.size();
  if (mixed.size() != n)
    throw Error(ErrorCode::InvalidSimplex, "one mixing vector per player required");
  for (size_t p = 0; p < n; ++p) {
    if (mixed[p].size() != static_cast<size_t>(t.shape[p]))
      throw Error(ErrorCode::InvalidSimplex, "mixing vector length mismatch");
    double sum = 0.0;
    for (double a : mixed[p]) {
      if (a < -simplex_tol)
        throw Error(ErrorCode::InvalidSimplex, "negative mixing weight");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw Error(ErrorCode::InvalidSimplex, "mixing weights must sum to one");
  }

  // marg[p][j]: expected payoff to p when p plays pure j against the mix.
  std::vector<std::vector<double>> marg(n);
  for (size_t p = 0; p < n; ++p) marg[p].assign(static_cast<size_t>(t.shape[p]), 0.0);
  const long cells = t.size();
  for (long f = 0; f < cells; ++f) {
    const std::vector<int> joint = t.cell_of(f);
    for (size_t p = 0; p < n; ++p) {
      double w = 1.0;
      for (size_t q = 0; q < n; ++q)
        if (q != p) w *= mixed[q][static_cast<size_t>(joint[q])];
      if (w != 0.0)
        marg[p][static_cast<size_t>(joint[p])] += w * t.values[p][static_cast<size_t>(f)];
    }
  }

  double residual = 0.0;
  for (size_t p = 0; p < n; ++p) {
    double value = 0.0, best = -kInf;
    for (size_t j = 0; j < marg[p].size(); ++j) {
      value += mixed[p][j] * marg[p][j];
      best = std::max(best, marg[p][j]);
    }
    residual += best - value;
  }
  return residual;
}

}  // namespace socialgrid
