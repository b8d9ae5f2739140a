#pragma once

#include <optional>
#include <vector>

#include "socialgrid/building.hpp"
#include "socialgrid/pricing.hpp"

namespace socialgrid {

struct SocialCostParams {
  double w = 0.1;               // efficiency weight
  double alpha = 2.0;           // $ per person-hour at full productivity
  double btu_per_kwh = kBtuPerKwh;
};

struct HourlyOutcome {
  int hour = 0;
  std::vector<double> setpoints_f;
  std::vector<double> energy_kwh;
  std::vector<double> prices;        // $/MWh at each player's bus
  std::vector<double> productivity;  // fraction per player
  std::vector<double> per_player_cost;
  double social_cost = 0.0;
};

// Everything a per-hour evaluation needs. The network and its shift factors
// are immutable and shared; fixed_prices short-circuits the DLMP solve for
// unit tests and for payoff evaluation under predicted prices.
struct ScenarioContext {
  const NetworkModel* network = nullptr;
  const GsfMatrix* gsf = nullptr;
  std::vector<BuildingProfile> profiles;
  WeatherProfile weather;
  SocialCostParams params;
  std::optional<std::vector<double>> fixed_prices;  // per player, $/MWh

  int num_players() const { return static_cast<int>(profiles.size()); }

  void validate() const {
    if (profiles.empty()) throw Error(ErrorCode::InvalidConfig, "no player buildings");
    if (!fixed_prices) {
      if (!network || !gsf)
        throw Error(ErrorCode::InvalidConfig, "endogenous prices need a network and gsf");
      for (const auto& p : profiles) {
        if (!network->has_bus(p.bus))
          throw Error(ErrorCode::DanglingReference,
                      "building " + p.name + " sits on absent bus " + std::to_string(p.bus));
        bool has_bid = false;
        for (const auto& b : network->bids()) has_bid = has_bid || b.bus == p.bus;
        if (!has_bid)
          throw Error(ErrorCode::InvalidConfig,
                      "building " + p.name + " has no bid at bus " + std::to_string(p.bus));
      }
    } else if (fixed_prices->size() != profiles.size()) {
      throw Error(ErrorCode::InvalidConfig, "fixed price vector size mismatch");
    }
  }
};

namespace detail {

struct PlayerEval {
  std::vector<double> energy_kwh;
  std::vector<double> productivity;
};

inline PlayerEval evaluate_players(const std::vector<double>& setpoints_f, int hour,
                                   const ScenarioContext& ctx) {
  if (setpoints_f.size() != ctx.profiles.size())
    throw Error(ErrorCode::InvalidConfig, "one setpoint per player required");
  const double t_out = ctx.weather.at(hour);
  PlayerEval ev;
  ev.energy_kwh.reserve(setpoints_f.size());
  ev.productivity.reserve(setpoints_f.size());
  for (size_t k = 0; k < setpoints_f.size(); ++k) {
    const auto& prof = ctx.profiles[k];
    ev.productivity.push_back(productivity(prof.curve_params, setpoints_f[k]));
    const double btu = energy_btu(prof.energy_model, hour, setpoints_f[k], t_out);
    ev.energy_kwh.push_back(btu / ctx.params.btu_per_kwh);
  }
  return ev;
}

inline HourlyOutcome assemble_outcome(const std::vector<double>& setpoints_f, int hour,
                                      const ScenarioContext& ctx, const PlayerEval& ev,
                                      const std::vector<double>& prices) {
  HourlyOutcome out;
  out.hour = hour;
  out.setpoints_f = setpoints_f;
  out.energy_kwh = ev.energy_kwh;
  out.productivity = ev.productivity;
  out.prices = prices;
  out.per_player_cost.resize(setpoints_f.size());
  for (size_t k = 0; k < setpoints_f.size(); ++k) {
    const double utility = prices[k] * (ev.energy_kwh[k] / 1000.0);  // $/MWh x MWh
    const double lost_work = ctx.params.w * ctx.params.alpha *
                             (1.0 - ev.productivity[k]) * ctx.profiles[k].occupancy_at(hour);
    out.per_player_cost[k] = utility + lost_work;
    out.social_cost += out.per_player_cost[k];
  }
  return out;
}

}  // namespace detail

// Full DLMP solution for the joint setpoints; demand at each player's bus is
// baseline plus modeled HVAC consumption.
inline DlmpSolution solve_dlmp_for_setpoints(const std::vector<double>& setpoints_f,
                                             int hour, const ScenarioContext& ctx) {
  const detail::PlayerEval ev = detail::evaluate_players(setpoints_f, hour, ctx);
  DemandOverrides overrides;
  for (size_t k = 0; k < ctx.profiles.size(); ++k)
    overrides[ctx.profiles[k].bus] = ctx.profiles[k].baseline_at(hour) + ev.energy_kwh[k];
  return solve_dc_dlmp(*ctx.network, *ctx.gsf, overrides);
}

// Social cost at explicitly supplied per-player prices (no power-flow solve).
inline HourlyOutcome social_cost_with_prices(const std::vector<double>& setpoints_f,
                                             int hour, const ScenarioContext& ctx,
                                             const std::vector<double>& prices) {
  const detail::PlayerEval ev = detail::evaluate_players(setpoints_f, hour, ctx);
  if (prices.size() != setpoints_f.size())
    throw Error(ErrorCode::InvalidConfig, "one price per player required");
  return detail::assemble_outcome(setpoints_f, hour, ctx, ev, prices);
}

// Social cost with prices from the context: fixed when provided, otherwise
// endogenous via one DC-DLMP solve at the implied demands.
inline HourlyOutcome social_cost(const std::vector<double>& setpoints_f, int hour,
                                 const ScenarioContext& ctx) {
  if (ctx.fixed_prices)
    return social_cost_with_prices(setpoints_f, hour, ctx, *ctx.fixed_prices);
  const detail::PlayerEval ev = detail::evaluate_players(setpoints_f, hour, ctx);
  DemandOverrides overrides;
  for (size_t k = 0; k < ctx.profiles.size(); ++k)
    overrides[ctx.profiles[k].bus] = ctx.profiles[k].baseline_at(hour) + ev.energy_kwh[k];
  const DlmpSolution dlmp = solve_dc_dlmp(*ctx.network, *ctx.gsf, overrides);
  std::vector<double> prices;
  prices.reserve(ctx.profiles.size());
  for (const auto& prof : ctx.profiles)
    prices.push_back(dlmp.price_at(*ctx.network, prof.bus).total);
  return detail::assemble_outcome(setpoints_f, hour, ctx, ev, prices);
}

struct BruteForceResult {
  std::vector<double> setpoints_f;
  HourlyOutcome outcome;
  long evaluations = 0;
};

// Exhaustive scan of the joint setpoint grid. Enumeration is lexicographic
// and improvement strict, so ties resolve to the smallest setpoint vector.
inline BruteForceResult brute_force_optimum(int hour,
                                            const std::vector<std::vector<double>>& grids,
                                            const ScenarioContext& ctx,
                                            double cap = 1e6) {
  if (grids.size() != ctx.profiles.size())
    throw Error(ErrorCode::InvalidConfig, "one grid per player required");
  double joint = 1.0;
  for (const auto& g : grids) {
    if (g.empty()) throw Error(ErrorCode::InvalidConfig, "empty setpoint grid");
    joint *= static_cast<double>(g.size());
  }
  if (joint > cap)
    throw Error(ErrorCode::GridTooLarge,
                std::to_string(static_cast<long long>(joint)) + " joint strategies exceed cap");

  const size_t n = grids.size();
  std::vector<size_t> idx(n, 0);
  std::vector<double> point(n);
  BruteForceResult best;
  bool have = false;
  for (;;) {
    for (size_t k = 0; k < n; ++k) point[k] = grids[k][idx[k]];
    HourlyOutcome out = social_cost(point, hour, ctx);
    ++best.evaluations;
    if (!have || out.social_cost < best.outcome.social_cost) {
      best.outcome = out;
      best.setpoints_f = point;
      have = true;
    }
    // odometer with the last player fastest keeps enumeration lexicographic
    size_t k = n;
    while (k > 0) {
      --k;
      if (++idx[k] < grids[k].size()) break;
      idx[k] = 0;
      if (k == 0) return best;
    }
  }
}

}  // namespace socialgrid
