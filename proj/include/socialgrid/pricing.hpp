#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "socialgrid/grid.hpp"
#include "socialgrid/simplex.hpp"

namespace socialgrid {

struct BusPrice {
  double mec = 0.0;
  double mlc = 0.0;  // identically zero under the DC model
  double mcc = 0.0;
  double total = 0.0;
};

struct DlmpSolution {
  std::vector<double> dispatch_kw;       // per offer, network offer order
  double surplus = 0.0;                  // $ for the hour
  double lambda = 0.0;                   // $/MWh balance dual
  std::vector<double> mu;                // $/MWh per line, network line order
  std::vector<BusPrice> prices;          // per bus, network bus order
  std::set<int> binding_lines;           // line ids at their limit
  std::vector<double> flows_kw;          // per line
  bool degenerate_duals = false;
  double generation_cost = 0.0;          // $ for the hour, the LP objective
  int iterations = 0;

  const BusPrice& price_at(const NetworkModel& net, int bus_id) const {
    return prices.at(static_cast<size_t>(net.bus_index(bus_id)));
  }
};

// Demand overrides replace the bid demand (kW) at the given buses for one
// solve; buses without a bid in the network are not allowed here.
using DemandOverrides = std::map<int, double>;

namespace detail {

struct MarketLp {
  LpProblem lp;
  std::vector<double> demand_mw;  // per bus index
  double bid_value = 0.0;         // $ at fixed demand
};

inline MarketLp build_market_lp(const NetworkModel& net, const GsfMatrix& gsf,
                                const DemandOverrides& overrides) {
  for (const auto& [bus, kw] : overrides) {
    bool found = false;
    for (const auto& b : net.bids()) found = found || b.bus == bus;
    if (!found)
      throw Error(ErrorCode::DanglingReference,
                  "demand override at bus " + std::to_string(bus) + " without a bid");
    if (kw < 0.0)
      throw Error(ErrorCode::InvalidNetwork, "negative demand override");
  }

  MarketLp out;
  const int n_bus = net.num_buses();
  const int n_line = net.num_lines();
  const int n_gen = static_cast<int>(net.offers().size());

  // An override replaces the bus's total bid demand; with several bids at one
  // bus the first carries the new total and the rest drop to zero.
  out.demand_mw.assign(n_bus, 0.0);
  std::set<int> override_spent;
  for (const auto& b : net.bids()) {
    double kw = b.demand;
    if (auto it = overrides.find(b.bus); it != overrides.end())
      kw = override_spent.insert(b.bus).second ? it->second : 0.0;
    out.demand_mw[net.bus_index(b.bus)] += kw_to_mw(kw);
    out.bid_value += b.bid_price * kw_to_mw(kw);
  }
  double total_demand = 0.0;
  for (double d : out.demand_mw) total_demand += d;

  // min sum(u_i q_i)  st  sum q_i = D,  -F_k <= gsf_k . injection <= F_k,
  // with withdrawals folded into the row bounds.
  LpProblem& lp = out.lp;
  lp.cost.resize(n_gen);
  lp.col_lo.resize(n_gen);
  lp.col_up.resize(n_gen);
  for (int g = 0; g < n_gen; ++g) {
    const auto& o = net.offers()[g];
    lp.cost[g] = o.offer_price;
    lp.col_lo[g] = kw_to_mw(o.q_min);
    lp.col_up[g] = kw_to_mw(o.q_max);
  }
  lp.a = Eigen::MatrixXd::Zero(1 + n_line, n_gen);
  lp.row_lo.resize(1 + n_line);
  lp.row_up.resize(1 + n_line);
  for (int g = 0; g < n_gen; ++g) lp.a(0, g) = 1.0;
  lp.row_lo[0] = lp.row_up[0] = total_demand;
  for (int k = 0; k < n_line; ++k) {
    const double limit = kw_to_mw(net.lines()[k].flow_limit);
    double withdrawal = 0.0;
    for (int i = 0; i < n_bus; ++i) withdrawal += gsf.entries(k, i) * out.demand_mw[i];
    for (int g = 0; g < n_gen; ++g)
      lp.a(1 + k, g) = gsf.entries(k, net.bus_index(net.offers()[g].bus));
    lp.row_lo[1 + k] = -limit + withdrawal;
    lp.row_up[1 + k] = limit + withdrawal;
  }
  return out;
}

}  // namespace detail

inline DlmpSolution solve_dc_dlmp(const NetworkModel& net, const GsfMatrix& gsf,
                                  const DemandOverrides& overrides = {}) {
  const detail::MarketLp market = detail::build_market_lp(net, gsf, overrides);
  const LpSolution lp = SimplexSolver().solve(market.lp);
  switch (lp.status) {
    case LpStatus::Optimal:
      break;
    case LpStatus::Infeasible:
      throw Error(ErrorCode::Infeasible, "demand exceeds deliverable supply");
    case LpStatus::Unbounded:
      throw Error(ErrorCode::Unbounded, "malformed offers admit unbounded surplus");
    case LpStatus::IterationLimit:
      throw Error(ErrorCode::SolverFailure, "simplex iteration limit");
  }

  const int n_bus = net.num_buses();
  const int n_line = net.num_lines();
  DlmpSolution sol;
  sol.iterations = lp.iterations;
  sol.degenerate_duals = lp.degenerate_duals;
  sol.generation_cost = lp.objective;
  sol.surplus = market.bid_value - lp.objective;
  sol.dispatch_kw.resize(net.offers().size());
  for (size_t g = 0; g < net.offers().size(); ++g) sol.dispatch_kw[g] = mw_to_kw(lp.x[g]);

  sol.lambda = lp.row_dual[0];
  sol.mu.assign(n_line, 0.0);
  for (int k = 0; k < n_line; ++k) sol.mu[k] = lp.row_dual[1 + k];

  // p_j = lambda + sum_k gsf(k, j) mu_k; MLC is zero by model.
  sol.prices.resize(n_bus);
  for (int i = 0; i < n_bus; ++i) {
    BusPrice p;
    p.mec = sol.lambda;
    p.mlc = 0.0;
    for (int k = 0; k < n_line; ++k) p.mcc += gsf.entries(k, i) * sol.mu[k];
    p.total = p.mec + p.mlc + p.mcc;
    sol.prices[i] = p;
  }

  sol.flows_kw.resize(n_line);
  for (int k = 0; k < n_line; ++k) {
    double flow = lp.row_value[1 + k];
    for (int i = 0; i < n_bus; ++i) flow -= gsf.entries(k, i) * market.demand_mw[i];
    sol.flows_kw[k] = mw_to_kw(flow);
    const double limit = net.lines()[k].flow_limit;
    if (std::abs(std::abs(sol.flows_kw[k]) - limit) <= 1e-6 * std::max(1.0, limit))
      sol.binding_lines.insert(net.lines()[k].id);
  }
  return sol;
}

// Compares the reported nodal price against a finite difference of the
// dispatch-cost objective; used by the acceptance suite to validate duals.
inline double price_sensitivity_check(const NetworkModel& net, const GsfMatrix& gsf,
                                      int bus_id, double delta_kw,
                                      const DemandOverrides& base_overrides = {}) {
  if (delta_kw == 0.0) return 0.0;
  const DlmpSolution base = solve_dc_dlmp(net, gsf, base_overrides);
  const double price = base.price_at(net, bus_id).total;

  double base_demand = 0.0;
  bool has_bid = false;
  for (const auto& b : net.bids())
    if (b.bus == bus_id) {
      has_bid = true;
      base_demand += b.demand;
    }
  if (auto it = base_overrides.find(bus_id); it != base_overrides.end())
    base_demand = it->second;
  if (!has_bid)
    throw Error(ErrorCode::DanglingReference,
                "sensitivity probe needs a bid at bus " + std::to_string(bus_id));

  DemandOverrides bumped = base_overrides;
  bumped[bus_id] = base_demand + delta_kw;
  const DlmpSolution moved = solve_dc_dlmp(net, gsf, bumped);
  const double fd = (moved.generation_cost - base.generation_cost) / kw_to_mw(delta_kw);
  return std::abs(fd - price) / std::max(1.0, std::abs(price));
}

// Day-indexed history of per-bus nodal prices, single writer.
class PriceHistory {
 public:
  void record(int day, int hour, std::vector<double> prices_by_bus) {
    history_[{day, hour}] = std::move(prices_by_bus);
  }

  bool has(int day, int hour) const { return history_.count({day, hour}) > 0; }

  const std::vector<double>& at(int day, int hour) const {
    auto it = history_.find({day, hour});
    if (it == history_.end())
      throw Error(ErrorCode::MissingHistory,
                  "no prices for day " + std::to_string(day) + " hour " + std::to_string(hour));
    return it->second;
  }

  bool empty() const { return history_.empty(); }

 private:
  std::map<std::pair<int, int>, std::vector<double>> history_;
};

// p_hat^t[d] = k1 p^t[d-1] + k2 p^t[d-2] + k7 p^t[d-7]
struct PricePredictor {
  double k1 = 0.8765;
  double k2 = 0.0;
  double k7 = 0.1025;

  double predict(const PriceHistory& hist, int day, int hour, int bus_index) const {
    const auto& d1 = hist.at(day - 1, hour);
    const auto& d2 = hist.at(day - 2, hour);
    const auto& d7 = hist.at(day - 7, hour);
    return k1 * d1.at(bus_index) + k2 * d2.at(bus_index) + k7 * d7.at(bus_index);
  }
};

inline double predict_price(const PriceHistory& hist, int day, int hour, int bus_index,
                            const PricePredictor& coeffs = {}) {
  return coeffs.predict(hist, day, hour, bus_index);
}

}  // namespace socialgrid
