#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socialgrid/common.hpp"

namespace socialgrid {

enum class BusKind { source, load, junction };

inline const char* bus_kind_name(BusKind k) {
  switch (k) {
    case BusKind::source: return "source";
    case BusKind::load: return "load";
    case BusKind::junction: return "junction";
  }
  return "?";
}

struct Bus {
  int id = 0;
  BusKind kind = BusKind::load;
  double active_load = 0.0;    // kW
  double reactive_load = 0.0;  // kVar, carried for data fidelity only
};

struct Line {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;   // per unit
  double flow_limit = 0.0;  // kW
};

struct GeneratorOffer {
  int bus = 0;
  double offer_price = 0.0;  // $/MWh
  double q_min = 0.0;        // kW
  double q_max = 0.0;        // kW
};

struct LoadBid {
  int bus = 0;
  double bid_price = 0.0;  // $/MWh
  double demand = 0.0;     // kW
};

class NetworkModel {
 public:
  NetworkModel(std::vector<Bus> buses, std::vector<Line> lines,
               std::vector<GeneratorOffer> offers, std::vector<LoadBid> bids,
               int slack_bus)
      : buses_(std::move(buses)),
        lines_(std::move(lines)),
        offers_(std::move(offers)),
        bids_(std::move(bids)),
        slack_bus_(slack_bus) {
    // Canonical ordering by id makes downstream numerics independent of the
    // order entities appeared in the input file.
    std::sort(buses_.begin(), buses_.end(),
              [](const Bus& a, const Bus& b) { return a.id < b.id; });
    std::sort(lines_.begin(), lines_.end(),
              [](const Line& a, const Line& b) { return a.id < b.id; });
    std::sort(offers_.begin(), offers_.end(), [](const GeneratorOffer& a,
                                                 const GeneratorOffer& b) {
      return a.bus != b.bus ? a.bus < b.bus : a.offer_price < b.offer_price;
    });
    std::sort(bids_.begin(), bids_.end(), [](const LoadBid& a, const LoadBid& b) {
      return a.bus != b.bus ? a.bus < b.bus : a.bid_price < b.bid_price;
    });
    for (size_t i = 0; i < buses_.size(); ++i) bus_index_[buses_[i].id] = static_cast<int>(i);
  }

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Line>& lines() const { return lines_; }
  const std::vector<GeneratorOffer>& offers() const { return offers_; }
  const std::vector<LoadBid>& bids() const { return bids_; }
  int slack_bus() const { return slack_bus_; }

  int num_buses() const { return static_cast<int>(buses_.size()); }
  int num_lines() const { return static_cast<int>(lines_.size()); }

  bool has_bus(int id) const { return bus_index_.count(id) > 0; }
  int bus_index(int id) const {
    auto it = bus_index_.find(id);
    if (it == bus_index_.end())
      throw Error(ErrorCode::DanglingReference, "unknown bus " + std::to_string(id));
    return it->second;
  }
  const Bus& bus(int id) const { return buses_[bus_index(id)]; }

  double total_demand_kw() const {
    double d = 0.0;
    for (const auto& b : bids_) d += b.demand;
    return d;
  }

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<GeneratorOffer> offers_;
  std::vector<LoadBid> bids_;
  int slack_bus_;
  std::map<int, int> bus_index_;
};

// Dense generation shift factors: rows follow network line order, columns
// follow network bus order, slack column identically zero.
struct GsfMatrix {
  Eigen::MatrixXd entries;  // lines x buses
  int slack_bus = 0;
  std::vector<int> line_ids;
  std::vector<int> bus_ids;

  double at(int line_id, int bus_id) const {
    const auto lit = std::find(line_ids.begin(), line_ids.end(), line_id);
    const auto bit = std::find(bus_ids.begin(), bus_ids.end(), bus_id);
    if (lit == line_ids.end() || bit == bus_ids.end())
      throw Error(ErrorCode::DanglingReference, "gsf lookup outside network");
    return entries(lit - line_ids.begin(), bit - bus_ids.begin());
  }
};

namespace detail {

inline BusKind parse_bus_kind(const std::string& s) {
  if (s == "source") return BusKind::source;
  if (s == "load") return BusKind::load;
  if (s == "junction") return BusKind::junction;
  throw Error(ErrorCode::InvalidNetwork, "unknown bus kind '" + s + "'");
}

}  // namespace detail

// Parses and validates the network document. All violations are collected and
// reported together rather than failing at the first one.
inline NetworkModel build_network(const nlohmann::json& doc) {
  std::vector<std::string> violations;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<GeneratorOffer> offers;
  std::vector<LoadBid> bids;
  int slack_bus = 0;

  try {
    for (const auto& jb : doc.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      b.kind = detail::parse_bus_kind(jb.at("kind").get<std::string>());
      b.active_load = jb.value("active_load", 0.0);
      b.reactive_load = jb.value("reactive_load", 0.0);
      buses.push_back(b);
    }
    for (const auto& jl : doc.at("lines")) {
      Line l;
      l.id = jl.at("id").get<int>();
      l.from_bus = jl.at("from_bus").get<int>();
      l.to_bus = jl.at("to_bus").get<int>();
      l.reactance = jl.at("reactance").get<double>();
      l.flow_limit = jl.at("flow_limit").get<double>();
      lines.push_back(l);
    }
    for (const auto& jo : doc.value("offers", nlohmann::json::array())) {
      GeneratorOffer o;
      o.bus = jo.at("bus").get<int>();
      o.offer_price = jo.at("offer_price").get<double>();
      o.q_min = jo.at("q_min").get<double>();
      o.q_max = jo.at("q_max").get<double>();
      offers.push_back(o);
    }
    for (const auto& jb : doc.value("bids", nlohmann::json::array())) {
      LoadBid b;
      b.bus = jb.at("bus").get<int>();
      b.bid_price = jb.at("bid_price").get<double>();
      b.demand = jb.at("demand").get<double>();
      bids.push_back(b);
    }
    slack_bus = doc.at("slack_bus").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidNetwork, std::string("malformed network document: ") + e.what());
  }

  std::set<int> bus_ids;
  for (const auto& b : buses) {
    if (!bus_ids.insert(b.id).second)
      violations.push_back("duplicate bus id " + std::to_string(b.id));
    if (b.active_load < 0.0)
      violations.push_back("bus " + std::to_string(b.id) + " has negative active_load");
    if (b.kind == BusKind::junction && b.active_load != 0.0)
      violations.push_back("junction bus " + std::to_string(b.id) + " carries load");
  }
  std::set<int> line_ids;
  ErrorCode lead = ErrorCode::InvalidNetwork;
  auto mark = [&lead](ErrorCode c) {
    if (lead == ErrorCode::InvalidNetwork) lead = c;  // first specific code wins
  };
  for (const auto& l : lines) {
    if (!line_ids.insert(l.id).second)
      violations.push_back("duplicate line id " + std::to_string(l.id));
    if (l.reactance <= 0.0) {
      mark(ErrorCode::NonPositiveReactance);
      violations.push_back("line " + std::to_string(l.id) + " has non-positive reactance");
    }
    if (l.flow_limit <= 0.0)
      violations.push_back("line " + std::to_string(l.id) + " has non-positive flow_limit");
    if (l.from_bus == l.to_bus)
      violations.push_back("line " + std::to_string(l.id) + " connects a bus to itself");
    for (int end : {l.from_bus, l.to_bus})
      if (!bus_ids.count(end)) {
        mark(ErrorCode::DanglingReference);
        violations.push_back("line " + std::to_string(l.id) + " references absent bus " +
                             std::to_string(end));
      }
  }
  for (const auto& o : offers) {
    if (!bus_ids.count(o.bus)) {
      mark(ErrorCode::DanglingReference);
      violations.push_back("offer references absent bus " + std::to_string(o.bus));
    }
    if (o.q_min < 0.0 || o.q_min > o.q_max)
      violations.push_back("offer at bus " + std::to_string(o.bus) + " has invalid bounds");
    if (o.offer_price < 0.0)
      violations.push_back("offer at bus " + std::to_string(o.bus) + " has negative price");
  }
  for (const auto& b : bids) {
    if (!bus_ids.count(b.bus)) {
      mark(ErrorCode::DanglingReference);
      violations.push_back("bid references absent bus " + std::to_string(b.bus));
    }
    if (b.bid_price < 0.0 || b.demand < 0.0)
      violations.push_back("bid at bus " + std::to_string(b.bus) + " has negative entries");
  }
  if (!bus_ids.count(slack_bus)) {
    mark(ErrorCode::DanglingReference);
    violations.push_back("slack_bus " + std::to_string(slack_bus) + " does not exist");
  } else {
    for (const auto& b : buses)
      if (b.id == slack_bus && b.kind != BusKind::source)
        violations.push_back("slack_bus " + std::to_string(slack_bus) + " is not a source bus");
  }

  // Connectivity over valid lines only; unreachable buses are each reported.
  if (!buses.empty() && bus_ids.count(slack_bus)) {
    std::map<int, std::vector<int>> adj;
    for (const auto& l : lines)
      if (bus_ids.count(l.from_bus) && bus_ids.count(l.to_bus)) {
        adj[l.from_bus].push_back(l.to_bus);
        adj[l.to_bus].push_back(l.from_bus);
      }
    std::set<int> seen;
    std::vector<int> stack{slack_bus};
    seen.insert(slack_bus);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (seen.insert(v).second) stack.push_back(v);
    }
    if (seen.size() != bus_ids.size()) {
      mark(ErrorCode::DisconnectedGraph);
      for (int id : bus_ids)
        if (!seen.count(id))
          violations.push_back("bus " + std::to_string(id) + " unreachable from slack");
    }
  }

  if (!violations.empty()) throw ValidationError(lead, violations);
  return NetworkModel(std::move(buses), std::move(lines), std::move(offers),
                      std::move(bids), slack_bus);
}

inline NetworkModel build_network_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open network file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidNetwork, path + ": " + e.what());
  }
  return build_network(doc);
}

// Generation shift factors from the factorized reduced susceptance matrix.
// One factorization, one triangular solve per line; slack column stays zero.
inline GsfMatrix compute_gsf(const NetworkModel& net) {
  const int n = net.num_buses();
  const int nl = net.num_lines();
  const int slack = net.bus_index(net.slack_bus());

  // Reduced bus index: skip the slack row/column.
  std::vector<int> red(n, -1);
  int r = 0;
  for (int i = 0; i < n; ++i)
    if (i != slack) red[i] = r++;

  Eigen::MatrixXd b_red = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (const auto& l : net.lines()) {
    const double y = 1.0 / l.reactance;
    const int f = net.bus_index(l.from_bus);
    const int t = net.bus_index(l.to_bus);
    if (red[f] >= 0) b_red(red[f], red[f]) += y;
    if (red[t] >= 0) b_red(red[t], red[t]) += y;
    if (red[f] >= 0 && red[t] >= 0) {
      b_red(red[f], red[t]) -= y;
      b_red(red[t], red[f]) -= y;
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(b_red);
  if (!lu.isInvertible())
    throw Error(ErrorCode::SingularSusceptanceMatrix,
                "reduced susceptance matrix is singular");

  GsfMatrix gsf;
  gsf.slack_bus = net.slack_bus();
  gsf.entries = Eigen::MatrixXd::Zero(nl, n);
  gsf.bus_ids.reserve(n);
  for (const auto& b : net.buses()) gsf.bus_ids.push_back(b.id);
  gsf.line_ids.reserve(nl);

  for (int k = 0; k < nl; ++k) {
    const Line& l = net.lines()[k];
    gsf.line_ids.push_back(l.id);
    const int f = net.bus_index(l.from_bus);
    const int t = net.bus_index(l.to_bus);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    if (red[f] >= 0) rhs[red[f]] += 1.0;
    if (red[t] >= 0) rhs[red[t]] -= 1.0;
    // B is symmetric, so row of the PTDF = B^-1 (e_f - e_t) / x.
    const Eigen::VectorXd v = lu.solve(rhs) / l.reactance;
    for (int i = 0; i < n; ++i)
      if (i != slack) gsf.entries(k, i) = v[red[i]];
  }
  return gsf;
}

}  // namespace socialgrid
