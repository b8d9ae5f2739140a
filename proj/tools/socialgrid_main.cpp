// Command-line front end: scenario runs, single DLMP solves, pruner training
// and network validation.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "socialgrid/scenario.hpp"

namespace {

using namespace socialgrid;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitNonConvergence = 4;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Infeasible:
    case ErrorCode::Unbounded:
    case ErrorCode::SolverFailure:
    case ErrorCode::SingularSusceptanceMatrix:
      return kExitSolver;
    default:
      return kExitValidation;
  }
}

nlohmann::json dlmp_to_json(const NetworkModel& net, const DlmpSolution& sol,
                            bool emit_duals) {
  nlohmann::json doc;
  doc["lambda"] = sol.lambda;
  doc["surplus"] = sol.surplus;
  doc["degenerate_duals"] = sol.degenerate_duals;
  doc["dispatch"] = nlohmann::json::array();
  for (size_t g = 0; g < net.offers().size(); ++g)
    doc["dispatch"].push_back({{"bus", net.offers()[g].bus},
                               {"offer_price", net.offers()[g].offer_price},
                               {"kw", sol.dispatch_kw[g]}});
  doc["mu"] = nlohmann::json::array();
  for (int k = 0; k < net.num_lines(); ++k)
    doc["mu"].push_back({{"line", net.lines()[k].id}, {"value", sol.mu[k]}});
  for (int i = 0; i < net.num_buses(); ++i) {
    const auto& p = sol.prices[i];
    doc["prices"][std::to_string(net.buses()[i].id)] = {
        {"mec", p.mec}, {"mlc", p.mlc}, {"mcc", p.mcc}, {"total", p.total}};
  }
  doc["binding_lines"] = sol.binding_lines;
  if (emit_duals) {
    nlohmann::json duals;
    duals["balance"] = sol.lambda;
    duals["lines"] = nlohmann::json::array();
    for (int k = 0; k < net.num_lines(); ++k) duals["lines"].push_back(sol.mu[k]);
    nlohmann::json flows = nlohmann::json::array();
    for (int k = 0; k < net.num_lines(); ++k) flows.push_back(sol.flows_kw[k]);
    duals["flows_kw"] = std::move(flows);
    doc["dual_vector"] = std::move(duals);
  }
  return doc;
}

void write_or_print(const nlohmann::json& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
  out << doc.dump(2) << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool strict) {
  ScenarioConfig cfg = load_scenario_config(config_path);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (strict) cfg.strict = true;
  const DailyReport report = run_scenario(cfg);
  emit_report(report, cfg.output_dir);
  double engine_total = 0.0;
  for (const auto& [day, totals] : report.totals)
    engine_total += totals.at(report.engine_label);
  std::cout << "engine " << report.engine_label << ": total cost $" << engine_total
            << " over " << report.totals.size() << " day(s); reports in "
            << cfg.output_dir << "\n";
  if (!report.all_converged) {
    std::cerr << "warning: at least one hour did not converge\n";
    if (cfg.strict) return kExitNonConvergence;
  }
  return kExitOk;
}

int cmd_dlmp(const std::string& network_path, bool emit_duals, const std::string& out) {
  const NetworkModel net = build_network_from_file(network_path);
  const GsfMatrix gsf = compute_gsf(net);
  const DlmpSolution sol = solve_dc_dlmp(net, gsf);
  write_or_print(dlmp_to_json(net, sol, emit_duals), out);
  return kExitOk;
}

int cmd_train(const std::string& config_path, long itmax, long seed, int prune_k,
              const std::string& out) {
  ScenarioConfig cfg = load_scenario_config(config_path);
  if (itmax > 0) cfg.mdp.itmax = static_cast<int>(itmax);
  if (seed >= 0) cfg.mdp.seed = static_cast<std::uint64_t>(seed);
  if (prune_k > 0) cfg.mdp.prune_k = prune_k;
  cfg.mdp.validate();

  detail::ScenarioRuntime rt(cfg);
  PriceHistory history;
  const DlmpSolution seed_solution = solve_dc_dlmp(rt.net, rt.gsf);
  const std::vector<double> seed_prices = detail::bus_price_vector(rt.net, seed_solution);
  for (int day = -6; day <= 0; ++day)
    for (int hour = 0; hour < 24; ++hour) history.record(day, hour, seed_prices);

  GameContext gctx;
  gctx.scenario = &rt.ctx;
  gctx.history = &history;
  gctx.day = 1;
  std::vector<int> hours;
  for (int h = cfg.hour_lo; h <= cfg.hour_hi; ++h) hours.push_back(h);
  const TrainResult trained = train_pruner(rt.players, hours, gctx, cfg.mdp);
  write_or_print(qtables_to_json(trained, rt.players), out);
  return kExitOk;
}

int cmd_validate(const std::string& network_path) {
  try {
    const NetworkModel net = build_network_from_file(network_path);
    compute_gsf(net);
    std::cout << "ok: " << net.num_buses() << " buses, " << net.num_lines()
              << " lines, " << net.offers().size() << " offers, " << net.bids().size()
              << " bids, total demand " << net.total_demand_kw() << " kW\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "invalid network:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"campus DLMP and HVAC social-cost scheduling toolkit"};
  app.require_subcommand(1);

  std::string config_path, network_path, out_path;
  bool emit_duals = false, strict = false;
  long itmax = -1, seed = -1;
  int prune_k = -1;

  auto* run = app.add_subcommand("run", "run a scenario and write reports");
  run->add_option("--config", config_path, "scenario config JSON")->required();
  run->add_option("--out", out_path, "override the report directory");
  run->add_flag("--strict", strict, "exit 4 when any hour fails to converge");

  auto* dlmp = app.add_subcommand("dlmp", "solve one DC-DLMP and print the solution");
  dlmp->add_option("--network", network_path, "network JSON")->required();
  dlmp->add_flag("--emit-duals", emit_duals, "include the full dual vector");
  dlmp->add_option("--out", out_path, "write JSON here instead of stdout");

  auto* train = app.add_subcommand("train", "train the strategy pruner");
  train->add_option("--config", config_path, "scenario config JSON")->required();
  train->add_option("--itmax", itmax, "override training iterations");
  train->add_option("--seed", seed, "override the training seed");
  train->add_option("--prune-k", prune_k, "strategies kept per state");
  train->add_option("--out", out_path, "write the q-table export here");

  auto* validate = app.add_subcommand("validate", "validate a network document");
  validate->add_option("--network", network_path, "network JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_path, strict);
    if (dlmp->parsed()) return cmd_dlmp(network_path, emit_duals, out_path);
    if (train->parsed()) return cmd_train(config_path, itmax, seed, prune_k, out_path);
    if (validate->parsed()) return cmd_validate(network_path);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
