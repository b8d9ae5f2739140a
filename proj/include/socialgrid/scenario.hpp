#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "socialgrid/marl.hpp"

namespace socialgrid {

enum class Engine { brute, game, rl };

inline const char* engine_name(Engine e) {
  switch (e) {
    case Engine::brute: return "brute";
    case Engine::game: return "game";
    case Engine::rl: return "rl";
  }
  return "?";
}

struct BuildingSpec {
  int bus = 0;
  EnergyModel model = RegressionModel{};
  ProductivityCurve curve;
};

struct ScenarioConfig {
  std::string network_path;
  std::string profiles_path;
  Engine engine = Engine::game;
  int hour_lo = 10, hour_hi = 21;
  int days = 1;
  std::vector<double> fixed_baselines{67.0, 71.0, 75.0};
  SocialCostParams social;
  BestResponseConfig game;
  std::vector<double> strategy_grid{67.0, 69.0, 71.0, 73.0, 75.0, 77.0, 79.0};
  MdpConfig mdp;
  std::map<std::string, BuildingSpec> buildings;  // keyed by profile column name
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  double brute_cap = 1e6;
  bool strict = false;  // non-convergence becomes a hard failure
  nlohmann::json echo;  // original document, for the metadata report
};

namespace detail {

inline EnergyModel parse_energy_model(const nlohmann::json& j) {
  const std::string type = j.value("type", "regression");
  if (type == "regression") {
    RegressionModel m;
    m.scale = j.value("scale", 1.0);
    m.c_t = j.value("c_t", m.c_t);
    m.c_out = j.value("c_out", m.c_out);
    m.c_in = j.value("c_in", m.c_in);
    m.c_0 = j.value("c_0", m.c_0);
    return m;
  }
  if (type == "feedforward") {
    if (j.contains("weights_path")) {
      std::ifstream in(j.at("weights_path").get<std::string>());
      if (!in) throw Error(ErrorCode::IoError, "cannot open weight file");
      nlohmann::json doc;
      in >> doc;
      return load_feedforward(doc);
    }
    return load_feedforward(j);
  }
  if (type == "tabulated") {
    TabulatedModel m;
    m.hours = j.at("hours").get<std::vector<double>>();
    m.tins = j.at("tins").get<std::vector<double>>();
    m.touts = j.at("touts").get<std::vector<double>>();
    m.values = j.at("values").get<std::vector<double>>();
    if (m.values.size() != m.hours.size() * m.tins.size() * m.touts.size())
      throw Error(ErrorCode::InvalidConfig, "tabulated grid size mismatch");
    return m;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown energy model type '" + type + "'");
}

}  // namespace detail

inline ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
  }

  ScenarioConfig cfg;
  cfg.echo = doc;
  try {
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](const std::string& p) {
      return std::filesystem::path(p).is_absolute() ? p : (base / p).string();
    };
    cfg.network_path = resolve(doc.at("network").get<std::string>());
    cfg.profiles_path = resolve(doc.at("profiles").get<std::string>());
    const std::string engine = doc.value("engine", "game");
    if (engine == "brute") cfg.engine = Engine::brute;
    else if (engine == "game") cfg.engine = Engine::game;
    else if (engine == "rl") cfg.engine = Engine::rl;
    else throw Error(ErrorCode::InvalidConfig, "unknown engine '" + engine + "'");
    if (doc.contains("hours")) {
      cfg.hour_lo = doc["hours"].at(0).get<int>();
      cfg.hour_hi = doc["hours"].at(1).get<int>();
    }
    cfg.days = doc.value("days", 1);
    if (doc.contains("fixed_baselines"))
      cfg.fixed_baselines = doc["fixed_baselines"].get<std::vector<double>>();
    if (doc.contains("social")) {
      cfg.social.w = doc["social"].value("w", cfg.social.w);
      cfg.social.alpha = doc["social"].value("alpha", cfg.social.alpha);
    }
    if (doc.contains("game")) {
      cfg.game.epsilon = doc["game"].value("epsilon", cfg.game.epsilon);
      cfg.game.max_rounds = doc["game"].value("max_rounds", cfg.game.max_rounds);
      const std::string mode = doc["game"].value("payoff_mode", "per_player");
      cfg.game.payoff_mode =
          mode == "common" ? PayoffMode::common : PayoffMode::per_player;
    }
    if (doc.contains("strategy_grid"))
      cfg.strategy_grid = doc["strategy_grid"].get<std::vector<double>>();
    if (doc.contains("mdp")) {
      const auto& m = doc["mdp"];
      cfg.mdp.mu = m.value("mu", cfg.mdp.mu);
      cfg.mdp.itmax = m.value("itmax", cfg.mdp.itmax);
      cfg.mdp.c = m.value("c", cfg.mdp.c);
      cfg.mdp.d = m.value("d", cfg.mdp.d);
      cfg.mdp.prune_k = m.value("prune_k", cfg.mdp.prune_k);
      cfg.mdp.price_bands = m.value("price_bands", cfg.mdp.price_bands);
      cfg.mdp.band_lo = m.value("band_lo", cfg.mdp.band_lo);
      cfg.mdp.band_hi = m.value("band_hi", cfg.mdp.band_hi);
      cfg.mdp.literal_step3 = m.value("literal_step3", cfg.mdp.literal_step3);
    }
    for (const auto& [name, jb] : doc.at("buildings").items()) {
      BuildingSpec spec;
      spec.bus = jb.at("bus").get<int>();
      if (jb.contains("energy_model"))
        spec.model = detail::parse_energy_model(jb["energy_model"]);
      cfg.buildings[name] = std::move(spec);
    }
    cfg.seed = doc.value("seed", 0);
    cfg.game.seed = cfg.seed;
    cfg.mdp.seed = doc.contains("mdp") && doc["mdp"].contains("seed")
                       ? doc["mdp"]["seed"].get<std::uint64_t>()
                       : cfg.seed;
    if (doc.contains("output_dir"))
      cfg.output_dir = resolve(doc["output_dir"].get<std::string>());
    cfg.brute_cap = doc.value("brute_cap", cfg.brute_cap);
    cfg.strict = doc.value("strict", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad scenario config: ") + e.what());
  }
  if (cfg.hour_lo < 0 || cfg.hour_hi > 23 || cfg.hour_lo > cfg.hour_hi)
    throw Error(ErrorCode::InvalidConfig, "hour range must sit inside one day");
  if (cfg.days < 1) throw Error(ErrorCode::InvalidConfig, "days must be at least 1");
  cfg.mdp.validate();
  return cfg;
}

struct ReportRow {
  int day = 0;
  int hour = 0;
  std::string label;  // engine name or fixed_<T>
  std::string player;
  double setpoint_f = 0.0;
  double energy_kwh = 0.0;
  double price = 0.0;
  double productivity = 0.0;
  double cost = 0.0;
};

struct TraceRow {
  int day = 0;
  int hour = 0;
  GameTraceRow row;
};

struct HourStatus {
  int day = 0;
  int hour = 0;
  bool converged = true;
  int iterations = 0;
};

struct DailyReport {
  std::vector<ReportRow> rows;
  std::map<int, std::map<std::string, double>> totals;  // day -> label -> $
  std::map<int, std::map<std::string, double>> savings; // day -> baseline -> $
  std::vector<TraceRow> trace;
  std::vector<HourStatus> statuses;
  PriceHistory history;
  long engine_evaluations = 0;
  bool all_converged = true;
  std::string engine_label;
  std::uint64_t seed = 0;
  nlohmann::json config_echo;
};

namespace detail {

struct ScenarioRuntime {
  NetworkModel net;
  GsfMatrix gsf;
  ScenarioContext ctx;
  std::vector<StrategySet> players;

  ScenarioRuntime(const ScenarioConfig& cfg)
      : net(build_network_from_file(cfg.network_path)), gsf(compute_gsf(net)) {
    auto [profiles, weather] = load_profiles_from_file(cfg.profiles_path);
    ctx.network = &net;
    ctx.gsf = &gsf;
    ctx.weather = std::move(weather);
    ctx.params = cfg.social;
    for (auto& prof : profiles) {
      const auto it = cfg.buildings.find(prof.name);
      if (it == cfg.buildings.end())
        throw Error(ErrorCode::InvalidConfig,
                    "profile column '" + prof.name + "' has no building entry");
      prof.bus = it->second.bus;
      prof.energy_model = it->second.model;
      prof.curve_params = it->second.curve;
      ctx.profiles.push_back(std::move(prof));
    }
    if (ctx.profiles.size() != cfg.buildings.size())
      throw Error(ErrorCode::InvalidConfig, "building entries and profile columns disagree");
    ctx.validate();
    if (cfg.hour_hi >= ctx.weather.hours())
      throw Error(ErrorCode::InvalidConfig, "hour range exceeds profile coverage");

    for (const auto& prof : ctx.profiles) {
      StrategySet s;
      s.player_bus = prof.bus;
      for (double t : cfg.strategy_grid)
        if (t >= prof.curve_params.t_lower && t <= prof.curve_params.t_upper)
          s.setpoints_f.push_back(t);
      s.validate(prof.curve_params);
      players.push_back(std::move(s));
    }
  }
};

inline std::vector<double> bus_price_vector(const NetworkModel& net,
                                            const DlmpSolution& sol) {
  std::vector<double> v(sol.prices.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = sol.prices[i].total;
  return v;
}

}  // namespace detail

// Runs the configured scenario: price history is seeded with one uncongested
// solve for days -6..0, then each simulated day walks the hour range, lets
// the chosen engine plan setpoints, clears the DLMP at the plan and feeds the
// realized prices back into the history for the following days.
inline DailyReport run_scenario(const ScenarioConfig& cfg) {
  detail::ScenarioRuntime rt(cfg);
  DailyReport report;
  report.engine_label = engine_name(cfg.engine);
  report.seed = cfg.seed;
  report.config_echo = cfg.echo;

  // Cold start: the predictor needs day-1, day-2 and day-7 lookups on day 1.
  const DlmpSolution seed_solution = solve_dc_dlmp(rt.net, rt.gsf);
  const std::vector<double> seed_prices = detail::bus_price_vector(rt.net, seed_solution);
  for (int day = -6; day <= 0; ++day)
    for (int hour = 0; hour < 24; ++hour) report.history.record(day, hour, seed_prices);

  GameContext gctx;
  gctx.scenario = &rt.ctx;
  gctx.history = &report.history;

  // The RL engine trains once, against the seeded day-1 predictions.
  std::optional<TrainResult> trained;
  if (cfg.engine == Engine::rl) {
    std::vector<int> hours;
    for (int h = cfg.hour_lo; h <= cfg.hour_hi; ++h) hours.push_back(h);
    gctx.day = 1;
    trained = train_pruner(rt.players, hours, gctx, cfg.mdp);
  }

  for (int day = 1; day <= cfg.days; ++day) {
    gctx.day = day;
    std::map<std::string, double> day_totals;
    for (int hour = cfg.hour_lo; hour <= cfg.hour_hi; ++hour) {
      BestResponseConfig hour_game = cfg.game;
      hour_game.seed = cfg.seed ^ (static_cast<std::uint64_t>(day) * 1000 + hour);

      std::vector<double> plan;
      HourStatus status{day, hour, true, 0};
      if (cfg.engine == Engine::brute) {
        std::vector<std::vector<double>> grids;
        for (const auto& s : rt.players) grids.push_back(s.setpoints_f);
        BruteForceResult best = brute_force_optimum(hour, grids, rt.ctx, cfg.brute_cap);
        plan = best.setpoints_f;
        report.engine_evaluations += best.evaluations;
      } else {
        GameOutcome outcome =
            cfg.engine == Engine::game
                ? best_response_loop(rt.players, hour, gctx, hour_game)
                : rl_game_pipeline(rt.players, hour, gctx, *trained, hour_game).game;
        plan = outcome.setpoints_f;
        status.converged = outcome.converged;
        status.iterations = outcome.iterations;
        report.engine_evaluations += outcome.evaluations;
        report.all_converged = report.all_converged && outcome.converged;
        for (const auto& row : outcome.trace) report.trace.push_back({day, hour, row});
      }
      report.statuses.push_back(status);

      // One clearing at the plan yields the hour's outcome rows and the
      // realized nodal prices that seed future predictions.
      const DlmpSolution cleared = solve_dlmp_for_setpoints(plan, hour, rt.ctx);
      std::vector<double> player_prices;
      for (const auto& prof : rt.ctx.profiles)
        player_prices.push_back(cleared.price_at(rt.net, prof.bus).total);
      const HourlyOutcome engine_out =
          social_cost_with_prices(plan, hour, rt.ctx, player_prices);
      report.history.record(day, hour, detail::bus_price_vector(rt.net, cleared));

      const auto emit_rows = [&](const std::string& label, const HourlyOutcome& out) {
        for (size_t p = 0; p < rt.ctx.profiles.size(); ++p)
          report.rows.push_back({day, hour, label, rt.ctx.profiles[p].name,
                                 out.setpoints_f[p], out.energy_kwh[p], out.prices[p],
                                 out.productivity[p], out.per_player_cost[p]});
        day_totals[label] += out.social_cost;
      };
      emit_rows(report.engine_label, engine_out);

      for (double baseline : cfg.fixed_baselines) {
        const std::vector<double> uniform(rt.ctx.profiles.size(), baseline);
        const HourlyOutcome out = social_cost(uniform, hour, rt.ctx);
        char label[32];
        std::snprintf(label, sizeof label, "fixed_%g", baseline);
        emit_rows(label, out);
      }
    }
    report.totals[day] = day_totals;
    for (const auto& [label, total] : day_totals)
      if (label != report.engine_label)
        report.savings[day][label] = total - day_totals[report.engine_label];
  }
  return report;
}

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

// Writes hourly.csv, summary.json, metadata.json and, for the game engines,
// game_trace.csv into dir.
inline void emit_report(const DailyReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir + ": " + ec.message());

  const auto open_out = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (fs::path(dir) / name).string());
    return out;
  };

  {
    auto out = open_out("hourly.csv");
    out << "day,hour,label,player,setpoint_f,energy_kwh,price_usd_per_mwh,"
           "productivity,cost_usd\n";
    for (const auto& r : report.rows)
      out << r.day << ',' << r.hour << ',' << r.label << ',' << r.player << ','
          << detail::csv_num(r.setpoint_f) << ',' << detail::csv_num(r.energy_kwh) << ','
          << detail::csv_num(r.price) << ',' << detail::csv_num(r.productivity) << ','
          << detail::csv_num(r.cost) << '\n';
  }

  const auto now = std::chrono::system_clock::now().time_since_epoch();
  const long timestamp =
      std::chrono::duration_cast<std::chrono::seconds>(now).count();

  {
    nlohmann::json summary;
    summary["engine"] = report.engine_label;
    summary["seed"] = report.seed;
    summary["timestamp"] = timestamp;
    summary["all_converged"] = report.all_converged;
    summary["engine_evaluations"] = report.engine_evaluations;
    for (const auto& [day, totals] : report.totals) {
      nlohmann::json jd;
      jd["day"] = day;
      for (const auto& [label, total] : totals) jd["totals"][label] = total;
      if (auto it = report.savings.find(day); it != report.savings.end())
        for (const auto& [label, s] : it->second) jd["savings_vs"][label] = s;
      summary["days"].push_back(jd);
    }
    open_out("summary.json") << summary.dump(2) << '\n';
  }

  if (report.engine_label != "brute") {
    auto out = open_out("game_trace.csv");
    out << "day,hour,round,player,chosen_setpoint_f,payoff_usd,price_gap_usd_per_mwh\n";
    int cur_day = -1, cur_hour = -1;
    const auto close_hour = [&] {
      for (const auto& st : report.statuses)
        if (st.day == cur_day && st.hour == cur_hour)
          out << cur_day << ',' << cur_hour << ",final,,converged="
              << (st.converged ? "true" : "false") << ",iterations=" << st.iterations
              << ",\n";
    };
    for (const auto& t : report.trace) {
      if ((t.day != cur_day || t.hour != cur_hour) && cur_day >= 0) close_hour();
      cur_day = t.day;
      cur_hour = t.hour;
      out << t.day << ',' << t.hour << ',' << t.row.round << ',' << t.row.player_bus
          << ',' << detail::csv_num(t.row.chosen_setpoint_f) << ','
          << detail::csv_num(t.row.payoff_usd) << ','
          << detail::csv_num(t.row.price_gap) << '\n';
    }
    if (cur_day >= 0) close_hour();
  }

  {
    nlohmann::json meta;
    meta["tool"] = "socialgrid";
    meta["version"] = "0.1.0";
    meta["seed"] = report.seed;
    meta["rng"] = "mt19937_64";
    meta["timestamp"] = timestamp;
    meta["config"] = report.config_echo;
    open_out("metadata.json") << meta.dump(2) << '\n';
  }
}

}  // namespace socialgrid
