#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "socialgrid/common.hpp"

namespace socialgrid {

// Cubic in Celsius fed with Fahrenheit setpoints; output is the fraction of
// full work productivity.
struct ProductivityCurve {
  double a1 = 0.1647524;
  double a2 = -0.0058274;
  double a3 = 0.0000623;
  double a0 = -0.4685328;
  double t_lower = 64.0;  // F
  double t_upper = 79.0;  // F

  double value(double t_in_f) const {
    if (t_in_f < t_lower || t_in_f > t_upper)
      throw Error(ErrorCode::OutOfBracket,
                  "setpoint " + std::to_string(t_in_f) + " F outside [" +
                      std::to_string(t_lower) + ", " + std::to_string(t_upper) + "]");
    const double c = fahrenheit_to_celsius(t_in_f);
    return a1 * c + a2 * c * c + a3 * c * c * c + a0;
  }
};

inline double productivity(const ProductivityCurve& curve, double t_in_f) {
  return curve.value(t_in_f);
}

// Hourly whole-building consumption in BTU as an affine function of hour,
// indoor and outdoor temperature. Valid on cooling days within the stated
// box; anything outside is a hard error rather than an extrapolation.
struct RegressionModel {
  double c_t = 2.0443;
  double c_out = 1.8823;
  double c_in = -1.6305;
  double c_0 = 2.1181e6;
  double scale = 1.0;  // per-building size factor

  static constexpr double hour_lo = 10.0, hour_hi = 21.0;
  static constexpr double tin_lo = 64.0, tin_hi = 79.0;
  static constexpr double tout_lo = 50.0, tout_hi = 100.0;

  double evaluate(int hour, double t_in, double t_out) const {
    if (hour < hour_lo || hour > hour_hi)
      throw Error(ErrorCode::DomainViolation, "hour " + std::to_string(hour) +
                                                  " outside regression domain [10, 21]");
    if (t_in < tin_lo || t_in > tin_hi)
      throw Error(ErrorCode::DomainViolation, "indoor temperature outside [64, 79] F");
    if (t_out <= tout_lo || t_out >= tout_hi)
      throw Error(ErrorCode::DomainViolation, "outdoor temperature outside (50, 100) F");
    return scale * (c_t * hour + c_out * t_out + c_in * t_in + c_0);
  }
};

// One sigmoid hidden layer, linear output, for inference on supplied weights.
struct FeedForwardModel {
  Eigen::VectorXd input_offset;  // 3
  Eigen::VectorXd input_scale;   // 3
  Eigen::MatrixXd w1;            // hidden x 3
  Eigen::VectorXd b1;            // hidden
  Eigen::VectorXd w2;            // hidden
  double b2 = 0.0;

  void validate() const {
    const auto h = w1.rows();
    if (w1.cols() != 3 || b1.size() != h || w2.size() != h ||
        input_offset.size() != 3 || input_scale.size() != 3)
      throw Error(ErrorCode::InvalidProfile, "feed-forward weight dimensions disagree");
  }

  double evaluate(int hour, double t_in, double t_out) const {
    Eigen::Vector3d x(static_cast<double>(hour), t_in, t_out);
    const Eigen::Vector3d z =
        (x - Eigen::Vector3d(input_offset)).cwiseProduct(Eigen::Vector3d(input_scale));
    Eigen::VectorXd a = w1 * z + b1;
    for (int i = 0; i < a.size(); ++i) a[i] = 1.0 / (1.0 + std::exp(-a[i]));
    return w2.dot(a) + b2;
  }
};

// Regular grid over (hour, indoor F, outdoor F) with trilinear interpolation;
// queries outside the grid clamp to the boundary with a logged warning.
struct TabulatedModel {
  std::vector<double> hours, tins, touts;  // strictly increasing axes
  std::vector<double> values;              // hours x tins x touts, row-major

  double at(size_t i, size_t j, size_t k) const {
    return values[(i * tins.size() + j) * touts.size() + k];
  }

  double evaluate(int hour, double t_in, double t_out) const {
    const auto locate = [](const std::vector<double>& axis, double v, bool& clamped) {
      if (v <= axis.front()) {
        clamped |= v < axis.front();
        return std::pair<size_t, double>{0, 0.0};
      }
      if (v >= axis.back()) {
        clamped |= v > axis.back();
        return std::pair<size_t, double>{axis.size() - 2, 1.0};
      }
      size_t i = 0;
      while (axis[i + 1] < v) ++i;
      return std::pair<size_t, double>{i, (v - axis[i]) / (axis[i + 1] - axis[i])};
    };
    bool clamped = false;
    const auto [i, fi] = locate(hours, static_cast<double>(hour), clamped);
    const auto [j, fj] = locate(tins, t_in, clamped);
    const auto [k, fk] = locate(touts, t_out, clamped);
    if (clamped) warn("tabulated energy model clamped a query to its grid");
    double acc = 0.0;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk) {
          const double w = (di ? fi : 1.0 - fi) * (dj ? fj : 1.0 - fj) * (dk ? fk : 1.0 - fk);
          if (w != 0.0) acc += w * at(i + di, j + dj, k + dk);
        }
    return acc;
  }
};

using EnergyModel = std::variant<RegressionModel, FeedForwardModel, TabulatedModel>;

inline double energy_btu(const EnergyModel& model, int hour, double t_in, double t_out) {
  const double btu =
      std::visit([&](const auto& m) { return m.evaluate(hour, t_in, t_out); }, model);
  if (!(btu >= 0.0) || !std::isfinite(btu))
    throw Error(ErrorCode::DomainViolation, "energy model produced " + std::to_string(btu) +
                                                " BTU; consumption must be nonnegative");
  return btu;
}

inline double energy_kwh(const EnergyModel& model, int hour, double t_in, double t_out) {
  return btu_to_kwh(energy_btu(model, hour, t_in, t_out));
}

struct BuildingProfile {
  int bus = 0;
  std::string name;
  std::vector<double> occupancy;      // per hour
  std::vector<double> baseline_load;  // per hour, kW of non-HVAC load
  EnergyModel energy_model = RegressionModel{};
  ProductivityCurve curve_params;

  double occupancy_at(int hour) const { return occupancy.at(static_cast<size_t>(hour)); }
  double baseline_at(int hour) const { return baseline_load.at(static_cast<size_t>(hour)); }
};

struct WeatherProfile {
  std::vector<double> t_out_f;  // per hour

  double at(int hour) const {
    if (hour < 0 || static_cast<size_t>(hour) >= t_out_f.size())
      throw Error(ErrorCode::MissingHour, "weather has no hour " + std::to_string(hour));
    return t_out_f[static_cast<size_t>(hour)];
  }
  int hours() const { return static_cast<int>(t_out_f.size()); }
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim spaces
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace detail

// Reads the hourly profile table. Columns: hour, t_out_f, then
// <building>_occupancy and <building>_baseline_kw per building. Hours must
// start at 0 and be contiguous.
inline std::pair<std::vector<BuildingProfile>, WeatherProfile> load_profiles(
    std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw Error(ErrorCode::InvalidProfile, "profile table is empty");
  const auto cols = detail::split_csv_row(header);
  if (cols.size() < 2 || cols[0] != "hour" || cols[1] != "t_out_f")
    throw Error(ErrorCode::InvalidProfile, "profile header must start hour,t_out_f");

  std::vector<std::string> names;
  for (size_t c = 2; c < cols.size(); c += 2) {
    const std::string occ_suffix = "_occupancy";
    if (cols[c].size() <= occ_suffix.size() ||
        cols[c].substr(cols[c].size() - occ_suffix.size()) != occ_suffix)
      throw Error(ErrorCode::InvalidProfile, "expected *_occupancy column, got " + cols[c]);
    const std::string name = cols[c].substr(0, cols[c].size() - occ_suffix.size());
    if (c + 1 >= cols.size() || cols[c + 1] != name + "_baseline_kw")
      throw Error(ErrorCode::InvalidProfile, "missing " + name + "_baseline_kw column");
    names.push_back(name);
  }

  std::vector<BuildingProfile> profiles(names.size());
  for (size_t i = 0; i < names.size(); ++i) profiles[i].name = names[i];
  WeatherProfile weather;

  std::string line;
  int expected_hour = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = detail::split_csv_row(line);
    if (row.size() != cols.size())
      throw Error(ErrorCode::InvalidProfile, "row width mismatch at hour " + row[0]);
    const int hour = std::stoi(row[0]);
    if (hour != expected_hour)
      throw Error(ErrorCode::MissingHour, "expected hour " + std::to_string(expected_hour) +
                                              ", found " + std::to_string(hour));
    ++expected_hour;
    const double tout = std::stod(row[1]);
    if (tout < -40.0 || tout > 130.0)
      throw Error(ErrorCode::InvalidProfile, "outdoor temperature outside sanity band");
    weather.t_out_f.push_back(tout);
    for (size_t b = 0; b < names.size(); ++b) {
      const double occ = std::stod(row[2 + 2 * b]);
      const double base = std::stod(row[3 + 2 * b]);
      if (occ < 0.0)
        throw Error(ErrorCode::NegativeOccupancy,
                    names[b] + " occupancy negative at hour " + std::to_string(hour));
      if (base < 0.0)
        throw Error(ErrorCode::InvalidProfile,
                    names[b] + " baseline negative at hour " + std::to_string(hour));
      profiles[b].occupancy.push_back(occ);
      profiles[b].baseline_load.push_back(base);
    }
  }
  if (weather.t_out_f.empty())
    throw Error(ErrorCode::InvalidProfile, "profile table has no data rows");
  return {std::move(profiles), std::move(weather)};
}

inline std::pair<std::vector<BuildingProfile>, WeatherProfile> load_profiles_from_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open profile file " + path);
  return load_profiles(in);
}

// Weight document: {"dims": [3, H, 1], "w1": [[..3..] x H], "b1": [H],
// "w2": [H], "b2": scalar, optional "input_offset"/"input_scale": [3]}.
inline FeedForwardModel load_feedforward(const nlohmann::json& doc) {
  FeedForwardModel m;
  try {
    const auto dims = doc.at("dims").get<std::vector<int>>();
    if (dims.size() != 3 || dims[0] != 3 || dims[2] != 1)
      throw Error(ErrorCode::InvalidProfile, "feed-forward dims must be [3, H, 1]");
    const int h = dims[1];
    m.w1.resize(h, 3);
    const auto w1 = doc.at("w1");
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < 3; ++j) m.w1(i, j) = w1.at(i).at(j).get<double>();
    const auto b1 = doc.at("b1").get<std::vector<double>>();
    const auto w2 = doc.at("w2").get<std::vector<double>>();
    m.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(), b1.size());
    m.w2 = Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
    m.b2 = doc.at("b2").get<double>();
    const auto off = doc.value("input_offset", std::vector<double>{0.0, 0.0, 0.0});
    const auto sc = doc.value("input_scale", std::vector<double>{1.0, 1.0, 1.0});
    m.input_offset = Eigen::Map<const Eigen::VectorXd>(off.data(), off.size());
    m.input_scale = Eigen::Map<const Eigen::VectorXd>(sc.data(), sc.size());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidProfile, std::string("bad weight document: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace socialgrid
