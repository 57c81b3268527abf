#include "auvloc/io.hpp"

#include <charconv>
#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <system_error>

#include "auvloc/error.hpp"
#include "log.hpp"

namespace auvloc {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ValidationError, field + ": " + what);
}

// Reads config members, tracking which ones fell back to defaults.
class Reader {
 public:
  Reader(const json& doc, std::string prefix, std::vector<std::string>& defaults)
      : doc_(doc), prefix_(std::move(prefix)), defaults_(defaults) {
    if (!doc_.is_object()) invalid(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }
  bool has(const std::string& key) const { return doc_.contains(key) && !doc_[key].is_null(); }
  const json& at(const std::string& key) const {
    if (!has(key)) invalid(path(key), "required field missing");
    return doc_[key];
  }
  Reader child(const std::string& key) const { return Reader(at(key), path(key), defaults_); }

  double number(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number()) invalid(path(key), "must be a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) const {
    if (!has(key)) {
      defaults_.push_back(path(key));
      return fallback;
    }
    return number(key);
  }
  long long integer(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_number_integer()) invalid(path(key), "must be an integer");
    return v.get<long long>();
  }
  long long integer_or(const std::string& key, long long fallback) const {
    if (!has(key)) {
      defaults_.push_back(path(key));
      return fallback;
    }
    return integer(key);
  }
  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) {
      defaults_.push_back(path(key));
      return fallback;
    }
    const auto& v = doc_[key];
    if (!v.is_boolean()) invalid(path(key), "must be true or false");
    return v.get<bool>();
  }
  std::string string_or(const std::string& key, const std::string& fallback) const {
    if (!has(key)) {
      defaults_.push_back(path(key));
      return fallback;
    }
    const auto& v = doc_[key];
    if (!v.is_string()) invalid(path(key), "must be a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::optional<std::size_t> size = {}) const {
    return to_numbers(at(key), path(key), size);
  }
  Vec3 vec3(const std::string& key) const {
    const auto v = numbers(key, 3);
    return {v[0], v[1], v[2]};
  }
  std::vector<std::string> unknown_keys(const std::set<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : doc_.items()) {
      if (!known.count(k)) out.push_back(path(k));
    }
    return out;
  }

  static std::vector<double> to_numbers(const json& v, const std::string& where,
                                        std::optional<std::size_t> size) {
    if (!v.is_array()) invalid(where, "must be an array of numbers");
    if (size && v.size() != *size) {
      invalid(where, "must have " + std::to_string(*size) + " entries");
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) invalid(where, "must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json& doc_;
  std::string prefix_;
  std::vector<std::string>& defaults_;
};

template <int N>
Eigen::Matrix<double, N, N> read_covariance(const Reader& r, const std::string& key) {
  const Reader spec = r.child(key);
  Eigen::Matrix<double, N, N> m = Eigen::Matrix<double, N, N>::Zero();
  if (spec.has("diagonal")) {
    const auto d = spec.numbers("diagonal", N);
    for (int i = 0; i < N; ++i) m(i, i) = d[static_cast<std::size_t>(i)];
  } else if (spec.has("matrix")) {
    const auto& rows = spec.at("matrix");
    if (!rows.is_array() || rows.size() != N) {
      invalid(spec.path("matrix"), "must have " + std::to_string(N) + " rows");
    }
    for (int i = 0; i < N; ++i) {
      const auto row = Reader::to_numbers(rows[static_cast<std::size_t>(i)],
                                          spec.path("matrix"), N);
      for (int j = 0; j < N; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
  } else {
    invalid(r.path(key), "needs \"diagonal\" or \"matrix\"");
  }
  return m;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v) { return v.is_null() ? kNaN : v.get<double>(); }

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

// ---- trajectory ----

const char* const kLocalizationColumns[] = {
    "index",  "true_x_m",       "true_y_m", "true_z_m",       "tdoa_x_m", "tdoa_y_m",
    "tdoa_z_m", "r0_m", "residual_rms_m", "mae_m",    "error_norm_m", "method"};

const char* const kStepColumns[] = {
    "time_s",    "true_x_m",    "true_y_m",    "true_z_m",    "true_vx_mps", "true_vy_mps",
    "true_vz_mps", "tdoa_x_m",  "tdoa_y_m",    "tdoa_z_m",    "filt_x_m",    "filt_y_m",
    "filt_z_m",  "filt_vx_mps", "filt_vy_mps", "filt_vz_mps", "trace_p",     "updated"};

const char* const kRegionColumns[] = {
    "region_horizon_s",      "region_center_x_m",     "region_center_y_m",
    "region_center_z_m",     "region_radius_m",       "region_semi_axis_1_m",
    "region_semi_axis_2_m",  "region_semi_axis_3_m"};

// One row of the trajectory table as (column, value) pairs; NaN = missing.
struct Row {
  std::vector<std::pair<std::string, double>> numbers;
  std::string method;  // localization only
};

std::vector<Row> trajectory_rows(const RunRecord& record) {
  std::vector<Row> rows;
  if (record.kind == ExperimentKind::Localization) {
    for (std::size_t i = 0; i < record.points.size(); ++i) {
      const auto& p = record.points[i];
      const bool ok = p.fix.has_value();
      const Vec3 est = ok ? p.fix->position : Vec3::Constant(kNaN);
      Row row;
      const double values[] = {static_cast<double>(i), p.truth.x(), p.truth.y(), p.truth.z(),
                               est.x(), est.y(), est.z(), ok ? p.fix->r0 : kNaN,
                               ok ? p.fix->residual_rms : kNaN, p.mae, p.error_norm};
      for (std::size_t c = 0; c < std::size(values); ++c) {
        row.numbers.emplace_back(kLocalizationColumns[c], values[c]);
      }
      row.method = ok ? std::string(to_string(p.fix->method)) : std::string();
      rows.push_back(std::move(row));
    }
    return rows;
  }
  const bool with_region = record.kind == ExperimentKind::Search;
  for (const auto& s : record.steps) {
    const Vec3 fix = s.tdoa_fix.value_or(Vec3::Constant(kNaN));
    const double values[] = {s.time,
                             s.truth(0), s.truth(1), s.truth(2), s.truth(3), s.truth(4), s.truth(5),
                             fix.x(), fix.y(), fix.z(),
                             s.filtered.mean(0), s.filtered.mean(1), s.filtered.mean(2),
                             s.filtered.mean(3), s.filtered.mean(4), s.filtered.mean(5),
                             s.filtered.cov.trace(), s.updated ? 1.0 : 0.0};
    Row row;
    for (std::size_t c = 0; c < std::size(values); ++c) {
      row.numbers.emplace_back(kStepColumns[c], values[c]);
    }
    if (with_region) {
      double region[8];
      std::fill(std::begin(region), std::end(region), kNaN);
      if (s.region) {
        const auto& r = *s.region;
        const double v[] = {r.horizon, r.center.x(), r.center.y(), r.center.z(), r.radius,
                            r.axes[0].semi_length, r.axes[1].semi_length, r.axes[2].semi_length};
        std::copy(std::begin(v), std::end(v), region);
      }
      for (std::size_t c = 0; c < 8; ++c) row.numbers.emplace_back(kRegionColumns[c], region[c]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trajectory_csv(const RunRecord& record, const std::filesystem::path& path) {
  auto out = open_output(path);
  const auto rows = trajectory_rows(record);
  const bool localization = record.kind == ExperimentKind::Localization;
  if (localization) {
    for (std::size_t c = 0; c < std::size(kLocalizationColumns); ++c) {
      out << (c ? "," : "") << kLocalizationColumns[c];
    }
  } else {
    for (std::size_t c = 0; c < std::size(kStepColumns); ++c) {
      out << (c ? "," : "") << kStepColumns[c];
    }
    if (record.kind == ExperimentKind::Search) {
      for (const char* col : kRegionColumns) out << "," << col;
    }
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.numbers.size(); ++c) {
      out << (c ? "," : "") << cell(row.numbers[c].second);
    }
    if (localization) out << "," << row.method;
    out << "\n";
  }
  finish(out, path);
}

void write_trajectory_json(const RunRecord& record, const std::filesystem::path& path) {
  json rows = json::array();
  for (const auto& row : trajectory_rows(record)) {
    json obj = json::object();
    for (const auto& [name, value] : row.numbers) obj[name] = number_or_null(value);
    if (record.kind == ExperimentKind::Localization) {
      obj["index"] = static_cast<long long>(obj["index"].get<double>());
      obj["method"] = row.method.empty() ? json(nullptr) : json(row.method);
    } else {
      obj["updated"] = obj["updated"].get<double>() != 0.0;
    }
    rows.push_back(std::move(obj));
  }
  json doc = {{"kind", std::string(to_string(record.kind))}, {"rows", rows}};
  auto out = open_output(path);
  out << doc.dump(2) << "\n";
  finish(out, path);
}

// ---- metrics ----

void write_metrics_csv(const Metrics& m, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "metric,key,value\n";
  auto scalar = [&](const char* name, double v) { out << name << ",," << cell(v) << "\n"; };
  auto keyed = [&](const char* name, double key, double v) {
    out << name << "," << cell(key) << "," << cell(v) << "\n";
  };
  scalar("evaluated", m.evaluated);
  scalar("failures", m.failures);
  scalar("mae_m", m.mae);
  scalar("mae_tdoa_m", m.mae_tdoa);
  scalar("median_mae_m", m.median_mae);
  scalar("detection_time_s", m.detection_time);
  for (const auto& p : m.mse_series) keyed("mse_tdoa_m2", p.time, p.mse_tdoa);
  for (const auto& p : m.mse_series) keyed("mse_filtered_m2", p.time, p.mse_filtered);
  for (const auto& c : m.cdf) keyed("cdf", c.threshold, c.fraction);
  for (const auto& h : m.horizons) keyed("horizon_divergence_median_m", h.horizon, h.divergence_median);
  for (const auto& h : m.horizons) keyed("horizon_divergence_mean_m", h.horizon, h.divergence_mean);
  for (const auto& h : m.horizons) keyed("horizon_trace_p", h.horizon, h.trace);
  for (const auto& h : m.horizons) keyed("horizon_radius_m", h.horizon, h.radius);
  for (const auto& h : m.horizons) keyed("horizon_coverage", h.horizon, h.coverage);
  finish(out, path);
}

json metrics_json(const Metrics& m) {
  json series = json::array();
  for (const auto& p : m.mse_series) {
    series.push_back({{"time_s", p.time},
                      {"mse_tdoa_m2", number_or_null(p.mse_tdoa)},
                      {"mse_filtered_m2", number_or_null(p.mse_filtered)}});
  }
  json cdf = json::array();
  for (const auto& c : m.cdf) cdf.push_back({{"threshold_m", c.threshold}, {"fraction", c.fraction}});
  json horizons = json::array();
  for (const auto& h : m.horizons) {
    horizons.push_back({{"horizon_s", h.horizon},
                        {"divergence_median_m", number_or_null(h.divergence_median)},
                        {"divergence_mean_m", number_or_null(h.divergence_mean)},
                        {"trace_p", number_or_null(h.trace)},
                        {"radius_m", number_or_null(h.radius)},
                        {"coverage", number_or_null(h.coverage)}});
  }
  return {{"evaluated", m.evaluated},
          {"failures", m.failures},
          {"mae_m", number_or_null(m.mae)},
          {"mae_tdoa_m", number_or_null(m.mae_tdoa)},
          {"median_mae_m", number_or_null(m.median_mae)},
          {"detection_time_s", number_or_null(m.detection_time)},
          {"mse_series", series},
          {"cdf", cdf},
          {"horizons", horizons}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_cell(const std::string& s, const std::string& where) {
  if (s.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, where + ": bad number '" + s + "'");
  }
  return v;
}

Metrics read_metrics_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  if (line != "metric,key,value") {
    throw Error(ErrorCode::ParseError, path.string() + ": unexpected header");
  }
  Metrics m;
  std::map<double, SeriesPoint> series;
  std::map<double, HorizonStats> horizons;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                             ": expected three columns");
    }
    const std::string name = line.substr(0, c1);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const double key = parse_cell(line.substr(c1 + 1, c2 - c1 - 1), where);
    const double value = parse_cell(line.substr(c2 + 1), where);
    if (name == "evaluated") m.evaluated = static_cast<int>(value);
    else if (name == "failures") m.failures = static_cast<int>(value);
    else if (name == "mae_m") m.mae = value;
    else if (name == "mae_tdoa_m") m.mae_tdoa = value;
    else if (name == "median_mae_m") m.median_mae = value;
    else if (name == "detection_time_s") m.detection_time = value;
    else if (name == "mse_tdoa_m2") { series[key].time = key; series[key].mse_tdoa = value; }
    else if (name == "mse_filtered_m2") { series[key].time = key; series[key].mse_filtered = value; }
    else if (name == "cdf") m.cdf.push_back({key, value});
    else if (name == "horizon_divergence_median_m") { horizons[key].horizon = key; horizons[key].divergence_median = value; }
    else if (name == "horizon_divergence_mean_m") horizons[key].divergence_mean = value;
    else if (name == "horizon_trace_p") horizons[key].trace = value;
    else if (name == "horizon_radius_m") horizons[key].radius = value;
    else if (name == "horizon_coverage") horizons[key].coverage = value;
    else throw Error(ErrorCode::ParseError, where + ": unknown metric '" + name + "'");
  }
  for (const auto& [k, v] : series) m.mse_series.push_back(v);
  for (auto& [k, v] : horizons) {
    v.horizon = k;
    m.horizons.push_back(v);
  }
  return m;
}

Metrics read_metrics_json(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  Metrics m;
  m.evaluated = doc.at("evaluated").get<int>();
  m.failures = doc.at("failures").get<int>();
  m.mae = number_from(doc.at("mae_m"));
  m.mae_tdoa = number_from(doc.at("mae_tdoa_m"));
  m.median_mae = number_from(doc.at("median_mae_m"));
  m.detection_time = number_from(doc.at("detection_time_s"));
  for (const auto& p : doc.at("mse_series")) {
    m.mse_series.push_back({p.at("time_s").get<double>(), number_from(p.at("mse_tdoa_m2")),
                            number_from(p.at("mse_filtered_m2"))});
  }
  for (const auto& c : doc.at("cdf")) {
    m.cdf.push_back({c.at("threshold_m").get<double>(), c.at("fraction").get<double>()});
  }
  for (const auto& h : doc.at("horizons")) {
    m.horizons.push_back({h.at("horizon_s").get<double>(),
                          number_from(h.at("divergence_median_m")),
                          number_from(h.at("divergence_mean_m")), number_from(h.at("trace_p")),
                          number_from(h.at("radius_m")), number_from(h.at("coverage"))});
  }
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "cannot format number");
  return std::string(buf, ptr);
}

ParsedConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  if (doc.is_object() && doc.contains("tool") && doc.contains("config")) {
    doc = doc["config"];  // manifest.json
  }

  ParsedConfig parsed;
  auto& cfg = parsed.config;
  auto& defaults = parsed.defaults_applied;
  const Reader root(doc, "", defaults);

  try {
    cfg.name = root.string_or("name", "");
    const auto seed = root.integer_or("seed", 0);
    if (seed < 0) invalid("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.monte_carlo_runs = static_cast<int>(root.integer_or("monte_carlo_runs", 1));

    const auto& buoys = root.at("buoys_m");
    if (!buoys.is_array() || buoys.empty()) invalid("buoys_m", "must be a non-empty array");
    for (std::size_t i = 0; i < buoys.size(); ++i) {
      const auto v = Reader::to_numbers(buoys[i], "buoys_m[" + std::to_string(i) + "]", 3);
      const Vec3 p(v[0], v[1], v[2]);
      if (i == 0) {
        cfg.buoys.reference = p;
      } else {
        cfg.buoys.auxiliaries.push_back(p);
      }
    }

    cfg.acoustic.sound_speed_mps = root.number_or("sound_speed_mps", kDefaultSoundSpeed);
    cfg.acoustic.timing_noise_std_s = root.number_or("timing_noise_std_s", 0.0);
    cfg.dt = root.number("dt_seconds");
    cfg.process_noise = read_covariance<6>(root, "process_noise");

    if (root.has("initial_covariance")) {
      const Reader init = root.child("initial_covariance");
      cfg.initial_cov.position_var = init.number_or("position_var_m2", 100.0);
      cfg.initial_cov.velocity_var = init.number_or("velocity_var_m2ps2", 25.0);
    } else {
      defaults.push_back("initial_covariance");
    }

    if (root.has("solver")) {
      const Reader solver = root.child("solver");
      const auto mode = solver.string_or("mode", "chan");
      if (mode == "chan") {
        cfg.solver.mode = SolverMode::Chan;
      } else if (mode == "linearized_then_chan") {
        cfg.solver.mode = SolverMode::LinearizedThenChan;
      } else {
        invalid("solver.mode", "expected \"chan\" or \"linearized_then_chan\"");
      }
      cfg.solver.use_all_buoys = solver.boolean_or("use_all_buoys", true);
    } else {
      defaults.push_back("solver");
    }

    if (root.has("grid")) {
      const Reader grid = root.child("grid");
      GridSpec g;
      g.origin = grid.vec3("origin_m");
      g.spacing = grid.vec3("spacing_m");
      const auto counts = grid.numbers("counts", 3);
      for (std::size_t i = 0; i < 3; ++i) {
        if (counts[i] != std::floor(counts[i])) invalid("grid.counts", "must be integers");
        g.counts[i] = static_cast<int>(counts[i]);
      }
      g.z_descending = grid.boolean_or("z_descending", true);
      cfg.grid = g;
    }

    if (root.has("trajectory")) {
      const Reader traj = root.child("trajectory");
      TrajectorySpec t;
      t.initial_position = traj.vec3("initial_position_m");
      t.initial_velocity = traj.vec3("initial_velocity_mps");
      std::vector<Vec3> accels;
      if (traj.has("accelerations_mps2")) {
        const auto& list = traj.at("accelerations_mps2");
        if (!list.is_array()) invalid(traj.path("accelerations_mps2"), "must be an array");
        for (const auto& a : list) {
          const auto v = Reader::to_numbers(a, traj.path("accelerations_mps2"), 3);
          accels.emplace_back(v[0], v[1], v[2]);
        }
      } else if (traj.has("segments")) {
        const auto& list = traj.at("segments");
        if (!list.is_array()) invalid(traj.path("segments"), "must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
          const Reader seg(list[i], traj.path("segments[" + std::to_string(i) + "]"), defaults);
          const auto n = seg.integer("steps");
          if (n < 0) invalid(seg.path("steps"), "must be >= 0");
          const Vec3 a = seg.vec3("accel_mps2");
          accels.insert(accels.end(), static_cast<std::size_t>(n), a);
        }
      } else {
        invalid("trajectory.accelerations_mps2", "required field missing (or use \"segments\")");
      }
      for (std::size_t k = 0; k < accels.size(); ++k) {
        t.plan.steps.push_back({static_cast<double>(k) * cfg.dt, accels[k]});
      }
      if (traj.has("dropped_steps")) {
        for (double d : traj.numbers("dropped_steps")) t.dropped_steps.push_back(static_cast<int>(d));
      }
      t.truth_process_noise = traj.boolean_or("truth_process_noise", true);
      cfg.trajectory = t;
    }

    if (root.has("search")) {
      const Reader search = root.child("search");
      SearchSpec s;
      s.disconnect_time = search.number("disconnect_time_s");
      const auto scenario = search.string_or("scenario", "continued_navigation");
      if (scenario == "continued_navigation") {
        s.scenario = Scenario::ContinuedNavigation;
      } else if (scenario == "propulsion_failure") {
        s.scenario = Scenario::PropulsionFailure;
      } else {
        invalid("search.scenario", "expected \"continued_navigation\" or \"propulsion_failure\"");
      }
      if (search.has("horizon_steps")) {
        s.horizon_steps = static_cast<int>(search.integer("horizon_steps"));
      }
      s.confidence = search.number_or("confidence", 0.95);
      s.radius_scale = search.number_or("radius_scale", 1.0);
      s.tolerance_factor = search.number_or("tolerance_factor", kDefaultDisconnectTolerance);
      cfg.search = s;
    }

    if (root.has("cdf_thresholds_m")) {
      cfg.cdf_thresholds = root.numbers("cdf_thresholds_m");
    } else {
      defaults.push_back("cdf_thresholds_m");
      for (int i = 1; i <= 40; ++i) cfg.cdf_thresholds.push_back(0.25 * i);
    }

    // Last: calibration runs the solver, so everything else must be valid.
    const Reader noise = root.child("measurement_noise");
    if (noise.has("calibrate_samples")) {
      cfg.measurement_noise = Mat3::Identity();
      cfg.validate();
      const auto samples = noise.integer("calibrate_samples");
      if (samples < 1) invalid("measurement_noise.calibrate_samples", "must be >= 1");
      cfg.measurement_noise = calibrate_measurement_noise(cfg, static_cast<int>(samples));
    } else {
      cfg.measurement_noise = read_covariance<3>(root, "measurement_noise");
    }

    for (const auto& key : root.unknown_keys(
             {"name", "seed", "monte_carlo_runs", "buoys_m", "sound_speed_mps",
              "timing_noise_std_s", "dt_seconds", "process_noise", "measurement_noise",
              "initial_covariance", "solver", "grid", "trajectory", "search",
              "cdf_thresholds_m"})) {
      log::get()->warn("config: ignoring unknown field '{}'", key);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("config: ") + e.what());
  }

  cfg.validate();
  return parsed;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  auto parsed = parse_config_text(read_file(path));
  for (const auto& field : parsed.defaults_applied) {
    log::get()->info("{}: '{}' not set, using default", path.string(), field);
  }
  return std::move(parsed.config);
}

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
  json buoys = json::array();
  for (std::size_t i = 0; i < cfg.buoys.size(); ++i) buoys.push_back(vec_json(cfg.buoys.at(i)));
  json doc = {
      {"name", cfg.name},
      {"seed", cfg.seed},
      {"monte_carlo_runs", cfg.monte_carlo_runs},
      {"buoys_m", buoys},
      {"sound_speed_mps", cfg.acoustic.sound_speed_mps},
      {"timing_noise_std_s", cfg.acoustic.timing_noise_std_s},
      {"dt_seconds", cfg.dt},
      {"process_noise", {{"matrix", matrix_json(cfg.process_noise)}}},
      {"measurement_noise", {{"matrix", matrix_json(cfg.measurement_noise)}}},
      {"initial_covariance",
       {{"position_var_m2", cfg.initial_cov.position_var},
        {"velocity_var_m2ps2", cfg.initial_cov.velocity_var}}},
      {"solver",
       {{"mode", cfg.solver.mode == SolverMode::Chan ? "chan" : "linearized_then_chan"},
        {"use_all_buoys", cfg.solver.use_all_buoys}}},
      {"cdf_thresholds_m", cfg.cdf_thresholds},
  };
  if (cfg.grid) {
    const auto& g = *cfg.grid;
    doc["grid"] = {{"origin_m", vec_json(g.origin)},
                   {"spacing_m", vec_json(g.spacing)},
                   {"counts", g.counts},
                   {"z_descending", g.z_descending}};
  }
  if (cfg.trajectory) {
    const auto& t = *cfg.trajectory;
    json accels = json::array();
    for (const auto& s : t.plan.steps) accels.push_back(vec_json(s.accel));
    doc["trajectory"] = {{"initial_position_m", vec_json(t.initial_position)},
                         {"initial_velocity_mps", vec_json(t.initial_velocity)},
                         {"accelerations_mps2", accels},
                         {"dropped_steps", t.dropped_steps},
                         {"truth_process_noise", t.truth_process_noise}};
  }
  if (cfg.search) {
    const auto& s = *cfg.search;
    doc["search"] = {{"disconnect_time_s", s.disconnect_time},
                     {"scenario", std::string(to_string(s.scenario))},
                     {"confidence", s.confidence},
                     {"radius_scale", s.radius_scale},
                     {"tolerance_factor", s.tolerance_factor}};
    if (s.horizon_steps) doc["search"]["horizon_steps"] = *s.horizon_steps;
  }
  return doc;
}

std::vector<std::filesystem::path> write_run_record(const RunRecord& record,
                                                    const ScenarioConfig& cfg,
                                                    std::string_view subcommand,
                                                    const std::filesystem::path& dir,
                                                    OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  const std::string ext = format == OutputFormat::Csv ? ".csv" : ".json";
  const auto trajectory = dir / ("trajectory" + ext);
  const auto metrics = dir / ("metrics" + ext);
  const auto manifest = dir / "manifest.json";

  if (format == OutputFormat::Csv) {
    write_trajectory_csv(record, trajectory);
    write_metrics_csv(record.metrics, metrics);
  } else {
    write_trajectory_json(record, trajectory);
    auto out = open_output(metrics);
    out << metrics_json(record.metrics).dump(2) << "\n";
    finish(out, metrics);
  }

  const json doc = {{"tool", std::string(kToolName)},
                    {"version", std::string(kToolVersion)},
                    {"subcommand", std::string(subcommand)},
                    {"format", format == OutputFormat::Csv ? "csv" : "json"},
                    {"seed", cfg.seed},
                    {"config", config_to_json(cfg)}};
  auto out = open_output(manifest);
  out << doc.dump(2) << "\n";
  finish(out, manifest);
  return {trajectory, metrics, manifest};
}

Metrics read_metrics(const std::filesystem::path& path) {
  if (path.extension() == ".json") return read_metrics_json(path);
  return read_metrics_csv(path);
}

}  // namespace auvloc
