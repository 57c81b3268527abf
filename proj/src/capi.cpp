#include "auvloc/auvloc.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "auvloc/error.hpp"
#include "auvloc/io.hpp"
#include "auvloc/kalman.hpp"
#include "auvloc/sim.hpp"
#include "auvloc/tdoa_solver.hpp"

struct auvloc_config {
  auvloc::ScenarioConfig cfg;
};

struct auvloc_record {
  auvloc::RunRecord record;
};

struct auvloc_filter {
  auvloc::KalmanModel model;
  auvloc::GaussianState state;
};

namespace {

thread_local std::string last_error;

auvloc_status fail(auvloc_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
auvloc_status guarded(Fn&& fn) noexcept {
  try {
    last_error.clear();
    fn();
    return AUVLOC_OK;
  } catch (const auvloc::Error& e) {
    return fail(static_cast<auvloc_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(AUVLOC_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AUVLOC_E_INTERNAL, e.what());
  } catch (...) {
    return fail(AUVLOC_E_INTERNAL, "unknown error");
  }
}

#define AUVLOC_REQUIRE(cond, what) \
  if (!(cond)) return fail(AUVLOC_E_INVALID_ARGUMENT, what)

template <int R, int C>
Eigen::Matrix<double, R, C> row_major(const double* data) {
  return Eigen::Map<const Eigen::Matrix<double, R, C, Eigen::RowMajor>>(data);
}

}  // namespace

extern "C" {

const char* auvloc_version(void) { return auvloc::kToolVersion.data(); }

const char* auvloc_status_string(auvloc_status status) {
  switch (status) {
    case AUVLOC_OK: return "ok";
    case AUVLOC_E_INVALID_ARGUMENT: return "InvalidArgument";
    case AUVLOC_E_INTERNAL: return "Internal";
    default: break;
  }
  const auto code = static_cast<auvloc::ErrorCode>(static_cast<int>(status));
  const auto name = auvloc::to_string(code);
  return name.data();
}

const char* auvloc_last_error(void) { return last_error.c_str(); }

auvloc_status auvloc_config_load(const char* path, auvloc_config** out) {
  AUVLOC_REQUIRE(path && out, "auvloc_config_load: null argument");
  return guarded([&] { *out = new auvloc_config{auvloc::parse_config(path)}; });
}

auvloc_status auvloc_config_parse(const char* json_text, auvloc_config** out) {
  AUVLOC_REQUIRE(json_text && out, "auvloc_config_parse: null argument");
  return guarded(
      [&] { *out = new auvloc_config{auvloc::parse_config_text(json_text).config}; });
}

void auvloc_config_free(auvloc_config* cfg) { delete cfg; }

auvloc_status auvloc_config_set_seed(auvloc_config* cfg, uint64_t seed) {
  AUVLOC_REQUIRE(cfg, "auvloc_config_set_seed: null config");
  cfg->cfg.seed = seed;
  return AUVLOC_OK;
}

uint64_t auvloc_config_seed(const auvloc_config* cfg) { return cfg ? cfg->cfg.seed : 0; }

double auvloc_config_dt(const auvloc_config* cfg) { return cfg ? cfg->cfg.dt : 0.0; }

size_t auvloc_config_buoy_count(const auvloc_config* cfg) {
  return cfg ? cfg->cfg.buoys.size() : 0;
}

auvloc_status auvloc_config_grid(const auvloc_config* cfg, double* out_xyz, size_t capacity,
                                 size_t* count) {
  AUVLOC_REQUIRE(cfg && count, "auvloc_config_grid: null argument");
  if (!cfg->cfg.grid) return fail(AUVLOC_E_VALIDATION, "grid: config has no grid");
  return guarded([&] {
    const auto points = auvloc::generate_grid(*cfg->cfg.grid);
    *count = points.size();
    if (!out_xyz) return;
    if (capacity < points.size()) {
      throw auvloc::Error(auvloc::ErrorCode::PreconditionViolated,
                          "auvloc_config_grid: buffer holds " + std::to_string(capacity) +
                              " of " + std::to_string(points.size()) + " points");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::memcpy(out_xyz + 3 * i, points[i].data(), 3 * sizeof(double));
    }
  });
}

auvloc_status auvloc_run(const auvloc_config* cfg, auvloc_experiment kind, auvloc_record** out) {
  AUVLOC_REQUIRE(cfg && out, "auvloc_run: null argument");
  return guarded([&] {
    auto rec = std::make_unique<auvloc_record>();
    switch (kind) {
      case AUVLOC_EXPERIMENT_LOCALIZE:
        rec->record = auvloc::run_localization_experiment(cfg->cfg);
        break;
      case AUVLOC_EXPERIMENT_TRACK:
        rec->record = auvloc::run_tracking_experiment(cfg->cfg);
        break;
      case AUVLOC_EXPERIMENT_SEARCH:
        rec->record = auvloc::run_search_experiment(cfg->cfg);
        break;
      default:
        throw auvloc::Error(auvloc::ErrorCode::PreconditionViolated, "unknown experiment kind");
    }
    *out = rec.release();
  });
}

void auvloc_record_free(auvloc_record* record) { delete record; }

double auvloc_record_mae(const auvloc_record* record) {
  return record ? record->record.metrics.mae : 0.0;
}

int auvloc_record_failures(const auvloc_record* record) {
  return record ? record->record.metrics.failures : 0;
}

size_t auvloc_record_step_count(const auvloc_record* record) {
  if (!record) return 0;
  const auto& r = record->record;
  return r.kind == auvloc::ExperimentKind::Localization ? r.points.size() : r.steps.size();
}

auvloc_status auvloc_record_write(const auvloc_record* record, const auvloc_config* cfg,
                                  const char* subcommand, const char* dir, auvloc_format format,
                                  char* paths, size_t capacity) {
  AUVLOC_REQUIRE(record && cfg && subcommand && dir, "auvloc_record_write: null argument");
  return guarded([&] {
    const auto written = auvloc::write_run_record(
        record->record, cfg->cfg, subcommand, dir,
        format == AUVLOC_FORMAT_JSON ? auvloc::OutputFormat::Json : auvloc::OutputFormat::Csv);
    if (!paths || capacity == 0) return;
    std::string joined;
    for (const auto& p : written) {
      if (!joined.empty()) joined += '\n';
      joined += p.string();
    }
    const std::size_t n = std::min(joined.size(), capacity - 1);
    std::memcpy(paths, joined.data(), n);
    paths[n] = '\0';
  });
}

auvloc_status auvloc_solve_chan(const double* buoys_xyz, size_t n_buoys, const double* deltas,
                                double sound_speed_mps, double out_xyz[3]) {
  AUVLOC_REQUIRE(buoys_xyz && deltas && out_xyz, "auvloc_solve_chan: null argument");
  AUVLOC_REQUIRE(n_buoys >= 2, "auvloc_solve_chan: need at least two buoys");
  return guarded([&] {
    auvloc::BuoyArray buoys;
    buoys.reference = Eigen::Map<const auvloc::Vec3>(buoys_xyz);
    for (std::size_t i = 1; i < n_buoys; ++i) {
      buoys.auxiliaries.emplace_back(Eigen::Map<const auvloc::Vec3>(buoys_xyz + 3 * i));
    }
    auvloc::AcousticConfig acoustic;
    acoustic.sound_speed_mps = sound_speed_mps;
    acoustic.validate();
    auvloc::TdoaObservation obs;
    obs.deltas.assign(deltas, deltas + (n_buoys - 1));
    const auto fix = auvloc::solve_chan(obs, buoys, acoustic);
    std::memcpy(out_xyz, fix.position.data(), 3 * sizeof(double));
  });
}

auvloc_status auvloc_filter_new(double dt, const double* q, const double* r, const double* mean0,
                                const double* cov0, auvloc_filter** out) {
  AUVLOC_REQUIRE(q && r && mean0 && cov0 && out, "auvloc_filter_new: null argument");
  return guarded([&] {
    auto f = std::make_unique<auvloc_filter>();
    f->model = auvloc::build_model(dt, row_major<6, 6>(q), row_major<3, 3>(r));
    f->state.mean = Eigen::Map<const auvloc::StateVector>(mean0);
    f->state.cov = auvloc::symmetrized(row_major<6, 6>(cov0));
    *out = f.release();
  });
}

void auvloc_filter_free(auvloc_filter* filter) { delete filter; }

auvloc_status auvloc_filter_predict(auvloc_filter* filter, const double accel[3]) {
  AUVLOC_REQUIRE(filter && accel, "auvloc_filter_predict: null argument");
  return guarded([&] {
    filter->state = auvloc::predict(filter->state, filter->model,
                                    auvloc::ControlInput{Eigen::Map<const auvloc::Vec3>(accel)});
  });
}

auvloc_status auvloc_filter_update(auvloc_filter* filter, const double z[3]) {
  AUVLOC_REQUIRE(filter && z, "auvloc_filter_update: null argument");
  return guarded([&] {
    filter->state =
        auvloc::update(filter->state, filter->model, Eigen::Map<const auvloc::Vec3>(z));
  });
}

auvloc_status auvloc_filter_state(const auvloc_filter* filter, double* mean, double* cov,
                                  double* time) {
  AUVLOC_REQUIRE(filter && mean, "auvloc_filter_state: null argument");
  Eigen::Map<auvloc::StateVector>{mean} = filter->state.mean;
  if (cov) {
    Eigen::Map<Eigen::Matrix<double, 6, 6, Eigen::RowMajor>>{cov} = filter->state.cov;
  }
  if (time) *time = filter->state.time;
  return AUVLOC_OK;
}

}  // extern "C"
