// auvloc command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "auvloc/auvloc.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitStatusBase = 10;

const char* const kExitCodeHelp = R"(Exit codes:
  0   success
  2   usage error
  11  RankDeficient        (degenerate buoy geometry)
  12  NotSymmetric
  13  NoRealRoot
  14  NoPositiveRoot
  15  SingularGradient
  16  PreconditionViolated
  17  InvalidNoise
  18  InvalidDt
  19  SingularInnovation
  20  PlanExhausted        (search horizon beyond the navigation plan)
  21  QNotPSD
  22  EmptyInput
  23  ParseError           (malformed config)
  24  ValidationError      (config field out of range or missing)
  25  IoError
  26  InvalidArgument
  27  Internal
Set AUVLOC_LOG=trace|debug|info|warn|error|off to control log verbosity.)";

struct ConfigDeleter {
  void operator()(auvloc_config* c) const { auvloc_config_free(c); }
};
struct RecordDeleter {
  void operator()(auvloc_record* r) const { auvloc_record_free(r); }
};
using ConfigPtr = std::unique_ptr<auvloc_config, ConfigDeleter>;
using RecordPtr = std::unique_ptr<auvloc_record, RecordDeleter>;

int report(auvloc_status status) {
  std::cerr << "auvloc: " << auvloc_status_string(status) << ": " << auvloc_last_error() << "\n";
  return kExitStatusBase + static_cast<int>(status);
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Options& opts, bool needs_out) {
  cmd->add_option("--config", opts.config, "Scenario JSON (or a manifest.json to rerun)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", opts.out, "Output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

int load(const Options& opts, ConfigPtr& cfg) {
  auvloc_config* raw = nullptr;
  if (auto st = auvloc_config_load(opts.config.c_str(), &raw); st != AUVLOC_OK) return report(st);
  cfg.reset(raw);
  if (opts.seed) auvloc_config_set_seed(cfg.get(), *opts.seed);
  return 0;
}

int run_experiment(const std::string& name, auvloc_experiment kind, const Options& opts) {
  ConfigPtr cfg;
  if (int rc = load(opts, cfg)) return rc;
  auvloc_record* raw = nullptr;
  if (auto st = auvloc_run(cfg.get(), kind, &raw); st != AUVLOC_OK) return report(st);
  RecordPtr record(raw);

  std::vector<char> paths(4096);
  const auto format = opts.format == "json" ? AUVLOC_FORMAT_JSON : AUVLOC_FORMAT_CSV;
  if (auto st = auvloc_record_write(record.get(), cfg.get(), name.c_str(), opts.out.c_str(),
                                    format, paths.data(), paths.size());
      st != AUVLOC_OK) {
    return report(st);
  }
  std::cout << paths.data() << "\n";
  std::cout << "mae_m=" << auvloc_record_mae(record.get())
            << " failures=" << auvloc_record_failures(record.get()) << "\n";
  return 0;
}

int print_grid(const Options& opts) {
  ConfigPtr cfg;
  if (int rc = load(opts, cfg)) return rc;
  std::size_t count = 0;
  if (auto st = auvloc_config_grid(cfg.get(), nullptr, 0, &count); st != AUVLOC_OK) {
    return report(st);
  }
  std::vector<double> xyz(3 * count);
  if (auto st = auvloc_config_grid(cfg.get(), xyz.data(), count, &count); st != AUVLOC_OK) {
    return report(st);
  }
  std::cout << "x_m,y_m,z_m\n";
  char line[128];
  for (std::size_t i = 0; i < count; ++i) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", xyz[3 * i], xyz[3 * i + 1],
                  xyz[3 * i + 2]);
    std::cout << line;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auvloc: acoustic TDOA localization, Kalman tracking and search-region simulator"};
  app.footer(kExitCodeHelp);
  app.set_version_flag("--version", auvloc_version());
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Options opts;
  auto* localize = app.add_subcommand("localize", "Grid localization experiment");
  auto* track = app.add_subcommand("track", "Trajectory tracking experiment");
  auto* search = app.add_subcommand("search", "Post-disconnection search experiment");
  auto* grid = app.add_subcommand("grid", "Print the configured grid points");
  for (auto* cmd : {localize, track, search}) add_common(cmd, opts, true);
  add_common(grid, opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (*localize) return run_experiment("localize", AUVLOC_EXPERIMENT_LOCALIZE, opts);
  if (*track) return run_experiment("track", AUVLOC_EXPERIMENT_TRACK, opts);
  if (*search) return run_experiment("search", AUVLOC_EXPERIMENT_SEARCH, opts);
  return print_grid(opts);
}
