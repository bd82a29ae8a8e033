// Command-line front end: `run` evaluates one configuration, `sweep` varies
// one axis. Exit codes: 0 success, 2 config error, 3 numerical breakdown.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ampvbic/ampvbic.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  bool include_rs = false;
  bool no_offset = false;
  int threads = 1;
  std::optional<int> trials;
  bool bernoulli = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value experiment file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "master RNG seed (overrides the config)");
  cmd->add_option("--out", flags.out_path, "CSV output path");
  cmd->add_flag("--include-rs-in-ser", flags.include_rs, "count the reference column in SER");
  cmd->add_flag("--no-offset-llr", flags.no_offset, "decide activity without the offset LLR");
  cmd->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--trials", flags.trials, "trial count (overrides the config)")->check(CLI::PositiveNumber);
}

ampvbic::ExperimentSpec resolve(const CommonFlags& flags) {
  using namespace ampvbic;
  ExperimentSpec spec = load_experiment(flags.config_path);
  if (flags.seed) spec.scenario.seed = *flags.seed;
  if (flags.trials) spec.trials = *flags.trials;
  if (flags.include_rs) spec.include_rs_in_ser = true;
  if (flags.bernoulli) spec.bernoulli_activity = true;
  if (flags.no_offset) {
    for (auto& d : spec.detectors)
      if (d == DetectorKind::AmpVbic) d = DetectorKind::AmpVbicNoOffset;
  }
  return spec;
}

ampvbic::TrialOptions trial_options(const ampvbic::ExperimentSpec& spec, const CommonFlags& flags) {
  ampvbic::TrialOptions opts;
  opts.include_rs_in_ser = spec.include_rs_in_ser;
  opts.threads = flags.threads;
  return opts;
}

void print_summary(std::ostream& os, const std::vector<ampvbic::AggregateRow>& rows) {
  os << std::left << std::setw(20) << "detector" << std::right << std::setw(8) << "trials" << std::setw(14)
     << "aer" << std::setw(14) << "ser" << std::setw(14) << "ce_mse" << std::setw(14) << "runtime_ms" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(20) << ampvbic::to_string(r.detector) << std::right << std::setw(8) << r.trials
       << std::setprecision(5) << std::setw(14) << r.aer << std::setw(14) << r.ser << std::setw(14) << r.ce_mse
       << std::setw(14) << r.runtime_ms << '\n';
  }
}

template <class Writer>
void emit_csv(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ampvbic::ConfigError("cannot open output file: " + path);
  write(out);
}

int cmd_run(const CommonFlags& flags) {
  using namespace ampvbic;
  const ExperimentSpec spec = resolve(flags);
  const auto records = run_trials(spec.scenario, spec.trials, spec.detectors, trial_options(spec, flags));
  print_summary(std::cout, aggregate(records));
  if (!flags.out_path.empty())
    emit_csv(flags.out_path, [&](std::ostream& os) { write_records_csv(os, records); });
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::optional<std::string>& axis_override,
              const std::vector<double>& values_override) {
  using namespace ampvbic;
  ExperimentSpec spec = resolve(flags);
  if (axis_override) {
    const auto axis = parse_axis(*axis_override);
    if (!axis) throw InvalidAxis("unknown sweep axis: " + *axis_override);
    spec.axis = axis;
  }
  if (!values_override.empty()) spec.values = values_override;
  if (!spec.axis) throw InvalidAxis("sweep needs an axis (config key 'axis' or --axis)");

  SweepOptions opts;
  opts.trials = trial_options(spec, flags);
  opts.fixed_active_on_pa_axis = !spec.bernoulli_activity;
  const auto rows = sweep(spec.scenario, *spec.axis, spec.values, spec.trials, spec.detectors, opts);
  emit_csv(flags.out_path, [&](std::ostream& os) { write_aggregate_csv(os, rows); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMP-VBIC joint activity and data detection simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run one configuration and print a metrics summary");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::optional<std::string> axis;
  std::vector<double> values;
  auto* sw = app.add_subcommand("sweep", "sweep one axis and write aggregated CSV rows");
  add_common(sw, sweep_flags);
  sw->add_option("--axis", axis, "snr_db, N, p_a or n_it (overrides the config)");
  sw->add_option("--values", values, "axis values (overrides the config)")->delimiter(',');
  sw->add_flag("--bernoulli-activity", sweep_flags.bernoulli, "Bernoulli activity draws on the p_a axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*sw) return cmd_sweep(sweep_flags, axis, values);
  } catch (const ampvbic::NumericalBreakdown& e) {
    std::cerr << "numerical breakdown: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ampvbic::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ampvbic::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
