#include "echosim/cli.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "echosim/config.hpp"
#include "echosim/echo_readout.hpp"
#include "echosim/errors.hpp"
#include "echosim/harness.hpp"
#include "echosim/relaxation.hpp"

namespace echosim {

namespace {

// Data goes to --out when given, otherwise to stdout; human-readable notes go wherever
// the data does not.
struct Sinks {
  std::ofstream file;
  std::ostream* data;
  std::ostream* notes;

  Sinks(const std::string& path, std::ostream& out, std::ostream& err) : data(&out), notes(&err) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw ValidationError("cannot open output file '" + path + "'");
      data = &file;
      notes = &out;
    }
  }
};

struct SweepArgs {
  std::string config, out, summary, model;
  std::int64_t seed = -1;
  int workers = 0;
};

struct CurvesArgs {
  std::string n_list, out;
  double budget = 0.0;
  double t = 44e-9;
};

struct TraceArgs {
  double n = 0.54;
  double pairs = 1e4;
  double t = 44e-9, tau = 175e-9, sigma = 470e-9;
  double theta3 = std::numbers::pi / 2.0;
  double linewidth = 0.0;
  std::uint64_t seed = 1;
  std::string model = "all", out, grating_out;
};

struct FitArgs {
  std::string in, synthetic, samples_out;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  int probes = 50;
  double t_max = 6000.0;
};

struct CompensateArgs {
  double area = -1.0;
  double t_acc = 0.0;
  std::string decay = "in_field";
};

struct EraseArgs {
  double span = 80e6;
  int bins = 4096;
  double t = 44e-9, tau = 175e-9;
  double scan_halfwidth = 40e6;
  std::string out;
};

int run_sweep_cmd(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  SweepConfig cfg = load_config(a.config);
  if (a.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(a.seed);
  if (!a.model.empty()) cfg.model = parse_statistics_model(a.model);
  const SweepResult result = run_sweep(cfg, a.workers);

  Sinks sinks(a.out, out, err);
  write_sweep_csv(*sinks.data, result.records);
  std::ofstream summary_file;
  std::ostream* summary = sinks.notes;
  if (!a.summary.empty()) {
    summary_file.open(a.summary);
    if (!summary_file) throw ValidationError("cannot open summary file '" + a.summary + "'");
    summary = &summary_file;
  }
  *summary << "# budget_scale=" << result.budget_scale << " effective_budget=" << result.effective_budget
           << " pair_period_s=" << result.pair_period << " model=" << to_string(cfg.model) << '\n';
  write_summary_csv(*summary, result);
  return kExitOk;
}

int run_curves_cmd(const CurvesArgs& a, std::ostream& out, std::ostream& err) {
  const auto rows = model_curves(parse_number_list(a.n_list), a.budget, a.t);
  Sinks sinks(a.out, out, err);
  write_model_curves_csv(*sinks.data, rows);
  return kExitOk;
}

int run_trace_cmd(const TraceArgs& a, std::ostream& out, std::ostream& err) {
  require(a.pairs >= 1.0 && a.pairs == std::floor(a.pairs), "--pairs must be a positive integer");
  const PulseSequenceSpec spec{a.n, a.t, a.tau, a.sigma, static_cast<std::int64_t>(a.pairs), 1e-9};
  LaserModel laser;
  laser.linewidth_fwhm = a.linewidth;
  RngStream rng = make_stream(a.seed);
  const FrequencyGrid grid = default_grid(a.t, a.tau);
  const auto acc = accumulate(SpectralGrating(grid), spec, laser, parse_statistics_model(a.model), rng);
  const ReadoutSpec readout{a.theta3, a.t};
  const EchoGate gate = echo_gate(a.tau, a.t);
  const EchoTrace trace =
      readout_trace(acc.grating, readout, std::max(2.0 * a.tau, gate.end), 0.5 * nyquist_dt(grid), -1.0, a.tau);

  Sinks sinks(a.out, out, err);
  write_trace_csv(*sinks.data, trace);
  if (!a.grating_out.empty()) {
    std::ofstream g(a.grating_out);
    if (!g) throw ValidationError("cannot open grating output '" + a.grating_out + "'");
    write_grating_csv(g, acc.grating);
  }
  *sinks.notes << "peak_time_s=" << trace.peak_time() << " echo_area=" << echo_area(trace, gate.start, gate.end)
               << " pairs_written=" << acc.pairs_written << " photons_written=" << acc.photons_written << '\n';
  return kExitOk;
}

int run_fit_cmd(const FitArgs& a, std::ostream& out, std::ostream& /*err*/) {
  HoleDecaySamples samples;
  if (!a.in.empty()) {
    std::ifstream in(a.in);
    if (!in) throw ValidationError("cannot open decay samples '" + a.in + "'");
    samples = read_decay_csv(in, a.noise_sigma);
  } else if (!a.synthetic.empty()) {
    require(a.probes >= 2, "--probes must be >= 2");
    RngStream rng = make_stream(a.seed);
    samples = simulate_hole_decay(decay_preset(a.synthetic), Eigen::ArrayXd::LinSpaced(a.probes, 0.0, a.t_max),
                                  a.noise_sigma, rng);
  } else {
    throw ValidationError("fit-decay needs --in PATH or --synthetic PRESET");
  }
  if (!a.samples_out.empty()) {
    std::ofstream s(a.samples_out);
    if (!s) throw ValidationError("cannot open samples output '" + a.samples_out + "'");
    write_decay_csv(s, samples);
  }
  out << format_fit(fit_biexp(samples)) << '\n';
  return kExitOk;
}

int run_compensate_cmd(const CompensateArgs& a, std::ostream& out) {
  const auto decay = parse_decay(a.decay);
  require(decay.has_value(), "--decay must name a decay model");
  const double s = survival_mean(*decay, a.t_acc);
  out.precision(10);
  out << "survival_mean=" << s << " compensated=" << compensate_signal(a.area, *decay, a.t_acc) << '\n';
  return kExitOk;
}

int run_erase_cmd(const EraseArgs& a, std::ostream& out, std::ostream& err) {
  const FrequencyGrid grid = make_grid(a.span, a.bins);
  const PulseSequenceSpec spec{1.0, a.t, a.tau, 2.0 * (a.tau + a.t), 1, 1e-9};
  SpectralGrating g(grid);
  write_pair_into(g, spec, 1000, 0.0, 0.0);
  const double before = std::abs(grating_fourier_component(g, a.tau));
  const SpectralGrating erased = erase(g, a.scan_halfwidth);
  const double after = std::abs(grating_fourier_component(erased, a.tau));

  Sinks sinks(a.out, out, err);
  if (!a.out.empty()) write_grating_csv(*sinks.data, erased);
  out << "fourier_before=" << before << " fourier_after=" << after
      << " fully_erased=" << (erased.is_zero() ? "yes" : "no") << '\n';
  return kExitOk;
}

} // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Accumulated photon echo simulator", "echosim"};
  app.require_subcommand(1);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Constant-energy Monte Carlo sweep");
  sweep_cmd->add_option("--config", sweep.config, "Sweep config (key = value)")->required();
  sweep_cmd->add_option("--seed", sweep.seed, "Override master_seed");
  sweep_cmd->add_option("--out", sweep.out, "Per-run CSV output");
  sweep_cmd->add_option("--summary", sweep.summary, "Normalised summary CSV output");
  sweep_cmd->add_option("--model", sweep.model, "Override statistics model (all|two)");
  sweep_cmd->add_option("--workers", sweep.workers, "Worker threads (default: ECHOSIM_WORKERS or all cores)");

  CurvesArgs curves;
  auto* curves_cmd = app.add_subcommand("curves", "Closed-form model curves at fixed photon budget");
  curves_cmd->add_option("--n", curves.n_list, "Comma-separated photons per pair")->required();
  curves_cmd->add_option("--budget", curves.budget, "Photon budget N*M")->required();
  curves_cmd->add_option("--t", curves.t, "Pulse duration (s)");
  curves_cmd->add_option("--out", curves.out, "CSV output");

  TraceArgs trace;
  auto* trace_cmd = app.add_subcommand("trace", "Accumulate, read out and dump the echo trace");
  trace_cmd->add_option("--n", trace.n, "Mean photons per pair");
  trace_cmd->add_option("--pairs", trace.pairs, "Number of pairs M");
  trace_cmd->add_option("--t", trace.t, "Pulse duration (s)");
  trace_cmd->add_option("--tau", trace.tau, "Intra-pair delay (s)");
  trace_cmd->add_option("--sigma", trace.sigma, "Pair period (s)");
  trace_cmd->add_option("--theta3", trace.theta3, "Read-out pulse area (rad)");
  trace_cmd->add_option("--linewidth", trace.linewidth, "Laser FWHM linewidth (Hz), 0 = ideal");
  trace_cmd->add_option("--seed", trace.seed, "RNG seed");
  trace_cmd->add_option("--model", trace.model, "Statistics model (all|two)");
  trace_cmd->add_option("--out", trace.out, "Trace CSV output");
  trace_cmd->add_option("--grating-out", trace.grating_out, "Grating CSV output");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-decay", "Fit a bi-exponential to hole-decay samples");
  fit_cmd->add_option("--in", fit.in, "CSV with time_s,hole_area");
  fit_cmd->add_option("--synthetic", fit.synthetic, "Generate samples from a preset (zero_field|in_field)");
  fit_cmd->add_option("--noise-sigma", fit.noise_sigma, "Sample noise sigma");
  fit_cmd->add_option("--seed", fit.seed, "RNG seed for --synthetic");
  fit_cmd->add_option("--probes", fit.probes, "Probe count for --synthetic");
  fit_cmd->add_option("--t-max", fit.t_max, "Last probe time (s) for --synthetic");
  fit_cmd->add_option("--samples-out", fit.samples_out, "Write the samples used to CSV");

  CompensateArgs comp;
  auto* comp_cmd = app.add_subcommand("compensate", "Relaxation-compensate an echo area");
  comp_cmd->add_option("--area", comp.area, "Raw echo area")->required();
  comp_cmd->add_option("--t-acc", comp.t_acc, "Accumulation duration (s)")->required();
  comp_cmd->add_option("--decay", comp.decay, "Preset or a1,t1_s,a2,t2_s");

  ConsistencyAnchors anchors;
  auto* check_cmd = app.add_subcommand("check", "Check pair count and period against reported timing");
  check_cmd->add_option("--pairs", anchors.pairs, "Accumulated pairs");
  check_cmd->add_option("--sigma", anchors.sigma, "Pair period (s)");
  check_cmd->add_option("--tau", anchors.tau, "Intra-pair delay (s)");

  EraseArgs erase_args;
  auto* erase_cmd = app.add_subcommand("erase-demo", "Write a grating and erase it by a frequency scan");
  erase_cmd->add_option("--span", erase_args.span, "Grid span (Hz)");
  erase_cmd->add_option("--bins", erase_args.bins, "Grid bins");
  erase_cmd->add_option("--t", erase_args.t, "Pulse duration (s)");
  erase_cmd->add_option("--tau", erase_args.tau, "Intra-pair delay (s)");
  erase_cmd->add_option("--scan-halfwidth", erase_args.scan_halfwidth, "Erase scan half-width (Hz)");
  erase_cmd->add_option("--out", erase_args.out, "Erased grating CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*sweep_cmd) return run_sweep_cmd(sweep, out, err);
    if (*curves_cmd) return run_curves_cmd(curves, out, err);
    if (*trace_cmd) return run_trace_cmd(trace, out, err);
    if (*fit_cmd) return run_fit_cmd(fit, out, err);
    if (*comp_cmd) return run_compensate_cmd(comp, out);
    if (*check_cmd) {
      const ConsistencyReport report = consistency_check(anchors);
      write_report(out, report);
      return report.all_pass() ? kExitOk : kExitValidation;
    }
    if (*erase_cmd) return run_erase_cmd(erase_args, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitValidation;
}

} // namespace echosim
