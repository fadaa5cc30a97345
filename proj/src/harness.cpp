#include "echosim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "echosim/csv_io.hpp"
#include "echosim/errors.hpp"

namespace echosim {

RunSettings make_run_settings(const SweepConfig& cfg) {
  RunSettings s;
  s.grid = default_grid(cfg.t, cfg.tau);
  s.readout = ReadoutSpec{cfg.theta3, cfg.t};
  s.gate = echo_gate(cfg.tau, cfg.t);
  s.window = std::max(2.0 * cfg.tau, s.gate.end);
  s.dt = 0.5 * nyquist_dt(s.grid);
  return s;
}

RunRecord run_point(const SweepConfig& cfg, const RunSettings& settings, double n_photons, std::int64_t pairs,
                    double pair_period, std::size_t point_index, std::uint64_t replicate) {
  const PulseSequenceSpec spec{n_photons, cfg.t, cfg.tau, pair_period, pairs, cfg.write_gain};
  RngStream rng = make_stream(cfg.master_seed, point_index, replicate);

  SurvivalLaw survival;
  if (cfg.decay) survival = grating_survival(*cfg.decay, cfg.decay_exponent);

  const auto acc = accumulate(SpectralGrating(settings.grid, cfg.storage_efficiency), spec, cfg.laser, cfg.model,
                              rng, survival);
  const EchoTrace trace = readout_trace(acc.grating, settings.readout, settings.window, settings.dt, -1.0, cfg.tau);

  RunRecord rec;
  rec.n_photons = n_photons;
  rec.pairs = pairs;
  rec.t_acc = spec.accumulation_time();
  rec.echo_area = echo_area(trace, settings.gate.start, settings.gate.end);
  rec.seed = replicate;
  if (cfg.decay) {
    rec.survival_mean = survival_mean(*cfg.decay, rec.t_acc);
    rec.echo_area_compensated = compensate_signal(rec.echo_area, *cfg.decay, rec.t_acc);
  }
  return rec;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ECHOSIM_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

// Ratio a/b of independent estimates and its first-order standard error.
MeanSe ratio(const MeanSe& a, const MeanSe& b, bool same) {
  MeanSe out;
  out.mean = a.mean / b.mean;
  if (!same) out.se = std::abs(out.mean) * std::hypot(a.se / a.mean, b.se / b.mean);
  return out;
}

} // namespace

SweepResult run_sweep(const SweepConfig& cfg, int workers) {
  cfg.validate();
  for (double n : cfg.n_list) {
    if (cfg.write_gain * n > kLinearRegimeGuard) {
      std::ostringstream msg;
      msg << "linear-regime guard violated at N = " << n << " (w*N = " << cfg.write_gain * n << " > "
          << kLinearRegimeGuard << ")";
      throw ValidationError(msg.str());
    }
  }

  SweepResult result;
  const double n_min = *std::min_element(cfg.n_list.begin(), cfg.n_list.end());
  const double max_needed = std::round(cfg.energy_budget / n_min);
  result.budget_scale = max_needed > static_cast<double>(cfg.max_pairs)
                            ? static_cast<double>(cfg.max_pairs) / max_needed
                            : 1.0;
  result.effective_budget = cfg.energy_budget * result.budget_scale;
  result.pair_period = cfg.sigma / result.budget_scale;

  const RunSettings settings = make_run_settings(cfg);
  std::vector<std::int64_t> pairs(cfg.n_list.size());
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const double m = std::round(result.effective_budget / cfg.n_list[i]);
    if (m < 1.0) {
      std::ostringstream msg;
      msg << "fewer than one pair at N = " << cfg.n_list[i];
      throw ValidationError(msg.str());
    }
    pairs[i] = static_cast<std::int64_t>(m);
  }

  const std::size_t n_seeds = static_cast<std::size_t>(cfg.seeds);
  const std::size_t n_tasks = cfg.n_list.size() * n_seeds;
  result.records.resize(n_tasks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < n_tasks; task = next++) {
      const std::size_t point = task / n_seeds;
      const std::uint64_t replicate = task % n_seeds;
      try {
        result.records[task] = run_point(cfg, settings, cfg.n_list[point], pairs[point], result.pair_period, point,
                                         replicate);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_tasks;
      }
    }
  };
  const int n_workers = std::min<int>(resolve_workers(workers), static_cast<int>(n_tasks));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<MeanSe> raw(cfg.n_list.size()), comp(cfg.n_list.size());
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    std::vector<double> areas, comps;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& rec = result.records[i * n_seeds + s];
      areas.push_back(rec.echo_area);
      if (rec.echo_area_compensated) comps.push_back(*rec.echo_area_compensated);
    }
    raw[i] = mean_se(areas);
    comp[i] = mean_se(comps);
  }

  const std::size_t anchor = static_cast<std::size_t>(
      std::max_element(cfg.n_list.begin(), cfg.n_list.end()) - cfg.n_list.begin());
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    SweepPoint pt;
    pt.n_photons = cfg.n_list[i];
    pt.pairs = pairs[i];
    pt.t_acc = static_cast<double>(pairs[i]) * result.pair_period;
    pt.mean_area = raw[i].mean;
    pt.se_area = raw[i].se;
    const MeanSe norm = ratio(raw[i], raw[anchor], i == anchor);
    pt.normalized = norm.mean;
    pt.normalized_se = norm.se;
    if (cfg.decay) {
      const MeanSe norm_comp = ratio(comp[i], comp[anchor], i == anchor);
      pt.mean_compensated = comp[i].mean;
      pt.normalized_compensated = norm_comp.mean;
      pt.normalized_compensated_se = norm_comp.se;
    }
    result.summary.push_back(pt);
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "n_photons,m_pairs,t_acc_s,echo_area,echo_area_comp,survival_mean,seed\n";
  for (const auto& r : records) {
    os << shortest(r.n_photons) << ',' << r.pairs << ',' << shortest(r.t_acc) << ',' << shortest(r.echo_area) << ',';
    if (r.echo_area_compensated) os << shortest(*r.echo_area_compensated);
    os << ',' << shortest(r.survival_mean) << ',' << r.seed << '\n';
  }
}

void write_summary_csv(std::ostream& os, const SweepResult& result) {
  const auto old_precision = os.precision(10);
  const bool comp = !result.summary.empty() && result.summary.front().mean_compensated.has_value();
  os << "n_photons,m_pairs,t_acc_s,mean_area,se_area,normalized,normalized_se";
  if (comp) os << ",mean_comp,normalized_comp,normalized_comp_se";
  os << '\n';
  for (const auto& p : result.summary) {
    os << p.n_photons << ',' << p.pairs << ',' << p.t_acc << ',' << p.mean_area << ',' << p.se_area << ','
       << p.normalized << ',' << p.normalized_se;
    if (comp) os << ',' << *p.mean_compensated << ',' << *p.normalized_compensated << ','
                 << *p.normalized_compensated_se;
    os << '\n';
  }
  os.precision(old_precision);
}

double ConsistencyLine::relative_error() const { return std::abs(computed - reference) / std::abs(reference); }

bool ConsistencyReport::all_pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const auto& l) { return l.pass; });
}

ConsistencyReport consistency_check(const ConsistencyAnchors& a) {
  ConsistencyReport report;
  auto add = [&](std::string name, double computed, double reference, std::string unit, bool checked) {
    ConsistencyLine line{std::move(name), computed, reference, std::move(unit), true};
    if (checked) line.pass = line.relative_error() <= a.tolerance;
    report.lines.push_back(std::move(line));
  };
  add("accumulation_duration", a.pairs * a.sigma, a.reported_duration, "s", true);
  add("repetition_rate", 1.0 / a.sigma, a.reported_repetition_rate, "Hz", true);
  add("grating_period", 1.0 / a.tau, 1.0 / a.tau, "Hz", false);
  return report;
}

void write_report(std::ostream& os, const ConsistencyReport& report) {
  const auto flags = os.flags();
  const auto old_precision = os.precision(6);
  for (const auto& l : report.lines) {
    os << (l.pass ? "PASS " : "FAIL ") << std::left << std::setw(22) << l.name << std::right
       << " computed=" << l.computed << ' ' << l.unit << " reference=" << l.reference << ' ' << l.unit
       << " rel_err=" << std::fixed << std::setprecision(2) << 100.0 * l.relative_error() << "%\n";
    os.flags(flags);
    os.precision(6);
  }
  os.flags(flags);
  os.precision(old_precision);
}

} // namespace echosim
