// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "echosim/config.hpp"
#include "echosim/echo_readout.hpp"
#include "echosim/excitation.hpp"
#include "echosim/harness.hpp"
#include "echosim/relaxation.hpp"
#include "echosim/spectral_medium.hpp"
#include "oracles.hpp"

using namespace echosim;

namespace {

constexpr double kT = 44e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome model_ratio() {
  bool ok = true;
  std::ostringstream detail;
  for (double n : {0.54, 1.65, 12.5}) {
    const double two = expected_signal(n, 1e6 / n, kT, StatisticsModel::TwoPhotonMin);
    const double all = expected_signal(n, 1e6 / n, kT, StatisticsModel::AllPairs);
    const double exact = std::pow(-std::expm1(-n), 2);
    const double rel = std::abs(two / all - exact) / exact;
    ok = ok && rel <= 1e-12;
    detail << fmt("N=%g ratio=%.6f rel_err=%.1e; ", n, two / all, rel);
  }
  // The quoted 0.17415 is a rounded figure; (1 - e^-0.54)^2 = 0.174099.
  const double at054 = two_photon_suppression(0.54);
  ok = ok && std::abs(at054 - 0.17415) <= 1e-4;
  detail << fmt("N=0.54 value=%.6f vs quoted 0.17415", at054);
  return {ok, detail.str()};
}

Outcome constant_energy_flatness() {
  bool ok = true;
  std::ostringstream detail;
  for (StatisticsModel model : {StatisticsModel::AllPairs, StatisticsModel::TwoPhotonMin}) {
    SweepConfig cfg;
    cfg.n_list = {0.54, 1.65, 3.0, 6.0, 12.5};
    cfg.energy_budget = 5.4e5;
    cfg.seeds = 100;
    cfg.master_seed = 20260101;
    cfg.model = model;
    const SweepResult r = run_sweep(cfg);
    detail << to_string(model) << ':';
    for (const auto& p : r.summary) {
      const double expected = model == StatisticsModel::AllPairs
                                  ? 1.0
                                  : two_photon_suppression(p.n_photons) / two_photon_suppression(12.5);
      const double z = p.normalized_se > 0.0 ? (p.normalized - expected) / p.normalized_se : 0.0;
      const bool point_ok = p.normalized_se > 0.0 ? std::abs(z) <= 3.0 : p.normalized == expected;
      ok = ok && point_ok;
      detail << fmt(" N=%g %.5f(exp %.5f, z=%+.2f)", p.n_photons, p.normalized, expected, z);
    }
    detail << "; ";
  }
  return {ok, detail.str()};
}

Outcome echo_timing() {
  bool ok = true;
  std::ostringstream detail;
  for (double tau : {100e-9, 175e-9, 300e-9}) {
    const PulseSequenceSpec spec{0.54, kT, tau, 470e-9, 20000, 1e-9};
    RngStream rng = make_stream(3, static_cast<std::size_t>(tau * 1e9));
    const FrequencyGrid grid = default_grid(kT, tau);
    const auto acc = accumulate(SpectralGrating(grid), spec, LaserModel::ideal(), StatisticsModel::AllPairs, rng);
    const EchoGate gate = echo_gate(tau, kT);
    const EchoTrace trace = readout_trace(acc.grating, ReadoutSpec{std::numbers::pi / 2.0, kT},
                                          std::max(2.0 * tau, gate.end), 0.5 * nyquist_dt(grid), -1.0, tau);
    const double err = std::abs(trace.peak_time() - tau);
    ok = ok && err <= trace.dt;
    detail << fmt("tau=%.0fns peak=%.2fns dt=%.2fns; ", tau * 1e9, trace.peak_time() * 1e9, trace.dt * 1e9);
  }
  return {ok, detail.str()};
}

Outcome grating_periodicity() {
  bool ok = true;
  std::ostringstream detail;
  for (double tau : {100e-9, 175e-9, 300e-9}) {
    const PulseSequenceSpec spec{1.0, kT, tau, 470e-9, 1, 1e-9};
    SpectralGrating g(default_grid(kT, tau));
    write_pair_into(g, spec, 1, 0.0, 0.0);
    // Scan past the zero-delay population dip, whose transform vanishes beyond T.
    const double resolution = 1.0 / g.grid.span;
    double best_delay = 0.0, best = 0.0;
    for (double d = kT + resolution; d <= 2.0 * tau; d += 0.05 * resolution) {
      const double a = std::abs(grating_fourier_component(g, d));
      if (a > best) {
        best = a;
        best_delay = d;
      }
    }
    const double half = std::abs(grating_fourier_component(g, 0.5 * tau)) / std::abs(grating_fourier_component(g, tau));
    ok = ok && std::abs(best_delay - tau) <= resolution && half <= 0.01;
    detail << fmt("tau=%.0fns argmax=%.2fns (res %.2fns) |F(tau/2)|/|F(tau)|=%.1e; ", tau * 1e9, best_delay * 1e9,
                  resolution * 1e9, half);
  }
  return {ok, detail.str()};
}

Outcome poisson_sampler() {
  constexpr int kDraws = 1'000'000;
  constexpr double kMean = 0.54;
  RngStream rng = make_stream(5);
  std::vector<double> counts(7, 0.0);  // n = 0..5 and n >= 6
  for (int i = 0; i < kDraws; ++i) counts[std::min<std::int64_t>(sample_photon_number(rng, kMean), 6)] += 1.0;

  const double p0 = counts[0] / kDraws;
  double chi2 = 0.0, tail = 1.0;
  for (int n = 0; n < 7; ++n) {
    const double p = n < 6 ? oracle::poisson_pmf(n, kMean) : tail;
    tail -= p;
    const double expected = p * kDraws;
    chi2 += (counts[n] - expected) * (counts[n] - expected) / expected;
  }
  const double p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(6.0), chi2));
  const bool ok = std::abs(p0 - std::exp(-kMean)) <= 0.002 && p_value > 0.001;
  return {ok, fmt("P0=%.5f (exact %.5f) chi2=%.2f df=6 p=%.3f", p0, std::exp(-kMean), chi2, p_value)};
}

Outcome coherence_degradation() {
  constexpr double kTau = 175e-9;
  constexpr std::int64_t kPairs = 10'000;
  constexpr int kSeeds = 100;
  const PulseSequenceSpec spec{1.0, kT, kTau, 470e-9, kPairs, 1e-9};
  const FrequencyGrid grid = default_grid(kT, kTau);

  SpectralGrating unit(grid);
  write_pair_into(unit, spec, 1, 0.0, 0.0);
  const double per_photon = std::abs(grating_fourier_component(unit, kTau));

  bool ok = true;
  std::ostringstream detail;
  double previous = std::numeric_limits<double>::infinity();
  double last_mean = 0.0, last_se = 0.0;
  const std::vector<double> ratios{0.1, 0.5, 1.0, 2.0, 5.0};
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    LaserModel laser;
    laser.linewidth_fwhm = ratios[i] / (std::numbers::pi * kTau);  // T_c = 1 / (pi FWHM)
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      RngStream rng = make_stream(6, i, static_cast<std::uint64_t>(s));
      const auto acc = accumulate(SpectralGrating(grid), spec, laser, StatisticsModel::AllPairs, rng);
      const double a = std::abs(grating_fourier_component(acc.grating, kTau)) / per_photon;
      sum += a;
      sum2 += a * a;
    }
    const double mean = sum / kSeeds;
    const double se = std::sqrt((sum2 / kSeeds - mean * mean) / (kSeeds - 1));
    ok = ok && mean < previous;
    previous = mean;
    last_mean = mean;
    last_se = se;
    detail << fmt("tau/Tc=%g mean=%.1f; ", ratios[i], mean);
  }
  const auto phasor = oracle::phasor_sum(1.0, kPairs, 2.0 * ratios.back(), 2000, 66);
  const double z = (last_mean - phasor.mean) / std::hypot(last_se, phasor.se);
  ok = ok && std::abs(z) <= 3.0;
  detail << fmt("phasor oracle %.1f+-%.1f vs %.1f+-%.1f (z=%+.2f, sqrt(M E[n^2])=%.1f)", phasor.mean, phasor.se,
                last_mean, last_se, z, std::sqrt(2.0 * kPairs));
  return {ok, detail.str()};
}

// Median over seeds of each fitted parameter, and the median per-seed relative error.
struct FitSummary {
  std::array<double, 4> median_value{};
  std::array<double, 4> median_error{};
  int failures = 0;
};

std::array<double, 4> params(const BiExpDecay& d) { return {d.a1, d.t1, d.a2, d.t2}; }

FitSummary noisy_fits(const BiExpDecay& truth, const Eigen::ArrayXd& probes, double sigma, int seeds) {
  std::array<std::vector<double>, 4> values, errors;
  FitSummary out;
  const auto ref = params(truth);
  for (int s = 0; s < seeds; ++s) {
    RngStream rng = make_stream(7, 1, static_cast<std::uint64_t>(s));
    try {
      const auto p = params(fit_biexp(simulate_hole_decay(truth, probes, sigma, rng)).decay);
      for (int k = 0; k < 4; ++k) {
        values[k].push_back(p[k]);
        errors[k].push_back(std::abs(p[k] / ref[k] - 1.0));
      }
    } catch (const RuntimeError&) {
      ++out.failures;
    }
  }
  if (values[0].empty()) return out;
  for (int k = 0; k < 4; ++k) {
    out.median_value[k] = median(values[k]);
    out.median_error[k] = median(errors[k]);
  }
  return out;
}

// Cramer-Rao relative standard deviations of (a1, a2, t1, t2) for Gaussian noise sigma.
std::array<double, 4> cramer_rao(const BiExpDecay& d, const Eigen::ArrayXd& t, double sigma) {
  Eigen::MatrixXd j(t.size(), 4);
  j.col(0) = (-t / d.t1).exp().matrix();
  j.col(1) = (-t / d.t2).exp().matrix();
  j.col(2) = (d.a1 * t / d.t1 * (-t / d.t1).exp()).matrix();
  j.col(3) = (d.a2 * t / d.t2 * (-t / d.t2).exp()).matrix();
  const Eigen::Matrix4d cov = (j.transpose() * j).inverse() * sigma * sigma;
  return {std::sqrt(cov(0, 0)) / d.a1, std::sqrt(cov(2, 2)), std::sqrt(cov(1, 1)) / d.a2, std::sqrt(cov(3, 3))};
}

Outcome decay_fitting() {
  const BiExpDecay truth{0.6, 100.0, 0.4, 3000.0};
  const Eigen::ArrayXd probes = Eigen::ArrayXd::LinSpaced(50, 0.0, 6000.0);
  constexpr double kSigma = 0.05;  // SNR 20 against d(0) = 1

  RngStream clean_rng = make_stream(7);
  const auto fitted = params(fit_biexp(simulate_hole_decay(truth, probes, 0.0, clean_rng)).decay);
  const auto ref = params(truth);
  double noiseless = 0.0;
  for (int k = 0; k < 4; ++k) noiseless = std::max(noiseless, std::abs(fitted[k] / ref[k] - 1.0));

  // Judged on the median fitted value per parameter. With 122 s probe spacing the t1 Cramer-Rao
  // bound is ~24%, so no unbiased fit can hold every seed's error near 5%; those medians are
  // printed for reference.
  const FitSummary f = noisy_fits(truth, probes, kSigma, 100);
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(f.median_value[k] / ref[k] - 1.0));
  const auto crb = cramer_rao(truth, probes, kSigma);
  const bool ok = noiseless <= 1e-6 && f.failures == 0 && worst <= 0.05;
  return {ok, fmt("noiseless max rel err %.1e; SNR 20 medians a1=%.4f t1=%.2f a2=%.4f t2=%.1f (worst %.2f%%, %d failed "
                  "fits); per-seed median |err| a1=%.3f t1=%.3f a2=%.3f t2=%.3f vs Cramer-Rao sd %.3f %.3f %.3f %.3f",
                  noiseless, f.median_value[0], f.median_value[1], f.median_value[2], f.median_value[3], 100.0 * worst,
                  f.failures, f.median_error[0], f.median_error[1], f.median_error[2], f.median_error[3], crb[0],
                  crb[1], crb[2], crb[3])};
}

Outcome compensation_round_trip() {
  constexpr std::int64_t kPairs = 1'000'000;
  constexpr double kTacc = 3300.0;
  SweepConfig cfg;
  cfg.n_list = {0.54};
  cfg.energy_budget = 0.54 * kPairs;
  const RunSettings settings = make_run_settings(cfg);

  bool ok = true;
  std::ostringstream detail;
  for (std::uint64_t s = 0; s < 3; ++s) {
    cfg.decay.reset();
    const RunRecord clean = run_point(cfg, settings, 0.54, kPairs, kTacc / kPairs, 0, s);
    cfg.decay = BiExpDecay::in_field();
    const RunRecord aged = run_point(cfg, settings, 0.54, kPairs, kTacc / kPairs, 0, s);
    const double rel = *aged.echo_area_compensated / clean.echo_area - 1.0;
    ok = ok && std::abs(rel) <= 0.02;
    detail << fmt("seed %d: raw/clean=%.4f survival=%.4f compensated/clean-1=%+.2e; ", static_cast<int>(s),
                  aged.echo_area / clean.echo_area, aged.survival_mean, rel);
  }
  return {ok, detail.str()};
}

Outcome arithmetic_anchors() {
  const ConsistencyReport report = consistency_check();
  std::ostringstream detail;
  for (const auto& l : report.lines)
    detail << fmt("%s=%.4g vs %.4g (%.2f%%); ", l.name.c_str(), l.computed, l.reference, 100.0 * l.relative_error());
  return {report.all_pass(), detail.str()};
}

} // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed-form model ratio", model_ratio},
      {"constant-energy flatness", constant_energy_flatness},
      {"echo timing", echo_timing},
      {"grating periodicity", grating_periodicity},
      {"Poisson sampler", poisson_sampler},
      {"coherence degradation", coherence_degradation},
      {"decay fitting", decay_fitting},
      {"compensation round trip", compensation_round_trip},
      {"arithmetic anchors", arithmetic_anchors},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << " (" << fmt("%.1f", secs)
              << " s): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << '/' << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
