#include "echosim/excitation.hpp"

#include <random>
#include <sstream>
#include <string>

#include "echosim/errors.hpp"

namespace echosim {

void PulseSequenceSpec::validate() const {
  require(n_mean >= 0.0 && std::isfinite(n_mean), "mean photon number must be finite and >= 0");
  require(pulse_duration > 0.0, "pulse duration must be positive");
  require(tau > pulse_duration, "intra-pair delay must exceed the pulse duration");
  require(sigma > tau + pulse_duration, "pair period must exceed tau + T");
  require(pairs >= 1, "at least one pulse pair is required");
  require(write_gain > 0.0, "write gain must be positive");
}

void LaserModel::validate() const {
  require(linewidth_fwhm >= 0.0, "laser linewidth must be >= 0 (0 = ideal)");
  require(lock_window_halfwidth >= 0.0, "lock window half-width must be >= 0");
  require(drift_step_rms >= 0.0, "drift step rms must be >= 0");
}

std::string_view to_string(StatisticsModel model) {
  return model == StatisticsModel::AllPairs ? "all" : "two";
}

StatisticsModel parse_statistics_model(std::string_view text) {
  if (text == "all" || text == "all_pairs" || text == "ALL_PAIRS") return StatisticsModel::AllPairs;
  if (text == "two" || text == "two_photon_min" || text == "TWO_PHOTON_MIN") return StatisticsModel::TwoPhotonMin;
  throw ValidationError("unknown statistics model '" + std::string(text) + "' (expected all|two)");
}

namespace {
constexpr double kSequentialSearchLimit = 30.0;
}

PoissonSampler::PoissonSampler(double n_mean) : mean_(n_mean), p0_(std::exp(-n_mean)) {
  require(n_mean >= 0.0 && std::isfinite(n_mean), "Poisson mean must be finite and >= 0");
}

std::int64_t PoissonSampler::operator()(RngStream& rng) const {
  if (mean_ == 0.0) return 0;
  if (mean_ > kSequentialSearchLimit) {
    std::poisson_distribution<std::int64_t> dist(mean_);
    return dist(rng);
  }
  const double u = uniform01(rng);
  std::int64_t n = 0;
  double p = p0_;
  double cdf = p;
  // The tail past n ~ 200 is below double resolution for N <= 30.
  while (u >= cdf && n < 400) {
    ++n;
    p *= mean_ / static_cast<double>(n);
    cdf += p;
  }
  return n;
}

std::int64_t sample_photon_number(RngStream& rng, double n_mean) { return PoissonSampler(n_mean)(rng); }

double pair_phase_error(RngStream& rng, const LaserModel& laser, double tau) {
  const double coherence = laser.coherence_time();
  if (tau <= 0.0 || !std::isfinite(coherence)) return 0.0;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 * tau / coherence));
  return dist(rng);
}

namespace {

// Folds x into [-w, w] by mirror reflection at both edges.
double reflect_into_window(double x, double w) {
  if (w <= 0.0) return 0.0;
  if (x >= -w && x <= w) return x;
  const double period = 4.0 * w;
  double y = std::fmod(x + w, period);
  if (y < 0.0) y += period;
  if (y > 2.0 * w) y = period - y;
  return y - w;
}

} // namespace

double carrier_frequency_walk(RngStream& rng, const LaserModel& laser, double previous) {
  require(std::abs(previous) <= laser.lock_window_halfwidth, "carrier offset outside the lock window");
  if (laser.drift_step_rms <= 0.0) return previous;
  std::normal_distribution<double> dist(0.0, laser.drift_step_rms);
  return reflect_into_window(previous + dist(rng), laser.lock_window_halfwidth);
}

namespace {

// Depletes g by the sum of a batch of writes sharing one carrier offset. The batch is
// described by its weighted photon count and the cos/sin moments of the pair phases:
//   sum_j a_j [1 + cos(theta + phi_j)] = s0 + cos(theta) sc - sin(theta) ss.
void apply_batch(SpectralGrating& g, const PulseSequenceSpec& spec, double carrier, double s0, double sc,
                 double ss) {
  if (s0 == 0.0 && sc == 0.0 && ss == 0.0) return;
  const Eigen::ArrayXd offset = g.grid.detunings() - carrier;
  const Eigen::ArrayXd env2 = pulse_envelope(offset, spec.pulse_duration).square();
  const Eigen::ArrayXd theta = (2.0 * std::numbers::pi * spec.tau) * offset;
  const double scale = 0.5 * spec.write_gain * g.storage_efficiency;
  g.deviation -= scale * env2 * (s0 + sc * theta.cos() - ss * theta.sin());
  g.clamp();
}

} // namespace

void write_pair_into(SpectralGrating& g, const PulseSequenceSpec& spec, std::int64_t n_photons, double phase,
                     double carrier_offset) {
  require(n_photons >= 0, "photon number must be >= 0");
  if (n_photons == 0) return;
  const Eigen::ArrayXd offset = g.grid.detunings() - carrier_offset;
  const Eigen::ArrayXd env2 = pulse_envelope(offset, spec.pulse_duration).square();
  const Eigen::ArrayXd fringe = ((2.0 * std::numbers::pi * spec.tau) * offset + phase).cos();
  const double scale = 0.5 * spec.write_gain * g.storage_efficiency * static_cast<double>(n_photons);
  g.deviation -= scale * env2 * (1.0 + fringe);
  g.clamp();
}

AccumulationResult accumulate(SpectralGrating g, const PulseSequenceSpec& spec, const LaserModel& laser,
                              StatisticsModel model, RngStream& rng, const SurvivalLaw& survival) {
  spec.validate();
  laser.validate();
  if (spec.write_gain * spec.n_mean > kLinearRegimeGuard) {
    std::ostringstream msg;
    msg << "per-pair depletion w*N = " << spec.write_gain * spec.n_mean << " exceeds the linear-regime guard "
        << kLinearRegimeGuard << " (N = " << spec.n_mean << ")";
    throw ValidationError(msg.str());
  }

  AccumulationResult result;
  result.write_times.resize(static_cast<std::size_t>(spec.pairs));

  const PoissonSampler photons(spec.n_mean);
  const std::int64_t min_photons = model == StatisticsModel::TwoPhotonMin ? 2 : 1;
  const double read_time = spec.accumulation_time();

  // Writes are batched while the carrier is unchanged; clamping after a batch equals clamping
  // after every write because each write only lowers the deviation.
  double carrier = 0.0;
  double s0 = 0.0, sc = 0.0, ss = 0.0;
  for (std::int64_t k = 0; k < spec.pairs; ++k) {
    const double t = static_cast<double>(k) * spec.sigma;
    result.write_times[static_cast<std::size_t>(k)] = t;

    const std::int64_t n = photons(rng);
    const double phase = pair_phase_error(rng, laser, spec.tau);
    if (k > 0) {
      const double next = carrier_frequency_walk(rng, laser, carrier);
      if (next != carrier) {
        apply_batch(g, spec, carrier, s0, sc, ss);
        s0 = sc = ss = 0.0;
        carrier = next;
      }
    }
    if (n < min_photons) continue;

    double weight = static_cast<double>(n);
    if (survival) weight *= survival(read_time - t);
    s0 += weight;
    if (phase == 0.0) {
      sc += weight;
    } else {
      sc += weight * std::cos(phase);
      ss += weight * std::sin(phase);
    }
    result.photons_written += n;
    ++result.pairs_written;
  }
  apply_batch(g, spec, carrier, s0, sc, ss);
  result.grating = std::move(g);
  return result;
}

} // namespace echosim
