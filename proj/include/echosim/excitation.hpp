#ifndef ECHOSIM_EXCITATION_HPP
#define ECHOSIM_EXCITATION_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string_view>
#include <vector>
#include <Eigen/Dense>

#include "echosim/rng.hpp"
#include "echosim/spectral_medium.hpp"

namespace echosim {

/// Accumulation sequence: M pairs of pulses of duration T, split by tau, repeated every sigma.
struct PulseSequenceSpec {
  double n_mean = 0.0;          ///< mean photons per pulse pair
  double pulse_duration = 0.0;  ///< T (s)
  double tau = 0.0;             ///< intra-pair delay (s)
  double sigma = 0.0;           ///< pair-to-pair period (s)
  std::int64_t pairs = 1;       ///< M
  double write_gain = 1e-9;     ///< grating depletion per absorbed photon

  /// tau > T, sigma > tau + T, M >= 1, w > 0, N >= 0.
  void validate() const;
  double accumulation_time() const { return static_cast<double>(pairs) * sigma; }
};

/// Per-pair depletion above which the perturbative write model is rejected.
constexpr double kLinearRegimeGuard = 1e-3;

/// Lorentzian-linewidth laser with a bounded frequency walk inside a lock window.
/// A linewidth of zero is the ideal laser (infinite coherence time).
struct LaserModel {
  double linewidth_fwhm = 0.0;
  double lock_window_halfwidth = 0.0;
  double drift_step_rms = 0.0;

  static LaserModel ideal() { return {}; }

  double coherence_time() const {
    return linewidth_fwhm > 0.0 ? 1.0 / (std::numbers::pi * linewidth_fwhm) : std::numeric_limits<double>::infinity();
  }
  void validate() const;
};

enum class StatisticsModel { AllPairs, TwoPhotonMin };

std::string_view to_string(StatisticsModel model);
/// Accepts "all" / "all_pairs" and "two" / "two_photon_min".
StatisticsModel parse_statistics_model(std::string_view text);

/// Poisson photon-number draws at a fixed mean; caches exp(-N) for the sequential search.
class PoissonSampler {
public:
  explicit PoissonSampler(double n_mean);
  std::int64_t operator()(RngStream& rng) const;
  double mean() const { return mean_; }

private:
  double mean_;
  double p0_;
};

/// n ~ Poisson(N). Exact inversion by sequential search for N <= 30.
std::int64_t sample_photon_number(RngStream& rng, double n_mean);

/// sinc(pi * detuning * T): spectral field amplitude of a square pulse, 1 at zero detuning.
template <typename Scalar>
Scalar pulse_envelope_amplitude(Scalar duration, Scalar detuning) {
  using std::abs;
  using std::sin;
  const Scalar x = std::numbers::pi_v<Scalar> * detuning * duration;
  if (abs(x) < Scalar(1e-8)) return Scalar(1) - x * x / Scalar(6);
  return sin(x) / x;
}

/// Coefficient-wise envelope over an array of detunings.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> pulse_envelope(const Eigen::ArrayBase<Derived>& detuning,
                                                                         typename Derived::Scalar duration) {
  using Scalar = typename Derived::Scalar;
  return detuning.derived().unaryExpr([duration](Scalar nu) { return pulse_envelope_amplitude(duration, nu); });
}

/// Relative phase between the two pulses of a pair: Gaussian, variance 2 tau / T_c.
double pair_phase_error(RngStream& rng, const LaserModel& laser, double tau);

/// One pair interval of carrier drift, reflected at +-lock_window_halfwidth.
double carrier_frequency_walk(RngStream& rng, const LaserModel& laser, double previous);

/// Depletes the grating by w beta n env^2(nu - c) [1 + cos(2 pi (nu - c) tau + phase)] / 2, then clamps.
void write_pair_into(SpectralGrating& g, const PulseSequenceSpec& spec, std::int64_t n_photons, double phase,
                     double carrier_offset);

inline SpectralGrating write_pair(SpectralGrating g, const PulseSequenceSpec& spec, std::int64_t n_photons,
                                  double phase, double carrier_offset) {
  write_pair_into(g, spec, n_photons, phase, carrier_offset);
  return g;
}

/// Fraction of a write's amplitude that survives to read-out, as a function of its age (s).
using SurvivalLaw = std::function<double(double age)>;

struct AccumulationResult {
  SpectralGrating grating;
  std::vector<double> write_times;  ///< k * sigma for every pair k, written or skipped
  std::int64_t photons_written = 0;
  std::int64_t pairs_written = 0;
};

/// Writes M pairs into g. Read-out is taken to happen at M * sigma, so pair k has age (M - k) sigma;
/// when `survival` is given each write is weighted by survival(age).
/// Throws ValidationError if w * N exceeds the linear-regime guard.
AccumulationResult accumulate(SpectralGrating g, const PulseSequenceSpec& spec, const LaserModel& laser,
                              StatisticsModel model, RngStream& rng, const SurvivalLaw& survival = {});

} // namespace echosim

#endif // ECHOSIM_EXCITATION_HPP
