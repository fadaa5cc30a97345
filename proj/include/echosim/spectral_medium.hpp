#ifndef ECHOSIM_SPECTRAL_MEDIUM_HPP
#define ECHOSIM_SPECTRAL_MEDIUM_HPP

#include <complex>
#include <iosfwd>
#include <Eigen/Dense>

namespace echosim {

/// Uniform grid of absorber detunings across the inhomogeneous line (Hz).
struct FrequencyGrid {
  double center_detuning = 0.0;
  double span = 0.0;
  Eigen::Index n_bins = 0;

  double bin_width() const { return span / static_cast<double>(n_bins); }
  double lower_edge() const { return center_detuning - 0.5 * span; }

  /// Detuning of bin centre k.
  double detuning(Eigen::Index k) const {
    return lower_edge() + (static_cast<double>(k) + 0.5) * bin_width();
  }

  /// All bin-centre detunings, ascending.
  Eigen::ArrayXd detunings() const;

  /// True when a modulation of period 1/delay has at least `min_bins` bins per period.
  bool resolves(double delay, double min_bins = 2.0) const {
    return delay > 0.0 && bin_width() * min_bins <= 1.0 / delay;
  }
};

constexpr Eigen::Index kMinBins = 16;

/// Throws ValidationError for n_bins < 16 or span <= 0.
FrequencyGrid make_grid(double span, Eigen::Index n_bins, double center_detuning = 0.0);

/// Span 10/T and the smallest power of two bins giving bin_width <= 1/(16 tau).
FrequencyGrid default_grid(double pulse_duration, double tau, double center_detuning = 0.0);

/// Persistent ground-state population deviation per bin (negative = depleted).
struct SpectralGrating {
  FrequencyGrid grid;
  Eigen::ArrayXd deviation;
  double storage_efficiency = 1.0;

  SpectralGrating() = default;
  explicit SpectralGrating(const FrequencyGrid& g, double beta = 1.0);

  Eigen::Index size() const { return deviation.size(); }
  bool is_zero() const { return (deviation == 0.0).all(); }

  /// Restricts every bin to [-1, 0].
  void clamp();
};

/// sum_k deviation_k exp(-i 2 pi nu_k delay) bin_width; the modulation amplitude at period 1/delay.
/// Throws ValidationError when delay <= 0 or the period spans fewer than two bins.
std::complex<double> grating_fourier_component(const SpectralGrating& g, double delay);

/// Multiplies every bin by factor in [0, 1].
SpectralGrating scale_grating(const SpectralGrating& g, double factor);

/// CSV dump: `detuning_hz,deviation`, one row per bin, ascending detuning.
void write_grating_csv(std::ostream& os, const SpectralGrating& g);

} // namespace echosim

#endif // ECHOSIM_SPECTRAL_MEDIUM_HPP
