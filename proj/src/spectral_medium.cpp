#include "echosim/spectral_medium.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "echosim/csv_io.hpp"
#include "echosim/errors.hpp"

namespace echosim {

Eigen::ArrayXd FrequencyGrid::detunings() const {
  const double bw = bin_width();
  const double first = lower_edge() + 0.5 * bw;
  return first + bw * Eigen::ArrayXd::LinSpaced(n_bins, 0.0, static_cast<double>(n_bins - 1));
}

FrequencyGrid make_grid(double span, Eigen::Index n_bins, double center_detuning) {
  if (n_bins < kMinBins) {
    std::ostringstream msg;
    msg << "frequency grid needs at least " << kMinBins << " bins, got " << n_bins;
    throw ValidationError(msg.str());
  }
  if (!(span > 0.0) || !std::isfinite(span)) throw ValidationError("frequency grid span must be positive");
  return FrequencyGrid{center_detuning, span, n_bins};
}

FrequencyGrid default_grid(double pulse_duration, double tau, double center_detuning) {
  require(pulse_duration > 0.0, "pulse duration must be positive");
  require(tau > 0.0, "intra-pair delay must be positive");
  const double span = 10.0 / pulse_duration;
  const double max_bin_width = 1.0 / (16.0 * tau);
  Eigen::Index n = kMinBins;
  while (span / static_cast<double>(n) > max_bin_width) {
    n *= 2;
    require(n <= (Eigen::Index{1} << 26), "default grid would exceed 2^26 bins");
  }
  return make_grid(span, n, center_detuning);
}

SpectralGrating::SpectralGrating(const FrequencyGrid& g, double beta)
    : grid(g), deviation(Eigen::ArrayXd::Zero(g.n_bins)), storage_efficiency(beta) {
  require(beta >= 0.0 && beta <= 1.0, "storage efficiency must lie in [0, 1]");
}

void SpectralGrating::clamp() { deviation = deviation.max(-1.0).min(0.0); }

std::complex<double> grating_fourier_component(const SpectralGrating& g, double delay) {
  if (!(delay > 0.0)) throw ValidationError("Fourier delay must be positive");
  if (!g.grid.resolves(delay)) {
    std::ostringstream msg;
    msg << "delay " << delay << " s aliases on a grid with bin width " << g.grid.bin_width() << " Hz";
    throw ValidationError(msg.str());
  }
  const Eigen::ArrayXd phase = (-2.0 * std::numbers::pi * delay) * g.grid.detunings();
  const double re = (g.deviation * phase.cos()).sum();
  const double im = (g.deviation * phase.sin()).sum();
  return std::complex<double>(re, im) * g.grid.bin_width();
}

SpectralGrating scale_grating(const SpectralGrating& g, double factor) {
  if (!(factor >= 0.0 && factor <= 1.0)) throw ValidationError("scale factor must lie in [0, 1]");
  SpectralGrating out = g;
  out.deviation *= factor;
  return out;
}

void write_grating_csv(std::ostream& os, const SpectralGrating& g) {
  os << "detuning_hz,deviation\n";
  for (Eigen::Index k = 0; k < g.size(); ++k)
    os << shortest(g.grid.detuning(k)) << ',' << shortest(g.deviation(k)) << '\n';
}

} // namespace echosim
