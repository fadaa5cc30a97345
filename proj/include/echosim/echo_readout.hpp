#ifndef ECHOSIM_ECHO_READOUT_HPP
#define ECHOSIM_ECHO_READOUT_HPP

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <vector>
#include <Eigen/Dense>

#include "echosim/excitation.hpp"
#include "echosim/spectral_medium.hpp"

namespace echosim {

/// Strong read-out pulse. Its duration matches the accumulation pulses.
struct ReadoutSpec {
  double pulse_area = std::numbers::pi / 2.0;
  double duration = 0.0;

  void validate() const;
  double efficiency() const { return std::sin(pulse_area); }
};

/// Gated detector record of the emitted field intensity, sampled at t0 + j dt.
struct EchoTrace {
  double t0 = 0.0;
  double dt = 0.0;
  double gate_open = 0.0;
  Eigen::ArrayXd intensity;

  double time(Eigen::Index j) const { return t0 + static_cast<double>(j) * dt; }
  Eigen::Index size() const { return intensity.size(); }
  Eigen::Index peak_index() const;
  double peak_time() const { return time(peak_index()); }
};

/// Largest sample spacing that avoids time-domain aliasing on `grid`.
inline double nyquist_dt(const FrequencyGrid& grid) { return 1.0 / (2.0 * grid.span); }

/// Synthesises the read-out emission over [0, window] by direct Fourier summation over bins:
///   field(t) = sin(theta3) sum_k deviation_k env(nu_k; T) exp(-i 2 pi nu_k t) bin_width.
/// Samples before `gate_open` (negative: the read-out duration) are zeroed.
/// When `echo_delay` > 0 the window must cover at least twice that delay.
EchoTrace readout_trace(const SpectralGrating& g, const ReadoutSpec& r, double window, double dt,
                        double gate_open = -1.0, double echo_delay = 0.0);

/// Sum of intensity * dt over samples with gate_start <= t < gate_end.
double echo_area(const EchoTrace& trace, double gate_start, double gate_end);

/// Gate enclosing the whole echo of a single-delay grating: tau +- 1.5 T, opened no earlier than T.
struct EchoGate {
  double start = 0.0;
  double end = 0.0;
};
EchoGate echo_gate(double tau, double pulse_duration);

/// Closed-form echo scaling C N^2 M^2 T (C = 1), times (1 - e^-N)^2 when only pairs
/// carrying at least two photons contribute.
template <typename Scalar>
Scalar expected_signal(Scalar n_photons, Scalar pairs, Scalar pulse_duration, StatisticsModel model) {
  using std::expm1;
  const Scalar base = n_photons * n_photons * pairs * pairs * pulse_duration;
  if (model == StatisticsModel::AllPairs) return base;
  const Scalar contributing = -expm1(-n_photons);
  return base * contributing * contributing;
}

/// (1 - e^-N)^2, evaluated without cancellation.
inline double two_photon_suppression(double n_photons) {
  const double f = -std::expm1(-n_photons);
  return f * f;
}

struct ModelCurveRow {
  double n_photons = 0.0;
  std::int64_t pairs = 0;
  double s_all = 0.0;  ///< normalised to the largest-N row
  double s_two = 0.0;  ///< normalised to the largest-N row
  double ratio = 0.0;  ///< un-normalised S_two / S_all at this N
};

/// Both model predictions at a fixed photon budget, M = round(budget / N) per point,
/// normalised to the entry with the largest N.
std::vector<ModelCurveRow> model_curves(const std::vector<double>& n_list, double energy_budget,
                                        double pulse_duration);

/// `time_s,intensity`
void write_trace_csv(std::ostream& os, const EchoTrace& trace);
/// `n_photons,m_pairs,s_all,s_two,ratio`
void write_model_curves_csv(std::ostream& os, const std::vector<ModelCurveRow>& rows);

} // namespace echosim

#endif // ECHOSIM_ECHO_READOUT_HPP
