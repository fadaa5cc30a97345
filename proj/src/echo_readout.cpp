#include "echosim/echo_readout.hpp"

#include <algorithm>
#include <complex>
#include <ostream>
#include <sstream>

#include "echosim/csv_io.hpp"
#include "echosim/errors.hpp"

namespace echosim {

void ReadoutSpec::validate() const {
  require(pulse_area > 0.0 && pulse_area <= std::numbers::pi, "read-out pulse area must lie in (0, pi]");
  require(duration > 0.0, "read-out duration must be positive");
}

Eigen::Index EchoTrace::peak_index() const {
  Eigen::Index idx = 0;
  if (intensity.size() > 0) intensity.maxCoeff(&idx);
  return idx;
}

EchoTrace readout_trace(const SpectralGrating& g, const ReadoutSpec& r, double window, double dt, double gate_open,
                        double echo_delay) {
  r.validate();
  require(window > 0.0, "trace window must be positive");
  require(dt > 0.0, "trace sample spacing must be positive");
  if (dt > nyquist_dt(g.grid)) {
    std::ostringstream msg;
    msg << "sample spacing " << dt << " s exceeds the Nyquist limit " << nyquist_dt(g.grid) << " s of the grid";
    throw ValidationError(msg.str());
  }
  if (echo_delay > 0.0) require(window >= 2.0 * echo_delay, "trace window must cover twice the echo delay");

  EchoTrace trace;
  trace.t0 = 0.0;
  trace.dt = dt;
  trace.gate_open = gate_open < 0.0 ? r.duration : gate_open;
  const auto n_samples = static_cast<Eigen::Index>(std::floor(window / dt)) + 1;
  trace.intensity = Eigen::ArrayXd::Zero(n_samples);
  if (g.is_zero()) return trace;

  const Eigen::ArrayXd nu = g.grid.detunings();
  const Eigen::ArrayXd weight =
      r.efficiency() * g.grid.bin_width() * g.deviation * pulse_envelope(nu, r.duration);

  // Phasors exp(-i 2 pi nu t) advance by a fixed per-bin rotation; they are re-seeded
  // from the exact angle periodically so rounding does not accumulate.
  constexpr Eigen::Index kReseed = 64;
  const Eigen::ArrayXd step_angle = (-2.0 * std::numbers::pi * dt) * nu;
  Eigen::ArrayXcd step(nu.size());
  step.real() = step_angle.cos();
  step.imag() = step_angle.sin();
  Eigen::ArrayXcd phasor(nu.size());

  for (Eigen::Index j = 0; j < n_samples; ++j) {
    if (j % kReseed == 0) {
      const Eigen::ArrayXd angle = (-2.0 * std::numbers::pi * trace.time(j)) * nu;
      phasor.real() = angle.cos();
      phasor.imag() = angle.sin();
    } else {
      phasor *= step;
    }
    if (trace.time(j) < trace.gate_open) continue;
    const std::complex<double> field = (weight.cast<std::complex<double>>() * phasor).sum();
    trace.intensity(j) = std::norm(field);
  }
  return trace;
}

double echo_area(const EchoTrace& trace, double gate_start, double gate_end) {
  require(gate_start < gate_end, "echo gate must have start < end");
  double area = 0.0;
  Eigen::Index used = 0;
  for (Eigen::Index j = 0; j < trace.size(); ++j) {
    const double t = trace.time(j);
    if (t >= gate_start && t < gate_end) {
      area += trace.intensity(j);
      ++used;
    }
  }
  require(used > 0, "echo gate contains no trace samples");
  return area * trace.dt;
}

EchoGate echo_gate(double tau, double pulse_duration) {
  return {std::max(tau - 1.5 * pulse_duration, pulse_duration), tau + 1.5 * pulse_duration};
}

std::vector<ModelCurveRow> model_curves(const std::vector<double>& n_list, double energy_budget,
                                        double pulse_duration) {
  require(!n_list.empty(), "model curves need at least one photon number");
  require(energy_budget > 0.0, "energy budget must be positive");
  require(pulse_duration > 0.0, "pulse duration must be positive");

  std::vector<ModelCurveRow> rows;
  rows.reserve(n_list.size());
  for (double n : n_list) {
    require(n > 0.0, "photon numbers must be positive");
    const double m = std::round(energy_budget / n);
    if (m < 1.0) {
      std::ostringstream msg;
      msg << "budget " << energy_budget << " gives fewer than one pair at N = " << n;
      throw ValidationError(msg.str());
    }
    ModelCurveRow row;
    row.n_photons = n;
    row.pairs = static_cast<std::int64_t>(m);
    row.s_all = expected_signal(n, m, pulse_duration, StatisticsModel::AllPairs);
    row.s_two = expected_signal(n, m, pulse_duration, StatisticsModel::TwoPhotonMin);
    row.ratio = two_photon_suppression(n);
    rows.push_back(row);
  }

  const auto anchor = std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.n_photons < b.n_photons;
  });
  const double norm_all = anchor->s_all;
  const double norm_two = anchor->s_two;
  for (auto& row : rows) {
    row.s_all /= norm_all;
    row.s_two /= norm_two;
  }
  return rows;
}

void write_trace_csv(std::ostream& os, const EchoTrace& trace) {
  os << "time_s,intensity\n";
  for (Eigen::Index j = 0; j < trace.size(); ++j)
    os << shortest(trace.time(j)) << ',' << shortest(trace.intensity(j)) << '\n';
}

void write_model_curves_csv(std::ostream& os, const std::vector<ModelCurveRow>& rows) {
  os << "n_photons,m_pairs,s_all,s_two,ratio\n";
  for (const auto& r : rows)
    os << shortest(r.n_photons) << ',' << r.pairs << ',' << shortest(r.s_all) << ',' << shortest(r.s_two)
       << ',' << shortest(r.ratio) << '\n';
}

} // namespace echosim
