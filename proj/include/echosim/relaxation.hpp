#ifndef ECHOSIM_RELAXATION_HPP
#define ECHOSIM_RELAXATION_HPP

#include <cmath>
#include <iosfwd>
#include <string>
#include <Eigen/Dense>

#include "echosim/errors.hpp"
#include "echosim/excitation.hpp"
#include "echosim/rng.hpp"
#include "echosim/spectral_medium.hpp"

namespace echosim {

/// d(t) = a1 exp(-t / t1) + a2 exp(-t / t2), normalised so d(0) = 1, with t1 <= t2.
template <typename Scalar>
struct BasicBiExpDecay {
  Scalar a1 = Scalar(1);
  Scalar t1 = Scalar(1);
  Scalar a2 = Scalar(0);
  Scalar t2 = Scalar(1);

  Scalar operator()(Scalar t) const {
    using std::exp;
    return a1 * exp(-t / t1) + a2 * exp(-t / t2);
  }

  template <typename Derived>
  auto operator()(const Eigen::ArrayBase<Derived>& t) const {
    return a1 * (-t / t1).exp() + a2 * (-t / t2).exp();
  }

  void validate() const {
    using std::abs;
    require(a1 >= Scalar(0) && a2 >= Scalar(0), "decay weights must be >= 0");
    require(t1 > Scalar(0) && t2 > Scalar(0), "decay times must be positive");
    require(abs(a1 + a2 - Scalar(1)) <= Scalar(1e-9), "decay weights must sum to 1");
    require(t1 <= t2, "decay times must be ordered t1 <= t2");
  }

  /// Decay with no effective relaxation over any realistic window.
  static BasicBiExpDecay persistent() { return {Scalar(0.5), Scalar(1e300), Scalar(0.5), Scalar(1e300)}; }
  /// Hole decay without applied field: ~100 s fast component, few-hundred-second tail.
  static BasicBiExpDecay zero_field() { return {Scalar(0.6), Scalar(100), Scalar(0.4), Scalar(400)}; }
  /// Hole decay in ~0.01 T: ~100 s fast component, several-thousand-second tail.
  static BasicBiExpDecay in_field() { return {Scalar(0.6), Scalar(100), Scalar(0.4), Scalar(3000)}; }
};

using BiExpDecay = BasicBiExpDecay<double>;

/// Looks up "zero_field", "in_field" or "persistent".
BiExpDecay decay_preset(const std::string& name);

/// Hole areas probed after a burn at t = 0.
struct HoleDecaySamples {
  Eigen::ArrayXd probe_time;
  Eigen::ArrayXd hole_area;
  Eigen::ArrayXd noise_sigma;

  Eigen::Index size() const { return probe_time.size(); }
  /// Equal lengths, strictly increasing times starting at t >= 0.
  void validate() const;
};

/// d(t_i) + N(0, noise_sigma), clamped at zero.
HoleDecaySamples simulate_hole_decay(const BiExpDecay& decay, const Eigen::ArrayXd& probe_times, double noise_sigma,
                                     RngStream& rng);

struct BiExpFit {
  BiExpDecay decay;
  double amplitude_scale = 1.0;  ///< a1 + a2 before renormalisation
  double residual_norm = 0.0;    ///< ||y - fit|| of the un-renormalised model
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  ///< over (a1, a2, ln t1, ln t2)
  int iterations = 0;
};

/// Raised when the damped Gauss-Newton refinement runs out of iterations.
class FitError : public RuntimeError {
public:
  FitError(const std::string& what, int iterations, double residual_norm)
      : RuntimeError(what), iterations_(iterations), residual_norm_(residual_norm) {}
  int iterations() const { return iterations_; }
  double residual_norm() const { return residual_norm_; }

private:
  int iterations_;
  double residual_norm_;
};

/// Least-squares bi-exponential fit. Starts from log-linear fits to the tail and early residual
/// and from a coarse grid search over both time constants; each start is refined by
/// Levenberg-damped Gauss-Newton and the lower cost wins. Weights are renormalised to sum 1.
/// Needs >= 8 samples; flat data raises RuntimeError("no decay detected").
BiExpFit fit_biexp(const HoleDecaySamples& samples, int max_iterations = 2000);

/// Time average of d over [0, T_acc], in closed form.
double survival_mean(const BiExpDecay& decay, double accumulation_time);

/// S / survival_mean^2. Throws RuntimeError when survival_mean < 1e-12.
double compensate_signal(double echo_area, const BiExpDecay& decay, double accumulation_time);

/// Grating survival with age: d(age)^exponent. Exponent 1 assumes the grating decays like a hole.
SurvivalLaw grating_survival(const BiExpDecay& decay, double exponent = 1.0);

/// Zeroes every bin within +-scan_halfwidth of the grid centre.
SpectralGrating erase(const SpectralGrating& g, double scan_halfwidth);

/// `time_s,hole_area`
void write_decay_csv(std::ostream& os, const HoleDecaySamples& samples);
HoleDecaySamples read_decay_csv(std::istream& is, double noise_sigma = 0.0);

/// `a1=... t1_s=... a2=... t2_s=... residual=...`
std::string format_fit(const BiExpFit& fit);

} // namespace echosim

#endif // ECHOSIM_RELAXATION_HPP
