#include "echosim/relaxation.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "echosim/csv_io.hpp"

namespace echosim {

BiExpDecay decay_preset(const std::string& name) {
  if (name == "zero_field") return BiExpDecay::zero_field();
  if (name == "in_field") return BiExpDecay::in_field();
  if (name == "persistent") return BiExpDecay::persistent();
  throw ValidationError("unknown decay preset '" + name + "' (expected zero_field|in_field|persistent)");
}

void HoleDecaySamples::validate() const {
  require(hole_area.size() == probe_time.size() && noise_sigma.size() == probe_time.size(),
          "decay sample columns differ in length");
  require(size() > 0, "no decay samples");
  require(probe_time(0) >= 0.0, "first probe must come after the burn at t = 0");
  for (Eigen::Index i = 1; i < size(); ++i)
    require(probe_time(i) > probe_time(i - 1), "probe times must be strictly increasing");
  require((noise_sigma >= 0.0).all(), "noise sigma must be >= 0");
}

HoleDecaySamples simulate_hole_decay(const BiExpDecay& decay, const Eigen::ArrayXd& probe_times, double noise_sigma,
                                     RngStream& rng) {
  require(noise_sigma >= 0.0, "noise sigma must be >= 0");
  HoleDecaySamples out;
  out.probe_time = probe_times;
  out.noise_sigma = Eigen::ArrayXd::Constant(probe_times.size(), noise_sigma);
  out.hole_area = decay(probe_times);
  out.validate();
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.hole_area(i) = std::max(0.0, out.hole_area(i) + noise(rng));
  }
  return out;
}

namespace {

struct LogLinear {
  double amplitude = 0.0;
  double time_constant = 0.0;
  bool ok = false;
};

// Least-squares line through (t, ln y) over the positive samples of [begin, end).
LogLinear log_linear_fit(const Eigen::ArrayXd& t, const Eigen::ArrayXd& y, Eigen::Index begin, Eigen::Index end) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (Eigen::Index i = begin; i < end; ++i) {
    if (!(y(i) > 0.0)) continue;
    const double ly = std::log(y(i));
    st += t(i);
    sy += ly;
    stt += t(i) * t(i);
    sty += t(i) * ly;
    ++n;
  }
  LogLinear out;
  if (n < 2) return out;
  const double denom = n * stt - st * st;
  if (!(denom > 0.0)) return out;
  const double slope = (n * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / n;
  if (!(slope < 0.0)) return out;
  out.amplitude = std::exp(intercept);
  out.time_constant = -1.0 / slope;
  out.ok = std::isfinite(out.amplitude) && std::isfinite(out.time_constant);
  return out;
}

using Params = Eigen::Vector4d;  // a1, a2, ln t1, ln t2

struct Evaluation {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;
};

Evaluation evaluate(const Params& p, const Eigen::ArrayXd& t, const Eigen::ArrayXd& y, const Eigen::ArrayXd& w) {
  const double t1 = std::exp(p(2));
  const double t2 = std::exp(p(3));
  const Eigen::ArrayXd e1 = (-t / t1).exp();
  const Eigen::ArrayXd e2 = (-t / t2).exp();
  Evaluation ev;
  ev.residual = (w * (y - p(0) * e1 - p(1) * e2)).matrix();
  ev.jacobian.resize(t.size(), 4);
  ev.jacobian.col(0) = (w * e1).matrix();
  ev.jacobian.col(1) = (w * e2).matrix();
  ev.jacobian.col(2) = (w * p(0) * e1 * t / t1).matrix();
  ev.jacobian.col(3) = (w * p(1) * e2 * t / t2).matrix();
  ev.cost = 0.5 * ev.residual.squaredNorm();
  return ev;
}

struct Refined {
  Params p;
  Evaluation ev;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-damped Gauss-Newton from `p`, projected onto the feasible set after every step.
template <typename Project>
Refined refine(Params p, const Eigen::ArrayXd& t, const Eigen::ArrayXd& y, const Eigen::ArrayXd& w,
               int max_iterations, const Project& project) {
  Refined r;
  r.p = project(p);
  r.ev = evaluate(r.p, t, y, w);
  double lambda = 1e-3;
  for (; r.iterations < max_iterations; ++r.iterations) {
    const Eigen::Matrix4d jtj = r.ev.jacobian.transpose() * r.ev.jacobian;
    const Eigen::Vector4d grad = r.ev.jacobian.transpose() * r.ev.residual;
    if (r.ev.cost <= 1e-30 || grad.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, r.ev.cost)) {
      r.converged = true;
      break;
    }

    bool accepted = false;
    while (lambda < 1e20) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal().array() += lambda * (jtj.diagonal().array() + 1e-12);
      const Params step = damped.ldlt().solve(grad);
      const Params trial = project(r.p + step);
      Evaluation trial_ev = evaluate(trial, t, y, w);
      if (trial_ev.cost < r.ev.cost) {
        const double rel_cost = (r.ev.cost - trial_ev.cost) / std::max(r.ev.cost, 1e-300);
        const double rel_step = (trial - r.p).norm() / std::max(r.p.norm(), 1e-300);
        r.p = trial;
        r.ev = std::move(trial_ev);
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (rel_cost < 1e-14 || rel_step < 1e-13) r.converged = true;
        break;
      }
      lambda *= 4.0;
    }
    // No descent direction left at any damping: already at the minimum to machine precision.
    if (!accepted) r.converged = true;
    if (r.converged) break;
  }
  return r;
}

// Coarse global search over (ln t1, ln t2) on a log grid. The amplitudes are linear for fixed
// time constants, so each grid pair costs a 2x2 non-negative least-squares solve.
Params grid_start(const Eigen::ArrayXd& t, const Eigen::ArrayXd& y, const Eigen::ArrayXd& w, double ln_lo,
                  double ln_hi) {
  constexpr int kGrid = 48;
  const Eigen::ArrayXd ln_tc = Eigen::ArrayXd::LinSpaced(kGrid, ln_lo, ln_hi);
  Eigen::MatrixXd basis(t.size(), kGrid);
  for (int k = 0; k < kGrid; ++k) basis.col(k) = (w * (-t / std::exp(ln_tc(k))).exp()).matrix();
  const Eigen::VectorXd wy = (w * y).matrix();

  Params best(0.0, 0.0, ln_tc(0), ln_tc(kGrid - 1));
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](double a1, double a2, int i, int j) {
    const double cost = (wy - a1 * basis.col(i) - a2 * basis.col(j)).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = Params(a1, a2, ln_tc(i), ln_tc(j));
    }
  };
  for (int i = 0; i < kGrid; ++i) {
    const double gi = basis.col(i).squaredNorm();
    const double bi = basis.col(i).dot(wy);
    for (int j = i + 1; j < kGrid; ++j) {
      const double gj = basis.col(j).squaredNorm();
      const double bj = basis.col(j).dot(wy);
      const double gij = basis.col(i).dot(basis.col(j));
      const double det = gi * gj - gij * gij;
      if (det > 1e-12 * gi * gj) {
        const double a1 = (gj * bi - gij * bj) / det;
        const double a2 = (gi * bj - gij * bi) / det;
        if (a1 >= 0.0 && a2 >= 0.0) {
          consider(a1, a2, i, j);
          continue;
        }
      }
      if (gi > 0.0) consider(std::max(bi / gi, 0.0), 0.0, i, j);
      if (gj > 0.0) consider(0.0, std::max(bj / gj, 0.0), i, j);
    }
  }
  return best;
}

} // namespace

BiExpFit fit_biexp(const HoleDecaySamples& samples, int max_iterations) {
  samples.validate();
  require(samples.size() >= 8, "bi-exponential fit needs at least 8 samples");
  const Eigen::ArrayXd& t = samples.probe_time;
  const Eigen::ArrayXd& y = samples.hole_area;
  const Eigen::Index n = samples.size();

  // Flat data: the early and late plateaus agree within the noise.
  const Eigen::Index edge = std::min<Eigen::Index>(3, n / 3);
  const double drop = y.head(edge).mean() - y.tail(edge).mean();
  const double noise = samples.noise_sigma.mean();
  if (drop <= 3.0 * noise + 1e-12 * std::max(1.0, y.abs().maxCoeff()))
    throw RuntimeError("no decay detected: early and late hole areas agree within noise");

  const bool weighted = (samples.noise_sigma > 0.0).all();
  const Eigen::ArrayXd w = weighted ? Eigen::ArrayXd(1.0 / samples.noise_sigma) : Eigen::ArrayXd::Ones(n);

  // Slow component from the last third, fast component from the early residual.
  const double t_span = std::max(t(n - 1) - t(0), std::numeric_limits<double>::min());
  LogLinear slow = log_linear_fit(t, y, (2 * n) / 3, n);
  if (!slow.ok) slow = {std::max(y.tail(n - (2 * n) / 3).mean(), 1e-6), 100.0 * t_span, true};
  const Eigen::ArrayXd early = y - slow.amplitude * (-t / slow.time_constant).exp();
  LogLinear fast = log_linear_fit(t, early, 0, std::max<Eigen::Index>(2, n / 3));
  if (!fast.ok || fast.time_constant >= slow.time_constant)
    fast = {std::max(y(0) - slow.amplitude, 1e-3), slow.time_constant / 10.0, true};

  const Params seeded(fast.amplitude, slow.amplitude, std::log(fast.time_constant), std::log(slow.time_constant));
  const double min_dt = (n > 1) ? (t.tail(n - 1) - t.head(n - 1)).minCoeff() : 1.0;
  const double ln_lo = std::log(std::max(1e-6 * min_dt, 1e-300));
  const double ln_hi = std::log(1e6 * std::max(t(n - 1), 1.0));
  auto project = [&](Params q) {
    q(0) = std::max(q(0), 0.0);
    q(1) = std::max(q(1), 0.0);
    q(2) = std::clamp(q(2), ln_lo, ln_hi);
    q(3) = std::clamp(q(3), ln_lo, ln_hi);
    return q;
  };

  // Refine both the log-linear seed and the best grid point; keep the lower converged cost.
  const double grid_lo = std::log(std::max(0.25 * min_dt, 1e-300));
  const double grid_hi = std::log(4.0 * std::max(t(n - 1), min_dt));
  Refined r = refine(seeded, t, y, w, max_iterations, project);
  const Refined global = refine(grid_start(t, y, w, grid_lo, grid_hi), t, y, w, max_iterations, project);
  if (global.converged && (!r.converged || global.ev.cost < r.ev.cost)) r = global;
  const Params& p = r.p;
  const Evaluation& ev = r.ev;
  const int iter = r.iterations;

  const double residual_norm = weighted ? (ev.residual.array() / w.matrix().array()).matrix().norm()
                                        : ev.residual.norm();
  if (!r.converged) {
    std::ostringstream msg;
    msg << "bi-exponential fit did not converge after " << iter << " iterations (residual " << residual_norm << ")";
    throw FitError(msg.str(), iter, residual_norm);
  }

  BiExpFit fit;
  fit.iterations = iter;
  fit.residual_norm = residual_norm;
  fit.amplitude_scale = p(0) + p(1);
  if (!(fit.amplitude_scale > 0.0)) throw FitError("fit collapsed to zero amplitude", iter, residual_norm);

  double a1 = p(0), a2 = p(1), t1 = std::exp(p(2)), t2 = std::exp(p(3));
  if (t1 > t2) {
    std::swap(a1, a2);
    std::swap(t1, t2);
  }
  fit.decay = {a1 / fit.amplitude_scale, t1, a2 / fit.amplitude_scale, t2};

  const Eigen::Index dof = std::max<Eigen::Index>(n - 4, 1);
  // Reduced chi-square (weighted) or residual variance (unweighted).
  const double s2 = 2.0 * ev.cost / static_cast<double>(dof);
  const Eigen::Matrix4d jtj = ev.jacobian.transpose() * ev.jacobian;
  fit.covariance = s2 * Eigen::Matrix4d(jtj.completeOrthogonalDecomposition().pseudoInverse());
  if (p(2) > p(3)) {
    // Keep covariance in the reported (ordered) parameter order.
    Eigen::PermutationMatrix<4> swap_perm;
    swap_perm.indices() << 1, 0, 3, 2;
    fit.covariance = swap_perm * fit.covariance * swap_perm.transpose();
  }
  return fit;
}

double survival_mean(const BiExpDecay& decay, double accumulation_time) {
  require(accumulation_time > 0.0, "accumulation time must be positive");
  const double x1 = -std::expm1(-accumulation_time / decay.t1);
  const double x2 = -std::expm1(-accumulation_time / decay.t2);
  return (decay.a1 * decay.t1 * x1 + decay.a2 * decay.t2 * x2) / accumulation_time;
}

double compensate_signal(double echo_area, const BiExpDecay& decay, double accumulation_time) {
  require(echo_area >= 0.0, "echo area must be >= 0");
  const double s = survival_mean(decay, accumulation_time);
  if (s < 1e-12) throw RuntimeError("compensation ill-conditioned: survival mean below 1e-12");
  return echo_area / (s * s);
}

SurvivalLaw grating_survival(const BiExpDecay& decay, double exponent) {
  require(exponent > 0.0, "decay exponent must be positive");
  if (exponent == 1.0) return [decay](double age) { return decay(age); };
  return [decay, exponent](double age) { return std::pow(decay(age), exponent); };
}

SpectralGrating erase(const SpectralGrating& g, double scan_halfwidth) {
  require(scan_halfwidth > 0.0, "erase scan half-width must be positive");
  SpectralGrating out = g;
  const Eigen::ArrayXd offset = (g.grid.detunings() - g.grid.center_detuning).abs();
  out.deviation = (offset <= scan_halfwidth).select(0.0, g.deviation);
  return out;
}

void write_decay_csv(std::ostream& os, const HoleDecaySamples& samples) {
  os << "time_s,hole_area\n";
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    os << shortest(samples.probe_time(i)) << ',' << shortest(samples.hole_area(i)) << '\n';
}

HoleDecaySamples read_decay_csv(std::istream& is, double noise_sigma) {
  const CsvTable table = read_csv(is);
  HoleDecaySamples out;
  out.probe_time = table.column("time_s");
  out.hole_area = table.column("hole_area");
  out.noise_sigma = Eigen::ArrayXd::Constant(out.probe_time.size(), noise_sigma);
  out.validate();
  return out;
}

std::string format_fit(const BiExpFit& fit) {
  std::ostringstream os;
  os.precision(10);
  os << "a1=" << fit.decay.a1 << " t1_s=" << fit.decay.t1 << " a2=" << fit.decay.a2 << " t2_s=" << fit.decay.t2
     << " residual=" << fit.residual_norm;
  return os.str();
}

} // namespace echosim
