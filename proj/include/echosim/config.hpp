#ifndef ECHOSIM_CONFIG_HPP
#define ECHOSIM_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "echosim/excitation.hpp"
#include "echosim/relaxation.hpp"

namespace echosim {

/// Constant-energy sweep: for every N in n_list, M = round(energy_budget / N) pairs.
struct SweepConfig {
  std::vector<double> n_list;
  double energy_budget = 0.0;  ///< photons, N * M
  double t = 44e-9;            ///< pulse duration (s)
  double tau = 175e-9;         ///< intra-pair delay (s)
  double sigma = 470e-9;       ///< pair period (s)
  LaserModel laser;
  StatisticsModel model = StatisticsModel::AllPairs;
  std::optional<BiExpDecay> decay;
  double decay_exponent = 1.0;
  double theta3 = std::numbers::pi / 2.0;
  int seeds = 1;
  std::uint64_t master_seed = 0;
  double write_gain = 1e-9;
  double storage_efficiency = 1.0;
  std::int64_t max_pairs = 1'000'000;  ///< desk-scale cap on M per point

  void validate() const;
};

/// Flat `key = value` text, `#` comments. Keys:
///   n_list, energy_budget, t, tau, sigma, laser_linewidth_fwhm, laser_lock_window_halfwidth,
///   laser_drift_step_rms, model, decay, decay_exponent, theta3, seeds, master_seed,
///   write_gain, storage_efficiency, max_pairs
/// `decay` is none, a preset name, or `a1,t1_s,a2,t2_s`.
SweepConfig parse_config(std::istream& is);
SweepConfig load_config(const std::string& path);

std::vector<double> parse_number_list(const std::string& text);
/// none / preset / four comma-separated numbers.
std::optional<BiExpDecay> parse_decay(const std::string& text);

} // namespace echosim

#endif // ECHOSIM_CONFIG_HPP
