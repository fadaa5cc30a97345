#ifndef ECHOSIM_HARNESS_HPP
#define ECHOSIM_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "echosim/config.hpp"
#include "echosim/echo_readout.hpp"

namespace echosim {

/// One (N, replicate) Monte Carlo point.
struct RunRecord {
  double n_photons = 0.0;
  std::int64_t pairs = 0;
  double t_acc = 0.0;  ///< pairs * pair period
  double echo_area = 0.0;
  std::optional<double> echo_area_compensated;
  double survival_mean = 1.0;
  std::uint64_t seed = 0;  ///< replicate index under the master seed
};

/// Per-N means over replicates, normalised to the largest-N point.
struct SweepPoint {
  double n_photons = 0.0;
  std::int64_t pairs = 0;
  double t_acc = 0.0;
  double mean_area = 0.0;
  double se_area = 0.0;
  double normalized = 0.0;
  double normalized_se = 0.0;
  std::optional<double> mean_compensated;
  std::optional<double> normalized_compensated;
  std::optional<double> normalized_compensated_se;
};

struct SweepResult {
  std::vector<RunRecord> records;  ///< ordered by (N index, replicate)
  std::vector<SweepPoint> summary;  ///< in n_list order
  double budget_scale = 1.0;        ///< simulated / requested energy budget
  double effective_budget = 0.0;
  double pair_period = 0.0;         ///< sigma / budget_scale, so T_acc keeps its real duration
};

/// Simulation parameters shared by every point of a sweep.
struct RunSettings {
  FrequencyGrid grid;
  ReadoutSpec readout;
  EchoGate gate;
  double window = 0.0;
  double dt = 0.0;
};
RunSettings make_run_settings(const SweepConfig& cfg);

/// accumulate -> read-out -> gated echo area (-> compensation) for one point.
RunRecord run_point(const SweepConfig& cfg, const RunSettings& settings, double n_photons, std::int64_t pairs,
                    double pair_period, std::size_t point_index, std::uint64_t replicate);

/// Worker count from `requested` (> 0), else ECHOSIM_WORKERS, else hardware concurrency.
int resolve_workers(int requested);

/// Constant-energy sweep. Runs fan out over `workers` threads; results do not depend on it.
SweepResult run_sweep(const SweepConfig& cfg, int workers = 0);

/// `n_photons,m_pairs,t_acc_s,echo_area,echo_area_comp,survival_mean,seed`
void write_sweep_csv(std::ostream& os, const std::vector<RunRecord>& records);
/// `n_photons,m_pairs,t_acc_s,mean_area,se_area,normalized,normalized_se[,mean_comp,normalized_comp,normalized_comp_se]`
void write_summary_csv(std::ostream& os, const SweepResult& result);

/// Reported timing figures that the experimental parameters must reproduce.
struct ConsistencyAnchors {
  double pairs = 7.1e9;
  double sigma = 470e-9;
  double tau = 175e-9;
  double reported_duration = 3300.0;
  double reported_repetition_rate = 2.1e6;
  double tolerance = 0.02;
};

struct ConsistencyLine {
  std::string name;
  double computed = 0.0;
  double reference = 0.0;
  std::string unit;
  bool pass = false;

  double relative_error() const;
};

struct ConsistencyReport {
  std::vector<ConsistencyLine> lines;
  bool all_pass() const;
};

/// Duration M sigma vs the reported accumulation time, 1/sigma vs the reported repetition
/// rate, and the grating period 1/tau (informational).
ConsistencyReport consistency_check(const ConsistencyAnchors& anchors = {});
void write_report(std::ostream& os, const ConsistencyReport& report);

} // namespace echosim

#endif // ECHOSIM_HARNESS_HPP
