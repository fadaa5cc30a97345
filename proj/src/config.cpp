#include "echosim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "echosim/csv_io.hpp"
#include "echosim/errors.hpp"

namespace echosim {

void SweepConfig::validate() const {
  require(!n_list.empty(), "n_list must not be empty");
  for (double n : n_list) require(n > 0.0 && std::isfinite(n), "every n_list entry must be positive");
  require(energy_budget > 0.0, "energy_budget must be positive");
  require(energy_budget / *std::min_element(n_list.begin(), n_list.end()) >= 1.0,
          "energy_budget / min(n_list) must be at least 1");
  require(seeds >= 1, "seeds must be >= 1");
  require(max_pairs >= 1, "max_pairs must be >= 1");
  require(theta3 > 0.0 && theta3 <= std::numbers::pi, "theta3 must lie in (0, pi]");
  require(decay_exponent > 0.0, "decay_exponent must be positive");
  require(storage_efficiency >= 0.0 && storage_efficiency <= 1.0, "storage_efficiency must lie in [0, 1]");
  laser.validate();
  if (decay) decay->validate();
  PulseSequenceSpec probe{n_list.front(), t, tau, sigma, 1, write_gain};
  probe.validate();
}

namespace {

double to_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': not a number: '" + s + "'");
  return v;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

// Counts may be written in scientific notation (max_pairs = 1e6).
template <typename Int>
Int to_count(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    throw ValidationError("config key '" + key + "': expected an integer count");
  return static_cast<Int>(v);
}

} // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double("list", item));
  return out;
}

std::optional<BiExpDecay> parse_decay(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty() || s == "none") return std::nullopt;
  if (s.find(',') == std::string::npos) return decay_preset(s);
  const auto v = parse_number_list(s);
  require(v.size() == 4, "decay must be none, a preset, or a1,t1_s,a2,t2_s");
  BiExpDecay d{v[0], v[1], v[2], v[3]};
  d.validate();
  return d;
}

SweepConfig parse_config(std::istream& is) {
  SweepConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "n_list") cfg.n_list = parse_number_list(value);
    else if (key == "energy_budget") cfg.energy_budget = to_double(key, value);
    else if (key == "t") cfg.t = to_double(key, value);
    else if (key == "tau") cfg.tau = to_double(key, value);
    else if (key == "sigma") cfg.sigma = to_double(key, value);
    else if (key == "laser_linewidth_fwhm") cfg.laser.linewidth_fwhm = to_double(key, value);
    else if (key == "laser_lock_window_halfwidth") cfg.laser.lock_window_halfwidth = to_double(key, value);
    else if (key == "laser_drift_step_rms") cfg.laser.drift_step_rms = to_double(key, value);
    else if (key == "model") cfg.model = parse_statistics_model(value);
    else if (key == "decay") cfg.decay = parse_decay(value);
    else if (key == "decay_exponent") cfg.decay_exponent = to_double(key, value);
    else if (key == "theta3") cfg.theta3 = to_double(key, value);
    else if (key == "seeds") cfg.seeds = to_count<int>(key, value);
    else if (key == "master_seed") cfg.master_seed = to_integer<std::uint64_t>(key, value);
    else if (key == "write_gain") cfg.write_gain = to_double(key, value);
    else if (key == "storage_efficiency") cfg.storage_efficiency = to_double(key, value);
    else if (key == "max_pairs") cfg.max_pairs = to_count<std::int64_t>(key, value);
    else throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return parse_config(in);
}

} // namespace echosim
