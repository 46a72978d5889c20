#include <algorithm>
#include <cmath>
#include <random>

#include "faultloc/error.hpp"
#include "faultloc/sim.hpp"

namespace faultloc::sim {

namespace {

void check_range(const Range& r, const char* name) {
  if (!(r.min <= r.max) || !std::isfinite(r.min) || !std::isfinite(r.max)) {
    throw Error("invalid_argument", std::string("empty range for ") + name);
  }
}

double draw_uniform(std::mt19937_64& rng, const Range& r) {
  if (r.min == r.max) return r.min;
  return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

double draw_log_uniform(std::mt19937_64& rng, const Range& r) {
  if (r.min == r.max) return r.min;
  const double lo = std::log(r.min);
  const double hi = std::log(r.max);
  return std::clamp(std::exp(std::uniform_real_distribution<double>(lo, hi)(rng)), r.min, r.max);
}

}  // namespace

void ScenarioRanges::validate() const {
  check_range(fault_resistance, "fault_resistance");
  check_range(limiting_inductance, "limiting_inductance");
  check_range(load_step, "load_step");
  check_range(inception_time, "inception_time");
  require(fault_resistance.min >= 0.01 && fault_resistance.max <= 200.0,
          "fault_resistance range must lie within [0.01, 200] ohm");
  require(limiting_inductance.min >= 1e-3 && limiting_inductance.max <= 200e-3,
          "limiting_inductance range must lie within [1, 200] mH");
  require(load_step.min >= 0 && load_step.max < 1.0, "load_step magnitude must lie within [0, 1)");
  require(inception_time.min > 0, "inception_time must be positive");
}

std::vector<FaultScenario> generate_scenarios(const NetworkConfig& config, std::uint64_t seed,
                                              int n_fault, int n_nonfault,
                                              const ScenarioRanges& ranges) {
  config.validate();
  ranges.validate();
  require(n_fault >= 0 && n_nonfault >= 0 && n_fault + n_nonfault > 0,
          "scenario counts must be non-negative with at least one scenario");

  const int m = config.measuring_terminal;
  double total_length = 0.0;
  for (const auto& b : config.branches) total_length += b.length_km;

  std::mt19937_64 rng(seed);
  std::vector<FaultScenario> out;
  out.reserve(static_cast<std::size_t>(n_fault + n_nonfault));

  for (int i = 0; i < n_fault; ++i) {
    FaultScenario s;
    s.id = static_cast<int>(out.size());
    s.kind = EventKind::Fault;
    // Uniform over the whole network: the measuring branch first, then the
    // two far branches beyond the junction.
    double u = 0.0;
    do {
      u = std::uniform_real_distribution<double>(0.0, total_length)(rng);
    } while (u <= 0.0);
    const double own = config.branches[m].length_km;
    if (u < own) {
      s.branch_index = m;
      s.distance_km = u;
    } else {
      double rest = u - own;
      int branch = -1;
      for (int k = 0; k < kTerminals; ++k) {
        if (k == m) continue;
        branch = k;
        if (rest < config.branches[k].length_km) break;
        rest -= config.branches[k].length_km;
      }
      s.branch_index = branch;
      s.distance_km = own + std::min(rest, config.branches[branch].length_km);
    }
    s.fault_resistance = draw_log_uniform(rng, ranges.fault_resistance);
    s.limiting_inductance = draw_uniform(rng, ranges.limiting_inductance);
    s.inception_time = draw_uniform(rng, ranges.inception_time);
    out.push_back(s);
  }

  for (int i = 0; i < n_nonfault; ++i) {
    FaultScenario s;
    s.id = static_cast<int>(out.size());
    s.kind = EventKind::LoadStep;
    const int pick = std::uniform_int_distribution<int>(0, kTerminals - 2)(rng);
    s.branch_index = pick >= m ? pick + 1 : pick;
    const double magnitude = draw_uniform(rng, ranges.load_step);
    const bool up = std::bernoulli_distribution(0.5)(rng);
    s.load_step_fraction = up ? magnitude : -magnitude;
    s.fault_resistance = 0.0;
    s.limiting_inductance = draw_uniform(rng, ranges.limiting_inductance);
    s.inception_time = draw_uniform(rng, ranges.inception_time);
    out.push_back(s);
  }
  return out;
}

WaveformRecord add_noise(const WaveformRecord& record, double snr_db, std::uint64_t seed) {
  require(!std::isnan(snr_db) && snr_db != -INFINITY, "snr_db must be finite or the no-noise sentinel");
  if (snr_db == kNoNoise) return record;

  WaveformRecord out = record;
  const double ratio = std::pow(10.0, snr_db / 10.0);
  std::mt19937_64 rng(seed);
  auto perturb = [&](std::vector<double>& signal) {
    if (signal.empty()) return;
    double power = 0.0;
    for (double x : signal) power += x * x;
    power /= static_cast<double>(signal.size());
    const double sigma = std::sqrt(power / ratio);
    if (sigma == 0.0) return;
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& x : signal) x += noise(rng);
  };
  perturb(out.voltage);
  perturb(out.current);
  return out;
}

}  // namespace faultloc::sim
