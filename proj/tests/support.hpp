#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "faultloc/matrix.hpp"
#include "faultloc/sim.hpp"

namespace testsupport {

inline faultloc::Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  faultloc::Matrix m;
  for (const auto& r : values) m.push_row(std::vector<double>(r));
  return m;
}

inline faultloc::Matrix random_matrix(std::size_t n, std::size_t p, std::mt19937_64& rng, double lo = -1.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  faultloc::Matrix m(n, p);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) m(r, c) = u(rng);
  }
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("faultloc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Internal steps after fault inception until the terminal voltage has moved by
// `fraction` of its pre-fault value. The lumped ladder smears the wavefront
// over a few sections, so the crossing of a large fraction tracks the ideal
// travel time better than the first tiny deviation.
inline std::int64_t arrival_steps(const faultloc::sim::SimState& state, int branch, double distance_km,
                                  double fault_resistance, double fraction = 0.3) {
  faultloc::sim::Transient t(state, state.config.limiting_inductance);
  const double v0 = t.terminal_voltage();
  t.set_fault(state.fault_node(branch, distance_km), fault_resistance);
  for (std::int64_t k = 1; k < 1000000; ++k) {
    t.step();
    if (std::abs(t.terminal_voltage() - v0) > fraction * std::abs(v0)) return k;
  }
  return -1;
}

}  // namespace testsupport
