#pragma once

// Comparison models for the boosted locator: ordinary least squares, k-nearest
// neighbours, a single regression tree, and the single-ended impedance method.

#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultloc/gbt.hpp"
#include "faultloc/matrix.hpp"
#include "faultloc/sim.hpp"

namespace faultloc::baselines {

/// Terminal measurements for V_S = m Z_l I_S + R_F I_F.
struct ImpedanceInputs {
  double v_s = 0.0;          // V
  double i_s = 0.0;          // A
  double i_f = 0.0;          // A
  double r_f_assumed = 0.0;  // ohm
  double z_total = 0.0;      // ohm, whole-line impedance
  double line_length = 0.0;  // km
};

struct ImpedanceEstimate {
  double m = 0.0;            // per-unit location, unclamped
  double distance_km = 0.0;
};

ImpedanceEstimate impedance_locate(const ImpedanceInputs& in);

// Samples averaged after inception when reading V_S, I_S and I_F from records.
inline constexpr std::size_t kImpedanceSamples = 5;

/// Builds locator inputs from a simulated record. Z_l is the series resistance
/// of the longest path from the measuring terminal. With `oracle_if` the true
/// fault current is used, otherwise I_F is approximated by I_S.
ImpedanceInputs impedance_inputs(const sim::WaveformRecord& record, const sim::SimState& state,
                                 double r_f_assumed, bool oracle_if);

struct OlsModel {
  std::vector<double> weights;
  double intercept = 0.0;
  bool jittered = false;  // ridge jitter was needed
};

OlsModel ols_fit(const Matrix& x, std::span<const double> y);
std::vector<double> ols_predict(const OlsModel& model, const Matrix& x);

struct KnnModel {
  Matrix x;
  std::vector<double> y;
  int k = 5;
};

KnnModel knn_fit(const Matrix& x, std::span<const double> y, int k = 5);
double knn_predict(const KnnModel& model, std::span<const double> query);
std::vector<double> knn_predict(const KnnModel& model, const Matrix& x);

struct TreeModel {
  gbt::Tree tree;
  std::size_t n_features = 0;
};

// Defaults for the stand-alone tree (lambda is always 0).
gbt::Hyperparams default_dtree_params();

TreeModel dtree_fit(const Matrix& x, std::span<const double> y, gbt::Hyperparams params = default_dtree_params());
std::vector<double> dtree_predict(const TreeModel& model, const Matrix& x);

nlohmann::json to_json(const OlsModel& m);
nlohmann::json to_json(const KnnModel& m);
nlohmann::json to_json(const TreeModel& m);
OlsModel ols_from_json(const nlohmann::json& j);
KnnModel knn_from_json(const nlohmann::json& j);
TreeModel dtree_from_json(const nlohmann::json& j);

}  // namespace faultloc::baselines
