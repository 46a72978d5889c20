#include "faultloc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "faultloc/error.hpp"

namespace faultloc::baselines {

ImpedanceEstimate impedance_locate(const ImpedanceInputs& in) {
  if (in.i_s == 0.0) throw Error("invalid_argument", "terminal current I_S is zero");
  if (in.z_total == 0.0) throw Error("invalid_argument", "line impedance Z_l is zero");
  require(in.z_total > 0, "line impedance Z_l must be positive");
  ImpedanceEstimate out;
  out.m = (in.v_s - in.r_f_assumed * in.i_f) / (in.z_total * in.i_s);
  out.distance_km = out.m * in.line_length;
  return out;
}

ImpedanceInputs impedance_inputs(const sim::WaveformRecord& record, const sim::SimState& state,
                                 double r_f_assumed, bool oracle_if) {
  // The sample at the inception instant is still pre-event.
  const auto first = static_cast<std::size_t>(
      std::floor(record.scenario.inception_time / record.dt_output + 1e-9)) + 1;
  require(first + kImpedanceSamples <= record.size(), "record too short after inception");
  if (oracle_if) {
    require(record.fault_current.size() == record.size(),
            "oracle mode needs the simulated fault current, which this record lacks");
  }
  const auto mean = [&](const std::vector<double>& s) {
    double acc = 0.0;
    for (std::size_t k = first; k < first + kImpedanceSamples; ++k) acc += s[k];
    return acc / static_cast<double>(kImpedanceSamples);
  };

  // Longest path from the measuring terminal, through the junction.
  const auto& cfg = state.config;
  const int m = cfg.measuring_terminal;
  int far = -1;
  for (int b = 0; b < sim::kTerminals; ++b) {
    if (b != m && (far < 0 || state.path_length_km(b) > state.path_length_km(far))) far = b;
  }
  const auto& own = cfg.branches[m];
  const auto& other = cfg.branches[far];

  ImpedanceInputs in;
  in.v_s = mean(record.voltage);
  in.i_s = mean(record.current);
  in.i_f = oracle_if ? mean(record.fault_current) : in.i_s;
  in.r_f_assumed = r_f_assumed;
  in.z_total = own.r_per_km * own.length_km + other.r_per_km * other.length_km;
  in.line_length = own.length_km + other.length_km;
  return in;
}

// --- OLS -------------------------------------------------------------------

OlsModel ols_fit(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw Error("invalid_argument", "cannot fit OLS on an empty dataset");
  require(x.rows() == y.size(), "feature rows and targets differ in length");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto p = static_cast<Eigen::Index>(x.cols());

  // Centering removes the intercept from the normal equations, so jitter
  // never shrinks it.
  Eigen::VectorXd mean_x = Eigen::VectorXd::Zero(p);
  double mean_y = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < p; ++c) mean_x[c] += x(i, c);
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  Eigen::MatrixXd xc(n, p);
  Eigen::VectorXd yc(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < p; ++c) xc(i, c) = x(i, c) - mean_x[c];
    yc[i] = y[i] - mean_y;
  }
  Eigen::MatrixXd gram = xc.transpose() * xc;
  const Eigen::VectorXd rhs = xc.transpose() * yc;

  OlsModel model;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const bool ill = ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12;
  if (ill) {
    const double scale = std::max(gram.diagonal().mean(), 1e-300);
    gram.diagonal().array() += 1e-10 * scale;
    ldlt.compute(gram);
    model.jittered = true;
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);
  if (!w.allFinite()) throw Error("numerical", "OLS solve produced non-finite weights");

  model.weights.assign(w.data(), w.data() + p);
  model.intercept = mean_y - mean_x.dot(w);
  return model;
}

std::vector<double> ols_predict(const OlsModel& model, const Matrix& x) {
  if (x.rows() > 0) require(x.cols() == model.weights.size(), "OLS feature count mismatch");
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    out[i] = model.intercept + std::inner_product(row.begin(), row.end(), model.weights.begin(), 0.0);
  }
  return out;
}

// --- kNN -------------------------------------------------------------------

KnnModel knn_fit(const Matrix& x, std::span<const double> y, int k) {
  if (x.rows() == 0) throw Error("invalid_argument", "kNN needs a non-empty training set");
  require(x.rows() == y.size(), "feature rows and targets differ in length");
  require(k >= 1, "k must be at least 1");
  require(static_cast<std::size_t>(k) <= x.rows(), "k exceeds the training set size");
  return {x, {y.begin(), y.end()}, k};
}

double knn_predict(const KnnModel& model, std::span<const double> query) {
  if (model.x.rows() == 0) throw Error("invalid_argument", "kNN model has no training rows");
  require(query.size() == model.x.cols(), "kNN feature count mismatch");
  const std::size_t n = model.x.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = model.x.row(r);
    double d = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double diff = row[c] - query[c];
      d += diff * diff;
    }
    dist[r] = {d, r};
  }
  const auto k = static_cast<std::size_t>(model.k);
  // Pairs compare by distance, then by the lower row index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) acc += model.y[dist[j].second];
  return acc / static_cast<double>(k);
}

std::vector<double> knn_predict(const KnnModel& model, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = knn_predict(model, x.row(i));
  return out;
}

// --- single tree -------------------------------------------------------------

gbt::Hyperparams default_dtree_params() {
  gbt::Hyperparams p;
  p.n_rounds = 1;
  p.max_depth = 8;
  p.min_samples_leaf = 5;
  p.gamma = 1.0;
  p.lambda_leaf = 0.0;
  return p;
}

TreeModel dtree_fit(const Matrix& x, std::span<const double> y, gbt::Hyperparams params) {
  params.lambda_leaf = 0.0;
  return {gbt::fit_tree(x, y, params), x.cols()};
}

std::vector<double> dtree_predict(const TreeModel& model, const Matrix& x) {
  if (x.rows() > 0) require(x.cols() == model.n_features, "tree feature count mismatch");
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = model.tree.predict(x.row(i));
  return out;
}

// --- serialization -------------------------------------------------------

nlohmann::json to_json(const OlsModel& m) {
  return {{"kind", "ols"}, {"weights", m.weights}, {"intercept", m.intercept}};
}

nlohmann::json to_json(const KnnModel& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.x.rows(); ++r) {
    const auto row = m.x.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"kind", "knn"}, {"k", m.k}, {"x", rows}, {"y", m.y}};
}

nlohmann::json to_json(const TreeModel& m) {
  return {{"kind", "dtree"}, {"n_features", m.n_features}, {"tree", gbt::to_json(m.tree)}};
}

namespace {

void expect_kind(const nlohmann::json& j, const char* kind) {
  if (j.value("kind", std::string()) != kind) {
    throw Error("parse", std::string("expected a model of kind '") + kind + "'");
  }
}

}  // namespace

OlsModel ols_from_json(const nlohmann::json& j) {
  expect_kind(j, "ols");
  OlsModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  return m;
}

KnnModel knn_from_json(const nlohmann::json& j) {
  expect_kind(j, "knn");
  KnnModel m;
  m.k = j.at("k").get<int>();
  for (const auto& row : j.at("x")) m.x.push_row(row.get<std::vector<double>>());
  m.y = j.at("y").get<std::vector<double>>();
  require(m.y.size() == m.x.rows(), "kNN model rows and targets differ in length");
  return m;
}

TreeModel dtree_from_json(const nlohmann::json& j) {
  expect_kind(j, "dtree");
  return {gbt::tree_from_json(j.at("tree")), j.at("n_features").get<std::size_t>()};
}

}  // namespace faultloc::baselines
