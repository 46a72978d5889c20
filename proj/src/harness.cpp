#include "faultloc/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "faultloc/error.hpp"

namespace faultloc::harness {

using nlohmann::json;

ModelKind parse_model_kind(std::string_view text) {
  if (text == "boosted" || text == "gbt" || text == "xgb") return ModelKind::Boosted;
  if (text == "ols") return ModelKind::Ols;
  if (text == "knn") return ModelKind::Knn;
  if (text == "dtree") return ModelKind::DTree;
  if (text == "mean") return ModelKind::Mean;
  throw Error("invalid_argument", "unknown model kind '" + std::string(text) + "'");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Boosted: return "boosted";
    case ModelKind::Ols: return "ols";
    case ModelKind::Knn: return "knn";
    case ModelKind::DTree: return "dtree";
    case ModelKind::Mean: return "mean";
  }
  return "boosted";
}

std::vector<ModelSpec> default_roster() {
  return {
      {"boosted", ModelKind::Boosted, gbt::Hyperparams{}, 5},
      {"ols", ModelKind::Ols, gbt::Hyperparams{}, 5},
      {"knn", ModelKind::Knn, gbt::Hyperparams{}, 5},
      {"dtree", ModelKind::DTree, baselines::default_dtree_params(), 5},
  };
}

// --- configuration ----------------------------------------------------------

void ExperimentConfig::validate() const {
  network.validate();
  ranges.validate();
  require(n_fault >= 0 && n_nonfault >= 0 && n_fault + n_nonfault > 0, "scenario counts must be positive");
  require(duration > 0, "duration must be positive");
  require(!channel_modes.empty(), "at least one channel mode is required");
  require(n_window >= 1, "n_window must be at least 1");
  require(folds >= 2, "at least two folds are required");
  require(!models.empty(), "model roster must not be empty");
  for (const auto& m : models) {
    require(!m.name.empty(), "every model needs a name");
    m.params.validate();
    require(m.k >= 1, "knn k must be at least 1");
  }
  for (std::size_t a = 0; a < models.size(); ++a) {
    for (std::size_t b = a + 1; b < models.size(); ++b) {
      require(models[a].name != models[b].name, "duplicate model name '" + models[a].name + "'");
    }
  }
  for (double s : noise_snr_db) require(!std::isnan(s) && s != -INFINITY, "noise levels must be finite dB or clean");
  require(jobs >= 1, "jobs must be at least 1");
  require(timing_repeats >= 1, "timing_repeats must be at least 1");
  require(curve_points >= 1 && curve_min >= 1, "learning-curve grid must be non-empty");
}

const ModelSpec& ExperimentConfig::model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  throw Error("invalid_argument", "no model named '" + std::string(name) + "' in the roster");
}

namespace {

json model_json(const ModelSpec& m) {
  json j = {{"name", m.name}, {"kind", to_string(m.kind)}};
  if (m.kind == ModelKind::Boosted || m.kind == ModelKind::DTree) j.update(gbt::to_json(m.params));
  if (m.kind == ModelKind::Knn) j["k"] = m.k;
  return j;
}

ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  m.name = j.at("name").get<std::string>();
  m.kind = parse_model_kind(j.value("kind", m.name));
  const auto defaults = m.kind == ModelKind::DTree ? baselines::default_dtree_params() : gbt::Hyperparams{};
  m.params = gbt::hyperparams_from_json(j, defaults);
  m.k = j.value("k", 5);
  return m;
}

json snr_json(double snr) { return std::isinf(snr) ? json("clean") : json(snr); }

double snr_from_json(const json& j) {
  if (j.is_null()) return sim::kNoNoise;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "clean" || s == "inf" || s == "none") return sim::kNoNoise;
    throw Error("parse", "noise level '" + s + "' is not a number or 'clean'");
  }
  return j.get<double>();
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json modes = json::array();
  for (auto m : c.channel_modes) modes.push_back(data::to_string(m));
  json models = json::array();
  for (const auto& m : c.models) models.push_back(model_json(m));
  json noise = json::array();
  for (double s : c.noise_snr_db) noise.push_back(snr_json(s));
  json j = {{"network", sim::to_json(c.network)},
            {"scenarios",
             {{"n_fault", c.n_fault},
              {"n_nonfault", c.n_nonfault},
              {"duration", c.duration},
              {"ranges", sim::to_json(c.ranges)}}},
            {"seed", c.seed},
            {"channel_modes", modes},
            {"n_window", c.n_window},
            {"folds", c.folds},
            {"models", models},
            {"noise_snr_db", noise},
            {"output_dir", c.output_dir.string()},
            {"rf_assumed", c.rf_assumed},
            {"jobs", c.jobs},
            {"timing_repeats", c.timing_repeats},
            {"learning_curve", {{"min", c.curve_min}, {"points", c.curve_points}}}};
  if (c.waveform_dir) j["waveform_dir"] = c.waveform_dir->string();
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error("parse", "experiment config must be a JSON object");
  static const char* kKnown[] = {"network", "scenarios", "seed", "channel_modes", "n_window", "folds",
                                 "models", "noise_snr_db", "output_dir", "waveform_dir", "rf_assumed",
                                 "jobs", "timing_repeats", "learning_curve"};
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(std::begin(kKnown), std::end(kKnown), [&](const char* k) { return key == k; })) {
      throw Error("parse", "unknown config field '" + key + "'");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("network")) c.network = sim::network_from_json(j.at("network"));
    if (j.contains("scenarios")) {
      const auto& s = j.at("scenarios");
      c.n_fault = s.value("n_fault", c.n_fault);
      c.n_nonfault = s.value("n_nonfault", c.n_nonfault);
      c.duration = s.value("duration", c.duration);
      if (s.contains("ranges")) c.ranges = sim::ranges_from_json(s.at("ranges"));
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("channel_modes")) {
      c.channel_modes.clear();
      for (const auto& m : j.at("channel_modes")) c.channel_modes.push_back(data::parse_channel_mode(m.get<std::string>()));
    }
    c.n_window = j.value("n_window", c.n_window);
    c.folds = j.value("folds", c.folds);
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m));
    }
    if (j.contains("noise_snr_db")) {
      c.noise_snr_db.clear();
      for (const auto& s : j.at("noise_snr_db")) c.noise_snr_db.push_back(snr_from_json(s));
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("waveform_dir") && !j.at("waveform_dir").is_null()) {
      c.waveform_dir = j.at("waveform_dir").get<std::string>();
    }
    c.rf_assumed = j.value("rf_assumed", c.rf_assumed);
    c.jobs = j.value("jobs", c.jobs);
    c.timing_repeats = j.value("timing_repeats", c.timing_repeats);
    if (j.contains("learning_curve")) {
      c.curve_min = j.at("learning_curve").value("min", c.curve_min);
      c.curve_points = j.at("learning_curve").value("points", c.curve_points);
    }
  } catch (const json::exception& e) {
    throw Error("parse", std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("parse", path.string() + ": " + e.what());
  }
  auto c = config_from_json(j);
  // Relative waveform paths resolve against the config file.
  if (c.waveform_dir && c.waveform_dir->is_relative()) c.waveform_dir = path.parent_path() / *c.waveform_dir;
  return c;
}

std::string fingerprint(const ExperimentConfig& config) {
  auto j = to_json(config);
  j.erase("output_dir");
  j.erase("waveform_dir");
  j.erase("jobs");
  const auto text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// --- models ------------------------------------------------------------------

std::vector<double> FittedModel::predict(const Matrix& x) const {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, gbt::BoostedEnsemble>) {
          return gbt::predict(m, x);
        } else if constexpr (std::is_same_v<T, baselines::OlsModel>) {
          return baselines::ols_predict(m, x);
        } else if constexpr (std::is_same_v<T, baselines::KnnModel>) {
          return baselines::knn_predict(m, x);
        } else if constexpr (std::is_same_v<T, baselines::TreeModel>) {
          return baselines::dtree_predict(m, x);
        } else {
          return std::vector<double>(x.rows(), m);
        }
      },
      model_);
}

FittedModel fit_model(const ModelSpec& spec, const Matrix& x, std::span<const double> y) {
  switch (spec.kind) {
    case ModelKind::Boosted: return FittedModel(gbt::fit(x, y, gbt::Task::Regression, spec.params));
    case ModelKind::Ols: return FittedModel(baselines::ols_fit(x, y));
    case ModelKind::Knn: return FittedModel(baselines::knn_fit(x, y, spec.k));
    case ModelKind::DTree: return FittedModel(baselines::dtree_fit(x, y, spec.params));
    case ModelKind::Mean: {
      if (y.empty()) throw Error("invalid_argument", "cannot fit a mean model on zero rows");
      return FittedModel(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()));
    }
  }
  throw Error("invalid_argument", "unknown model kind");
}

json to_json(const FittedModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, gbt::BoostedEnsemble>) {
          return gbt::to_json(m);
        } else if constexpr (std::is_same_v<T, double>) {
          return {{"kind", "mean"}, {"value", m}};
        } else {
          return baselines::to_json(m);
        }
      },
      model.get());
}

double mae(std::span<const double> yhat, std::span<const double> y) {
  if (yhat.empty() || y.empty()) throw Error("invalid_argument", "MAE of an empty set is undefined");
  require(yhat.size() == y.size(), "MAE inputs differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(yhat[i] - y[i]);
  return acc / static_cast<double>(y.size());
}

const ModelResult& ModeReport::model(std::string_view name) const {
  for (const auto& m : models) {
    if (m.model == name) return m;
  }
  throw Error("invalid_argument", "report has no model '" + std::string(name) + "'");
}

const ModeReport& EvalReport::mode(data::ChannelMode m) const {
  for (const auto& r : modes) {
    if (r.mode == m) return r;
  }
  throw Error("invalid_argument", "report has no channel mode '" + std::string(data::to_string(m)) + "'");
}

// --- k-fold --------------------------------------------------------------------

namespace {

void summarize(ModelResult& r) {
  double sum = 0.0;
  for (double v : r.fold_mae) sum += v;
  const double n = static_cast<double>(r.fold_mae.size());
  r.mean_mae = sum / n;
  double var = 0.0;
  for (double v : r.fold_mae) var += (v - r.mean_mae) * (v - r.mean_mae);
  r.fold_std = std::sqrt(var / n);
}

}  // namespace

ModeReport run_kfold(const data::FeatureMatrix& dataset, std::span<const ModelSpec> roster, int timing_repeats) {
  dataset.validate();
  require(!roster.empty(), "model roster must not be empty");
  const int k = dataset.fold_count();
  if (k < 2) throw Error("invalid_argument", "dataset needs at least two folds");
  if (dataset.rows() < static_cast<std::size_t>(k)) {
    throw Error("invalid_argument", "insufficient rows for " + std::to_string(k) + "-fold validation");
  }

  ModeReport report;
  report.mode = dataset.channel_mode;
  report.models.resize(roster.size());
  for (std::size_t m = 0; m < roster.size(); ++m) report.models[m].model = roster[m].name;

  for (int f = 0; f < k; ++f) {
    const auto train = dataset.train_rows(f);
    const auto val = dataset.fold_rows(f);
    report.n_train.push_back(train.size());
    report.n_val.push_back(val.size());
    const auto scaler = data::fit_scaler(dataset.x, train);
    const Matrix x_train = data::transform(scaler, dataset.x.select_rows(train));
    const Matrix x_val = data::transform(scaler, dataset.x.select_rows(val));
    const auto y_train = select<double>(dataset.labels, train);
    const auto y_val = select<double>(dataset.labels, val);

    for (std::size_t m = 0; m < roster.size(); ++m) {
      auto& result = report.models[m];
      if (!result.error.empty()) {
        result.fold_mae.push_back(NAN);
        continue;
      }
      try {
        std::optional<FittedModel> fitted;
        result.fit_seconds += median_seconds(timing_repeats, [&] { fitted = fit_model(roster[m], x_train, y_train); });
        result.fold_mae.push_back(mae(fitted->predict(x_val), y_val));
      } catch (const std::exception& e) {
        result.error = e.what();
        result.fold_mae.push_back(NAN);
      }
    }
  }
  for (auto& r : report.models) summarize(r);
  return report;
}

namespace {

data::FeatureMatrix folded_regression(const ExperimentConfig& config, std::span<const sim::WaveformRecord> records,
                                      data::ChannelMode mode) {
  auto matrix = data::build_regression_matrix(records, config.n_window, mode);
  if (matrix.rows() < static_cast<std::size_t>(config.folds)) {
    throw Error("invalid_argument", "only " + std::to_string(matrix.rows()) + " fault rows for " +
                                        std::to_string(config.folds) + " folds");
  }
  matrix.fold_of_row = data::assign_folds(matrix.rows(), config.folds, config.seed);
  return matrix;
}

}  // namespace

EvalReport run_kfold(const ExperimentConfig& config, std::span<const sim::WaveformRecord> records) {
  config.validate();
  EvalReport report;
  report.config_fingerprint = fingerprint(config);
  for (auto mode : config.channel_modes) {
    report.modes.push_back(run_kfold(folded_regression(config, records, mode), config.models, config.timing_repeats));
  }
  return report;
}

// --- learning curves -------------------------------------------------------------

std::vector<std::size_t> default_sample_grid(std::size_t n_max, std::size_t n_min, std::size_t points) {
  require(n_max >= 1 && points >= 1, "grid needs a positive size");
  if (n_min >= n_max || points == 1) return {n_max};
  std::vector<std::size_t> grid;
  const double ratio = static_cast<double>(n_max) / static_cast<double>(n_min);
  for (std::size_t j = 0; j < points; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(points - 1);
    auto n = static_cast<std::size_t>(std::llround(static_cast<double>(n_min) * std::pow(ratio, t)));
    n = std::min(n, n_max);
    if (grid.empty() || n > grid.back()) grid.push_back(n);
  }
  grid.back() = n_max;
  return grid;
}

LearningCurve learning_curve(const data::FeatureMatrix& dataset, const ModelSpec& model,
                             std::span<const std::size_t> grid, std::uint64_t seed, int timing_repeats) {
  dataset.validate();
  require(dataset.fold_count() >= 2, "learning curve needs a folded dataset");
  require(!grid.empty(), "sample grid must not be empty");
  auto train = dataset.train_rows(0);
  const auto val = dataset.fold_rows(0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (grid[j] > train.size()) {
      throw Error("invalid_argument", "grid size " + std::to_string(grid[j]) + " exceeds the " +
                                          std::to_string(train.size()) + " available training rows");
    }
    require(grid[j] >= 2, "grid sizes must be at least 2");
    require(j == 0 || grid[j] > grid[j - 1], "grid sizes must be strictly increasing");
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = train.size(); i > 1; --i) {
    std::swap(train[i - 1], train[static_cast<std::size_t>(rng() % i)]);
  }

  LearningCurve curve;
  curve.model = model.name;
  curve.mode = dataset.channel_mode;
  const auto y_val = select<double>(dataset.labels, val);
  double cumulative = 0.0;
  for (std::size_t n : grid) {
    const std::span<const std::size_t> rows(train.data(), n);
    const auto scaler = data::fit_scaler(dataset.x, rows);
    const Matrix x_train = data::transform(scaler, dataset.x.select_rows(rows));
    const Matrix x_val = data::transform(scaler, dataset.x.select_rows(val));
    const auto y_train = select<double>(dataset.labels, rows);
    std::optional<FittedModel> fitted;
    const double seconds = median_seconds(timing_repeats, [&] { fitted = fit_model(model, x_train, y_train); });
    cumulative += seconds;
    curve.points.push_back({n, mae(fitted->predict(x_train), y_train), mae(fitted->predict(x_val), y_val),
                            seconds, cumulative});
  }
  return curve;
}

std::vector<LearningCurve> learning_curve(const ExperimentConfig& config, std::span<const sim::WaveformRecord> records,
                                          const ModelSpec& model) {
  config.validate();
  std::vector<LearningCurve> out;
  for (auto mode : config.channel_modes) {
    const auto matrix = folded_regression(config, records, mode);
    const auto n_train = matrix.train_rows(0).size();
    const auto grid = default_sample_grid(n_train, std::min(config.curve_min, n_train), config.curve_points);
    out.push_back(learning_curve(matrix, model, grid, config.seed, config.timing_repeats));
  }
  return out;
}

// --- classification ---------------------------------------------------------------

ClassificationReport classify_events(const data::FeatureMatrix& dataset, const gbt::Hyperparams& params) {
  dataset.validate();
  const auto faults = std::count(dataset.labels.begin(), dataset.labels.end(), 1.0);
  const auto normal = std::count(dataset.labels.begin(), dataset.labels.end(), 0.0);
  if (faults == 0 || normal == 0) {
    throw Error("invalid_argument", "classification needs both fault and non-fault rows");
  }
  require(faults + normal == static_cast<long>(dataset.rows()), "classification labels must be 0 or 1");
  const int k = dataset.fold_count();
  require(k >= 2, "classification needs a folded dataset");

  ClassificationReport report;
  for (int f = 0; f < k; ++f) {
    const auto train = dataset.train_rows(f);
    const auto val = dataset.fold_rows(f);
    const auto y_train = select<double>(dataset.labels, train);
    std::size_t correct = 0;
    // A training split holding one class only predicts that class everywhere.
    const bool single = std::all_of(y_train.begin(), y_train.end(), [&](double v) { return v == y_train.front(); });
    std::vector<int> labels;
    const auto scaler = data::fit_scaler(dataset.x, train);
    if (single) {
      labels.assign(val.size(), static_cast<int>(y_train.front()));
    } else {
      const auto model = gbt::fit(data::transform(scaler, dataset.x.select_rows(train)), y_train,
                                  gbt::Task::Classification, params);
      labels = gbt::predict_labels(model, data::transform(scaler, dataset.x.select_rows(val)));
    }
    for (std::size_t j = 0; j < val.size(); ++j) {
      const bool truth = dataset.labels[val[j]] == 1.0;
      const bool guess = labels[j] == 1;
      if (truth && guess) ++report.true_pos;
      if (!truth && !guess) ++report.true_neg;
      if (!truth && guess) ++report.false_pos;
      if (truth && !guess) ++report.false_neg;
      correct += truth == guess ? 1 : 0;
    }
    report.fold_size.push_back(val.size());
    report.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(val.size()));
  }
  report.accuracy = static_cast<double>(report.true_pos + report.true_neg) / static_cast<double>(dataset.rows());
  return report;
}

ClassificationReport classify_events(const ExperimentConfig& config, std::span<const sim::WaveformRecord> records) {
  config.validate();
  auto matrix = data::build_classification_matrix(records, config.n_window, data::ChannelMode::Both);
  if (matrix.rows() < static_cast<std::size_t>(config.folds)) {
    throw Error("invalid_argument", "too few records for classification folds");
  }
  matrix.fold_of_row = data::assign_folds(matrix.rows(), config.folds, config.seed);
  gbt::Hyperparams params;
  for (const auto& m : config.models) {
    if (m.kind == ModelKind::Boosted) {
      params = m.params;
      break;
    }
  }
  return classify_events(matrix, params);
}

// --- noise sweep ---------------------------------------------------------------------

std::uint64_t noise_seed(std::uint64_t seed, int scenario_id, double snr_db) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &snr_db, sizeof bits);
  std::uint64_t z = seed ^ (static_cast<std::uint64_t>(scenario_id) * 0x9e3779b97f4a7c15ULL) ^ (bits * 0xbf58476d1ce4e5b9ULL);
  // splitmix64 finalizer
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<NoiseRow> noise_sweep(const ExperimentConfig& config, std::span<const sim::WaveformRecord> records) {
  config.validate();
  if (config.noise_snr_db.empty()) throw Error("invalid_argument", "noise level list is empty");
  std::vector<NoiseRow> rows;
  for (double snr : config.noise_snr_db) {
    std::vector<sim::WaveformRecord> noisy;
    noisy.reserve(records.size());
    for (const auto& rec : records) noisy.push_back(sim::add_noise(rec, snr, noise_seed(config.seed, rec.scenario.id, snr)));
    for (auto mode : config.channel_modes) {
      const auto report = run_kfold(folded_regression(config, noisy, mode), config.models, 1);
      for (const auto& m : report.models) rows.push_back({snr, mode, m.model, m.mean_mae, m.fold_std});
    }
  }
  return rows;
}

// --- impedance baseline ----------------------------------------------------------------

std::vector<ImpedanceRow> impedance_report(const sim::SimState& state, std::span<const sim::WaveformRecord> records,
                                           double rf_assumed) {
  std::vector<ImpedanceRow> rows;
  for (const auto& rec : records) {
    if (!rec.scenario.is_fault()) continue;
    ImpedanceRow row;
    row.scenario = rec.scenario.id;
    row.branch = rec.scenario.branch_index;
    row.true_km = rec.scenario.distance_km;
    row.fault_resistance = rec.scenario.fault_resistance;
    row.inputs = baselines::impedance_inputs(rec, state, rf_assumed, false);
    row.blind_km = baselines::impedance_locate(row.inputs).distance_km;
    if (rec.fault_current.size() == rec.size()) {
      const auto oracle = baselines::impedance_inputs(rec, state, rf_assumed, true);
      row.i_f_oracle = oracle.i_f;
      row.oracle_km = baselines::impedance_locate(oracle).distance_km;
    } else {
      row.i_f_oracle = NAN;
      row.oracle_km = NAN;
    }
    rows.push_back(row);
  }
  return rows;
}

// --- simulation batches ---------------------------------------------------------------

std::vector<sim::WaveformRecord> simulate_scenarios(const sim::SimState& state,
                                                    std::span<const sim::FaultScenario> scenarios,
                                                    double duration, int jobs) {
  std::vector<sim::WaveformRecord> out(scenarios.size());
  std::vector<std::exception_ptr> errors(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < scenarios.size();) {
      try {
        out[i] = sim::simulate(state, scenarios[i], duration);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, scenarios.size()); ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<sim::WaveformRecord> simulate_records(const ExperimentConfig& config) {
  config.validate();
  if (config.waveform_dir) return sim::read_waveform_dir(*config.waveform_dir);
  const auto state = sim::build_network(config.network);
  const auto scenarios =
      sim::generate_scenarios(config.network, config.seed, config.n_fault, config.n_nonfault, config.ranges);
  return simulate_scenarios(state, scenarios, config.duration, config.jobs);
}

}  // namespace faultloc::harness
