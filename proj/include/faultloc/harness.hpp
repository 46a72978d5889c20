#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultloc/baselines.hpp"
#include "faultloc/dataset.hpp"
#include "faultloc/gbt.hpp"
#include "faultloc/sim.hpp"

namespace faultloc::harness {

enum class ModelKind { Boosted, Ols, Knn, DTree, Mean };

ModelKind parse_model_kind(std::string_view text);
std::string_view to_string(ModelKind kind);

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::Boosted;
  gbt::Hyperparams params;  // boosted and dtree
  int k = 5;                // knn
};

// boosted, ols, knn, dtree with their default settings.
std::vector<ModelSpec> default_roster();

struct ExperimentConfig {
  sim::NetworkConfig network = sim::NetworkConfig::defaults();
  sim::ScenarioRanges ranges;
  int n_fault = 1400;
  int n_nonfault = 200;
  double duration = 0.1;  // s per scenario
  std::uint64_t seed = 2021;
  std::vector<data::ChannelMode> channel_modes{data::ChannelMode::Voltage, data::ChannelMode::Current};
  std::size_t n_window = data::kDefaultWindow;
  int folds = data::kDefaultFolds;
  std::vector<ModelSpec> models = default_roster();
  std::vector<double> noise_snr_db{sim::kNoNoise, 40.0, 20.0};
  std::filesystem::path output_dir = "faultloc-out";
  std::optional<std::filesystem::path> waveform_dir;  // reuse `simulate` output
  double rf_assumed = 0.0;  // impedance report
  int jobs = 1;
  int timing_repeats = 3;
  std::size_t curve_min = 50;
  std::size_t curve_points = 8;

  void validate() const;
  const ModelSpec& model(std::string_view name) const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Hex digest of the canonical JSON form; runtime-only fields (jobs, paths) excluded.
std::string fingerprint(const ExperimentConfig& config);

/// A trained model of any roster kind.
class FittedModel {
 public:
  using Variant = std::variant<gbt::BoostedEnsemble, baselines::OlsModel, baselines::KnnModel,
                               baselines::TreeModel, double>;
  explicit FittedModel(Variant model) : model_(std::move(model)) {}

  std::vector<double> predict(const Matrix& x) const;
  const Variant& get() const { return model_; }

 private:
  Variant model_;
};

FittedModel fit_model(const ModelSpec& spec, const Matrix& x, std::span<const double> y);
nlohmann::json to_json(const FittedModel& model);

double mae(std::span<const double> yhat, std::span<const double> y);

// Runs `fit` `repeats` times and returns the median wall-clock seconds.
template <typename Fn>
double median_seconds(int repeats, Fn&& fit) {
  std::vector<double> times;
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    const auto start = std::chrono::steady_clock::now();
    fit();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

struct ModelResult {
  std::string model;
  std::vector<double> fold_mae;  // km, NaN where the model failed
  double mean_mae = 0.0;
  double fold_std = 0.0;
  double fit_seconds = 0.0;  // summed over folds
  std::string error;         // empty on success
};

struct ModeReport {
  data::ChannelMode mode = data::ChannelMode::Voltage;
  std::vector<std::size_t> n_train;  // per fold
  std::vector<std::size_t> n_val;
  std::vector<ModelResult> models;

  const ModelResult& model(std::string_view name) const;
};

struct EvalReport {
  std::vector<ModeReport> modes;
  std::string config_fingerprint;

  const ModeReport& mode(data::ChannelMode m) const;
};

// K-fold CV over an already-folded regression matrix: per fold, standardize
// with statistics of the training folds, fit every model, score on the fold.
ModeReport run_kfold(const data::FeatureMatrix& dataset, std::span<const ModelSpec> roster,
                     int timing_repeats = 1);

// Simulation output -> regression matrices -> run_kfold per channel mode.
EvalReport run_kfold(const ExperimentConfig& config, std::span<const sim::WaveformRecord> records);

struct CurvePoint {
  std::size_t n_train = 0;
  double train_mae = 0.0;
  double val_mae = 0.0;
  double fit_seconds = 0.0;
  double cumulative_seconds = 0.0;
};

struct LearningCurve {
  std::string model;
  data::ChannelMode mode = data::ChannelMode::Voltage;
  std::vector<CurvePoint> points;
};

// `points` sizes spaced logarithmically from n_min to n_max, strictly increasing.
std::vector<std::size_t> default_sample_grid(std::size_t n_max, std::size_t n_min = 50,
                                             std::size_t points = 8);

// Fold 0 validates; the other folds, shuffled by `seed`, supply the first n
// training rows for each grid size.
LearningCurve learning_curve(const data::FeatureMatrix& dataset, const ModelSpec& model,
                             std::span<const std::size_t> grid, std::uint64_t seed,
                             int timing_repeats = 3);
std::vector<LearningCurve> learning_curve(const ExperimentConfig& config,
                                          std::span<const sim::WaveformRecord> records,
                                          const ModelSpec& model);

struct ClassificationReport {
  double accuracy = 0.0;
  std::size_t true_pos = 0;  // fault predicted as fault
  std::size_t true_neg = 0;
  std::size_t false_pos = 0;
  std::size_t false_neg = 0;
  std::vector<double> fold_accuracy;
  std::vector<std::size_t> fold_size;
};

ClassificationReport classify_events(const data::FeatureMatrix& dataset, const gbt::Hyperparams& params);
ClassificationReport classify_events(const ExperimentConfig& config,
                                     std::span<const sim::WaveformRecord> records);

struct NoiseRow {
  double snr_db = sim::kNoNoise;
  data::ChannelMode mode = data::ChannelMode::Voltage;
  std::string model;
  double mean_mae = 0.0;
  double fold_std = 0.0;
};

std::vector<NoiseRow> noise_sweep(const ExperimentConfig& config,
                                  std::span<const sim::WaveformRecord> records);

struct ImpedanceRow {
  int scenario = 0;
  int branch = 0;
  double true_km = 0.0;
  double fault_resistance = 0.0;
  baselines::ImpedanceInputs inputs;  // blind-mode inputs
  double i_f_oracle = 0.0;
  double oracle_km = 0.0;
  double blind_km = 0.0;
};

std::vector<ImpedanceRow> impedance_report(const sim::SimState& state,
                                           std::span<const sim::WaveformRecord> records,
                                           double rf_assumed);

// Simulates every generated scenario (or loads config.waveform_dir) in
// scenario order; independent scenarios run on up to `jobs` threads.
std::vector<sim::WaveformRecord> simulate_records(const ExperimentConfig& config);
std::vector<sim::WaveformRecord> simulate_scenarios(const sim::SimState& state,
                                                    std::span<const sim::FaultScenario> scenarios,
                                                    double duration, int jobs);

// Per-record noise seed derived from the experiment seed and scenario id.
std::uint64_t noise_seed(std::uint64_t seed, int scenario_id, double snr_db);

// --- report files ---------------------------------------------------------

void write_kfold_csv(const std::filesystem::path& path, const EvalReport& report);
void write_summary_csv(const std::filesystem::path& path, const EvalReport& report);
void write_timing_csv(const std::filesystem::path& path, const EvalReport& report);
void write_curve_csv(const std::filesystem::path& path, std::span<const LearningCurve> curves);
void write_noise_csv(const std::filesystem::path& path, std::span<const NoiseRow> rows);
void write_impedance_csv(const std::filesystem::path& path, std::span<const ImpedanceRow> rows);
void write_classify_csv(const std::filesystem::path& path, const ClassificationReport& report);

// kfold.csv and summary.csv (plus kfold_timing.csv when requested).
void emit_report(const EvalReport& report, const std::filesystem::path& dir, bool include_timing = false);
// Renders an SVG for every known CSV present in `dir`; returns the files written.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir);

}  // namespace faultloc::harness
