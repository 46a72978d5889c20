#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultloc/matrix.hpp"
#include "faultloc/sim.hpp"

namespace faultloc::data {

enum class ChannelMode { Voltage, Current, Both };

// "v", "i" or "vi".
ChannelMode parse_channel_mode(std::string_view text);
std::string_view to_string(ChannelMode mode);

inline constexpr std::size_t kDefaultWindow = 20;
inline constexpr int kDefaultFolds = 7;

struct FeatureVector {
  std::vector<double> values;
  double label = 0.0;  // distance in km for faults
  bool fault = true;
};

/// Tabular dataset: one row per waveform window. `labels` hold distances for
/// regression sets and {0, 1} (1 = fault) for classification sets.
struct FeatureMatrix {
  Matrix x;
  std::vector<double> labels;
  std::vector<int> fold_of_row;
  ChannelMode channel_mode = ChannelMode::Both;

  std::size_t rows() const { return x.rows(); }
  // Rows whose fold differs from / equals `fold`.
  std::vector<std::size_t> train_rows(int fold) const;
  std::vector<std::size_t> fold_rows(int fold) const;
  int fold_count() const;
  void validate() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// First n_window output samples at and after inception, voltage block first.
FeatureVector window_features(const sim::WaveformRecord& record, std::size_t n_window,
                              ChannelMode mode);

// Fault records only, labelled by distance. Folds are left empty.
FeatureMatrix build_regression_matrix(std::span<const sim::WaveformRecord> records,
                                      std::size_t n_window, ChannelMode mode);
// Every record, labelled 1 for faults and 0 for load steps.
FeatureMatrix build_classification_matrix(std::span<const sim::WaveformRecord> records,
                                          std::size_t n_window, ChannelMode mode);

// Relative spread below which a column is treated as constant.
inline constexpr double kConstantTolerance = 1e-12;

struct StandardScaler {
  std::vector<double> mean;
  std::vector<double> scale;  // population std, 1 where a column is constant

  std::size_t size() const { return mean.size(); }
  friend bool operator==(const StandardScaler&, const StandardScaler&) = default;
};

StandardScaler fit_scaler(const Matrix& x, std::span<const std::size_t> rows);
StandardScaler fit_scaler(const Matrix& x);
Matrix transform(const StandardScaler& scaler, const Matrix& x);

// Shuffles row indices with `seed`, then deals them round-robin into k folds.
std::vector<int> assign_folds(std::size_t n_rows, int k, std::uint64_t seed);

// CSV with header f0..fN,label,fold; numbers written in shortest round-trip form.
void save_dataset(const std::filesystem::path& path, const FeatureMatrix& matrix);
FeatureMatrix load_dataset(const std::filesystem::path& path,
                           ChannelMode mode = ChannelMode::Both);

nlohmann::json to_json(const StandardScaler& scaler);
StandardScaler scaler_from_json(const nlohmann::json& j);
void save_scaler(const std::filesystem::path& path, const StandardScaler& scaler);
StandardScaler load_scaler(const std::filesystem::path& path);

}  // namespace faultloc::data
