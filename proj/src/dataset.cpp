#include "faultloc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "faultloc/error.hpp"
#include "faultloc/numfmt.hpp"

namespace faultloc::data {

ChannelMode parse_channel_mode(std::string_view text) {
  if (text == "v" || text == "voltage") return ChannelMode::Voltage;
  if (text == "i" || text == "current") return ChannelMode::Current;
  if (text == "vi" || text == "both") return ChannelMode::Both;
  throw Error("invalid_argument", "unknown channel mode '" + std::string(text) + "' (use v, i or vi)");
}

std::string_view to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::Voltage: return "v";
    case ChannelMode::Current: return "i";
    case ChannelMode::Both: return "vi";
  }
  return "vi";
}

std::vector<std::size_t> FeatureMatrix::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r) {
    if (fold_of_row[r] != fold) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> FeatureMatrix::fold_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < fold_of_row.size(); ++r) {
    if (fold_of_row[r] == fold) out.push_back(r);
  }
  return out;
}

int FeatureMatrix::fold_count() const {
  if (fold_of_row.empty()) return 0;
  return *std::max_element(fold_of_row.begin(), fold_of_row.end()) + 1;
}

void FeatureMatrix::validate() const {
  require(labels.size() == x.rows(), "label count does not match row count");
  if (fold_of_row.empty()) return;
  require(fold_of_row.size() == x.rows(), "fold count does not match row count");
  const int k = fold_count();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int f : fold_of_row) {
    require(f >= 0, "fold indices must be non-negative");
    ++sizes[static_cast<std::size_t>(f)];
  }
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  require(*hi - *lo <= 1, "fold sizes must differ by at most one");
}

FeatureVector window_features(const sim::WaveformRecord& record, std::size_t n_window,
                              ChannelMode mode) {
  require(n_window >= 1, "window must hold at least one sample");
  const std::size_t start = record.inception_index();
  if (start + n_window > record.size()) {
    throw Error("invalid_argument", "record has " + std::to_string(record.size()) +
                                        " samples; window of " + std::to_string(n_window) +
                                        " after sample " + std::to_string(start) + " does not fit");
  }
  FeatureVector fv;
  fv.fault = record.scenario.is_fault();
  fv.label = fv.fault ? record.scenario.distance_km : 0.0;
  const auto take = [&](const std::vector<double>& s) {
    fv.values.insert(fv.values.end(), s.begin() + static_cast<std::ptrdiff_t>(start),
                     s.begin() + static_cast<std::ptrdiff_t>(start + n_window));
  };
  if (mode != ChannelMode::Current) take(record.voltage);
  if (mode != ChannelMode::Voltage) take(record.current);
  return fv;
}

FeatureMatrix build_regression_matrix(std::span<const sim::WaveformRecord> records,
                                      std::size_t n_window, ChannelMode mode) {
  FeatureMatrix m;
  m.channel_mode = mode;
  for (const auto& rec : records) {
    if (!rec.scenario.is_fault()) continue;
    auto fv = window_features(rec, n_window, mode);
    m.x.push_row(fv.values);
    m.labels.push_back(fv.label);
  }
  return m;
}

FeatureMatrix build_classification_matrix(std::span<const sim::WaveformRecord> records,
                                          std::size_t n_window, ChannelMode mode) {
  FeatureMatrix m;
  m.channel_mode = mode;
  for (const auto& rec : records) {
    auto fv = window_features(rec, n_window, mode);
    m.x.push_row(fv.values);
    m.labels.push_back(fv.fault ? 1.0 : 0.0);
  }
  return m;
}

StandardScaler fit_scaler(const Matrix& x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error("invalid_argument", "cannot fit a scaler on zero rows");
  require(rows.size() >= 2, "fitting a scaler needs at least two rows");
  const std::size_t cols = x.cols();
  const double n = static_cast<double>(rows.size());
  StandardScaler s;
  s.mean.assign(cols, 0.0);
  s.scale.assign(cols, 0.0);
  for (auto r : rows) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < cols; ++c) s.mean[c] += row[c];
  }
  for (auto& u : s.mean) u /= n;
  // Second pass removes the rounding left in the mean of large-offset columns.
  std::vector<double> resid(cols, 0.0);
  for (auto r : rows) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < cols; ++c) resid[c] += row[c] - s.mean[c];
  }
  for (std::size_t c = 0; c < cols; ++c) s.mean[c] += resid[c] / n;
  for (auto r : rows) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = row[c] - s.mean[c];
      s.scale[c] += d * d;
    }
  }
  // Spread at rounding level (e.g. a pre-arrival sample sitting at the DC
  // level in every record) counts as constant.
  for (std::size_t c = 0; c < cols; ++c) {
    auto& v = s.scale[c];
    v = std::sqrt(v / n);
    if (v <= kConstantTolerance * std::abs(s.mean[c])) v = 1.0;
  }
  return s;
}

StandardScaler fit_scaler(const Matrix& x) {
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_scaler(x, all);
}

Matrix transform(const StandardScaler& scaler, const Matrix& x) {
  require(scaler.size() == x.cols(), "scaler has " + std::to_string(scaler.size()) +
                                         " columns but data has " + std::to_string(x.cols()));
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - scaler.mean[c]) / scaler.scale[c];
  }
  return out;
}

std::vector<int> assign_folds(std::size_t n_rows, int k, std::uint64_t seed) {
  require(k >= 2, "fold count must be at least 2");
  if (n_rows < static_cast<std::size_t>(k)) {
    throw Error("invalid_argument", "need at least " + std::to_string(k) + " rows for " +
                                        std::to_string(k) + " folds, got " + std::to_string(n_rows));
  }
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n_rows; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<int> fold(n_rows);
  for (std::size_t j = 0; j < n_rows; ++j) fold[perm[j]] = static_cast<int>(j % static_cast<std::size_t>(k));
  return fold;
}

void save_dataset(const std::filesystem::path& path, const FeatureMatrix& m) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < m.x.cols(); ++c) out << 'f' << c << ',';
  out << "label,fold\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (double v : m.x.row(r)) out << format_double(v) << ',';
    out << format_double(m.labels[r]) << ',' << (m.fold_of_row.empty() ? -1 : m.fold_of_row[r]) << '\n';
  }
  if (!out) throw Error("io", "write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  for (std::size_t pos; (pos = line.find(',')) != std::string_view::npos;) {
    fields.push_back(line.substr(0, pos));
    line.remove_prefix(pos + 1);
  }
  fields.push_back(line);
  return fields;
}

}  // namespace

FeatureMatrix load_dataset(const std::filesystem::path& path, ChannelMode mode) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  const auto where = [&](std::size_t line_no) { return path.string() + ":" + std::to_string(line_no) + ": "; };

  std::string line;
  if (!std::getline(in, line)) throw Error("parse", path.string() + ": empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "fold") {
    throw Error("parse", where(1) + "header must be f0..fN,label,fold");
  }
  const std::size_t n_features = header.size() - 2;
  for (std::size_t c = 0; c < n_features; ++c) {
    if (header[c] != "f" + std::to_string(c)) throw Error("parse", where(1) + "expected column f" + std::to_string(c));
  }

  FeatureMatrix m;
  m.channel_mode = mode;
  bool any_fold = false;
  bool no_fold = false;
  std::vector<double> row(n_features);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw Error("parse", where(line_no) + "expected " + std::to_string(header.size()) +
                               " columns, found " + std::to_string(fields.size()));
    }
    try {
      for (std::size_t c = 0; c < n_features; ++c) row[c] = parse_double(fields[c]);
      m.labels.push_back(parse_double(fields[n_features]));
      const double fold = parse_double(fields[n_features + 1]);
      if (fold != std::floor(fold) || fold < -1) throw Error("parse", "fold must be an integer");
      if (fold < 0) {
        no_fold = true;
      } else {
        any_fold = true;
      }
      m.fold_of_row.push_back(static_cast<int>(fold));
    } catch (const Error& e) {
      throw Error("parse", where(line_no) + e.what());
    }
    m.x.push_row(row);
  }
  if (m.rows() == 0) throw Error("parse", path.string() + ": dataset has no rows");
  if (any_fold && no_fold) throw Error("parse", path.string() + ": some rows lack a fold");
  if (no_fold) m.fold_of_row.clear();
  m.validate();
  return m;
}

nlohmann::json to_json(const StandardScaler& s) { return {{"u", s.mean}, {"s", s.scale}}; }

StandardScaler scaler_from_json(const nlohmann::json& j) {
  StandardScaler s;
  s.mean = j.at("u").get<std::vector<double>>();
  s.scale = j.at("s").get<std::vector<double>>();
  require(s.mean.size() == s.scale.size(), "scaler u and s lengths differ");
  for (double v : s.scale) require(v > 0, "scaler standard deviations must be positive");
  return s;
}

void save_scaler(const std::filesystem::path& path, const StandardScaler& scaler) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  out << to_json(scaler).dump(2) << '\n';
}

StandardScaler load_scaler(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  try {
    return scaler_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", path.string() + ": " + e.what());
  }
}

}  // namespace faultloc::data
