#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "faultloc/dataset.hpp"
#include "faultloc/error.hpp"
#include "support.hpp"

using namespace faultloc;
using namespace faultloc::data;

namespace {

sim::WaveformRecord synthetic_record(std::size_t n, double inception, bool fault = true) {
  sim::WaveformRecord r;
  r.dt_output = 1e-3;
  r.scenario.kind = fault ? sim::EventKind::Fault : sim::EventKind::LoadStep;
  r.scenario.distance_km = 123.0;
  r.scenario.inception_time = inception;
  for (std::size_t k = 0; k < n; ++k) {
    r.voltage.push_back(1000.0 + static_cast<double>(k));
    r.current.push_back(-static_cast<double>(k));
  }
  return r;
}

void check_standardized(const Matrix& z) {
  for (std::size_t c = 0; c < z.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) mean += z(r, c);
    mean /= static_cast<double>(z.rows());
    double var = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) var += (z(r, c) - mean) * (z(r, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(z.rows()));
    CHECK(std::abs(mean) < 1e-9);
    if (sd > 1e-6) CHECK(std::abs(sd - 1.0) < 1e-9);
  }
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("window starts at inception, voltage block first") {
    const auto rec = synthetic_record(40, 0.02);
    const auto v = window_features(rec, 4, ChannelMode::Voltage);
    CHECK(v.values == std::vector<double>{1020, 1021, 1022, 1023});
    CHECK(v.label == 123.0);
    const auto vi = window_features(rec, 2, ChannelMode::Both);
    CHECK(vi.values == std::vector<double>{1020, 1021, -20, -21});
    const auto i = window_features(rec, 3, ChannelMode::Current);
    CHECK(i.values == std::vector<double>{-20, -21, -22});
  }

  TEST_CASE("window past the record end is an error") {
    const auto rec = synthetic_record(25, 0.02);
    CHECK_NOTHROW(window_features(rec, 5, ChannelMode::Both));
    CHECK_THROWS_AS(window_features(rec, 6, ChannelMode::Both), Error);
    CHECK_THROWS_AS(window_features(rec, 0, ChannelMode::Both), Error);
  }

  TEST_CASE("regression matrix drops load steps, classification keeps them") {
    std::vector<sim::WaveformRecord> recs{synthetic_record(40, 0.02), synthetic_record(40, 0.02, false),
                                          synthetic_record(40, 0.02)};
    const auto reg = build_regression_matrix(recs, 5, ChannelMode::Voltage);
    CHECK(reg.rows() == 2);
    CHECK(reg.x.cols() == 5);
    const auto cls = build_classification_matrix(recs, 5, ChannelMode::Both);
    CHECK(cls.rows() == 3);
    CHECK(cls.x.cols() == 10);
    CHECK(cls.labels == std::vector<double>{1, 0, 1});
  }

  TEST_CASE("channel mode parsing") {
    CHECK(parse_channel_mode("v") == ChannelMode::Voltage);
    CHECK(parse_channel_mode("i") == ChannelMode::Current);
    CHECK(parse_channel_mode("vi") == ChannelMode::Both);
    CHECK_THROWS_AS(parse_channel_mode("x"), Error);
  }

  TEST_CASE("scaler examples") {
    const auto s = fit_scaler(testsupport::rows({{2, 1, -1}, {2, 2, 1}, {2, 3, -1}}));
    CHECK(s.mean[0] == 2.0);
    CHECK(s.scale[0] == 1.0);
    CHECK(s.mean[1] == doctest::Approx(2.0));
    CHECK(s.scale[1] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    const auto pair = fit_scaler(testsupport::rows({{-1}, {1}}));
    CHECK(pair.mean[0] == 0.0);
    CHECK(pair.scale[0] == 1.0);
  }

  TEST_CASE("transform maps the mean to 0 and mean plus scale to 1") {
    StandardScaler s{{3.0, -2.0}, {2.0, 0.5}};
    const auto z = transform(s, testsupport::rows({{3.0, -2.0}, {5.0, -1.5}}));
    CHECK(z(0, 0) == 0.0);
    CHECK(z(0, 1) == 0.0);
    CHECK(z(1, 0) == 1.0);
    CHECK(z(1, 1) == 1.0);
    CHECK_THROWS_AS(transform(s, testsupport::rows({{1.0}})), Error);
  }

  TEST_CASE("fit then transform standardizes any training split") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      auto x = testsupport::random_matrix(60, 6, rng, -1e5, 1e6);
      for (std::size_t r = 0; r < x.rows(); ++r) x(r, 3) = 42.0;  // constant column
      const auto folds = assign_folds(x.rows(), 7, static_cast<std::uint64_t>(trial));
      std::vector<std::size_t> train;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        if (folds[r] != trial % 7) train.push_back(r);
      }
      const auto z = transform(fit_scaler(x, train), x.select_rows(train));
      check_standardized(z);
      // Refitting on standardized rows gives the identity scaler.
      const auto again = fit_scaler(z);
      for (std::size_t c = 0; c < z.cols(); ++c) {
        CHECK(std::abs(again.mean[c]) < 1e-9);
        CHECK(std::abs(again.scale[c] - 1.0) < 1e-9);
      }
    }
  }

  TEST_CASE("large offsets and rounding-level spread") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(1371, 3);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      x(r, 0) = 640000.0 + 5.0 * u(rng);             // small spread on a DC level
      x(r, 1) = 640000.0 * (1.0 + 1e-15 * u(rng));   // float noise only
      x(r, 2) = 1500.0 + u(rng);
    }
    const auto s = fit_scaler(x);
    CHECK(s.scale[1] == 1.0);
    CHECK(s.scale[0] != 1.0);
    const auto z = transform(s, x);
    check_standardized(z);
  }

  TEST_CASE("scaler rejects empty input") {
    CHECK_THROWS_AS(fit_scaler(Matrix{}), Error);
    CHECK_THROWS_AS(fit_scaler(testsupport::rows({{1, 2}}), std::vector<std::size_t>{}), Error);
  }

  TEST_CASE("fold sizes follow the remainder rule") {
    auto count = [](const std::vector<int>& folds) {
      std::map<int, int> c;
      for (int f : folds) ++c[f];
      return c;
    };
    const auto even = count(assign_folds(14, 7, 1));
    CHECK(even.size() == 7);
    for (auto [f, n] : even) CHECK(n == 2);
    const auto odd = count(assign_folds(15, 7, 1));
    int threes = 0;
    for (auto [f, n] : odd) {
      CHECK((n == 2 || n == 3));
      threes += n == 3;
    }
    CHECK(threes == 1);
    CHECK(assign_folds(100, 7, 9) == assign_folds(100, 7, 9));
    CHECK(assign_folds(100, 7, 9) != assign_folds(100, 7, 10));
    CHECK_THROWS_AS(assign_folds(6, 7, 1), Error);
    CHECK_THROWS_AS(assign_folds(10, 1, 1), Error);
  }

  TEST_CASE("every row lands in exactly one fold") {
    FeatureMatrix m;
    m.x = Matrix(50, 2);
    m.labels.assign(50, 1.0);
    m.fold_of_row = assign_folds(50, 7, 3);
    std::vector<int> seen(50, 0);
    std::size_t total = 0;
    for (int f = 0; f < m.fold_count(); ++f) {
      const auto rows = m.fold_rows(f);
      total += rows.size();
      for (auto r : rows) ++seen[r];
      CHECK(rows.size() + m.train_rows(f).size() == 50);
    }
    CHECK(total == 50);
    for (int s : seen) CHECK(s == 1);
  }

  TEST_CASE("dataset CSV round trip") {
    testsupport::TempDir dir("ds");
    std::mt19937_64 rng(8);
    FeatureMatrix m;
    m.x = testsupport::random_matrix(30, 4, rng, -1e6, 1e6);
    m.x(0, 0) = 0.1 + 0.2;
    for (int r = 0; r < 30; ++r) m.labels.push_back(r * 0.1 + 1.0 / 3.0);
    m.fold_of_row = assign_folds(30, 7, 2);
    m.channel_mode = ChannelMode::Both;
    save_dataset(dir / "d.csv", m);
    CHECK(load_dataset(dir / "d.csv") == m);

    m.fold_of_row.clear();
    save_dataset(dir / "nofold.csv", m);
    CHECK(load_dataset(dir / "nofold.csv") == m);
  }

  TEST_CASE("bad dataset files are rejected with the line number") {
    testsupport::TempDir dir("bad");
    std::ofstream(dir / "ragged.csv") << "f0,f1,label,fold\n1,2,3,0\n1,2,3\n";
    try {
      load_dataset(dir / "ragged.csv");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("ragged.csv:3:") != std::string::npos);
    }
    std::ofstream(dir / "empty.csv") << "";
    CHECK_THROWS_AS(load_dataset(dir / "empty.csv"), Error);
    CHECK_THROWS_AS(load_dataset(dir / "missing.csv"), Error);
  }

  TEST_CASE("scaler JSON round trip") {
    testsupport::TempDir dir("sc");
    const StandardScaler s{{1.0 / 3.0, -7.25}, {0.1, 1.0}};
    save_scaler(dir / "s.json", s);
    CHECK(load_scaler(dir / "s.json") == s);
  }
}
