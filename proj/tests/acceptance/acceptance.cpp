// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// Usage: acceptance [--cli <path to faultloc>] [--only <n>[,<n>...]]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "faultloc/harness.hpp"
#include "support.hpp"

using namespace faultloc;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string cli_path;

// Default experiment, simulated once and shared by the dataset-level criteria.
const harness::ExperimentConfig& default_config() {
  static const harness::ExperimentConfig cfg;
  return cfg;
}

double simulation_seconds = 0.0;

const std::vector<sim::WaveformRecord>& default_records() {
  static const auto recs = [] {
    const auto t0 = Clock::now();
    auto r = harness::simulate_records(default_config());
    simulation_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
  }();
  return recs;
}

// 1
Outcome gradients() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> reg(-10, 10), score(-5, 5);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> y(1000), yhat(1000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = reg(rng);
    yhat[i] = reg(rng);
  }
  const double dev_reg = gbt::gradient_check(gbt::Task::Regression, y, yhat, 1e-5);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = coin(rng) ? 1.0 : 0.0;
    yhat[i] = score(rng);
  }
  const double dev_cls = gbt::gradient_check(gbt::Task::Classification, y, yhat, 1e-5);
  return {dev_reg < 1e-5 && dev_cls < 1e-5, fmt("max deviation squared=%.2e logistic=%.2e", dev_reg, dev_cls)};
}

// 2
Outcome monotonicity() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  int fits = 0, violations = 0;
  for (int d = 0; d < 100; ++d) {
    const auto x = testsupport::random_matrix(200, 5, rng);
    std::vector<double> y(200);
    for (std::size_t r = 0; r < 200; ++r) {
      y[r] = 3 * x(r, 0) - 2 * x(r, 1) * x(r, 2) + std::sin(4 * x(r, 3)) + 0.3 * n01(rng);
    }
    for (double gamma : {0.1, 0.5, 1.0}) {
      for (double lambda : {0.0, 1.0}) {
        gbt::Hyperparams p;
        p.gamma = gamma;
        p.lambda_leaf = lambda;
        const auto m = gbt::fit(x, y, gbt::Task::Regression, p);
        ++fits;
        for (std::size_t k = 1; k < m.train_loss.size(); ++k) {
          if (m.train_loss[k] > m.train_loss[k - 1]) ++violations;
        }
      }
    }
  }
  return {violations == 0, fmt("%d fits, %d increasing rounds", fits, violations)};
}

// 3
harness::EvalReport eval_report;

Outcome ranking() {
  const auto& recs = default_records();
  eval_report = harness::run_kfold(default_config(), recs);
  bool ok = true;
  std::string detail = fmt("simulation %.0fs;", simulation_seconds);
  for (const auto& mode : eval_report.modes) {
    const double boosted = mode.model("boosted").mean_mae;
    detail += fmt(" %s: boosted %.1f", std::string(data::to_string(mode.mode)).c_str(), boosted);
    for (const char* other : {"ols", "knn", "dtree"}) {
      const double v = mode.model(other).mean_mae;
      detail += fmt(" %s %.1f", other, v);
      ok = ok && boosted < v;
    }
    detail += " km;";
  }
  return {ok, detail};
}

// 4 and 5
std::vector<harness::LearningCurve> curves;

Outcome learning_curves() {
  const auto& cfg = default_config();
  curves = harness::learning_curve(cfg, default_records(), cfg.model("boosted"));
  bool ok = true;
  std::string detail;
  for (const auto& c : curves) {
    const auto& first = c.points.front();
    const auto& last = c.points.back();
    bool train_ok = true;
    for (const auto& p : c.points) train_ok = train_ok && p.train_mae <= 1.10 * p.val_mae;
    const bool drop_ok = last.val_mae < 0.5 * first.val_mae;
    ok = ok && train_ok && drop_ok;
    detail += fmt("%s: val %.1f km at n=%zu -> %.1f km at n=%zu (ratio %.2f), train<=1.1*val %s; ",
                  std::string(data::to_string(c.mode)).c_str(), first.val_mae, first.n_train, last.val_mae,
                  last.n_train, last.val_mae / first.val_mae, train_ok ? "yes" : "no");
  }
  return {ok, detail};
}

Outcome timing() {
  bool ok = !curves.empty();
  double worst = 0.0;
  std::string detail;
  for (const auto& c : curves) {
    for (std::size_t j = 1; j < c.points.size(); ++j) {
      const auto& a = c.points[j - 1];
      const auto& b = c.points[j];
      ok = ok && a.fit_seconds > 0 && b.fit_seconds > 0;
      // Grid steps are not exact doublings: allow 2.5 per doubling of n.
      const double doublings = std::log2(static_cast<double>(b.n_train) / static_cast<double>(a.n_train));
      const double bound = std::pow(2.5, doublings);
      const double ratio = b.fit_seconds / a.fit_seconds;
      worst = std::max(worst, ratio / bound);
      ok = ok && ratio <= bound;
    }
    const auto& first = c.points.front();
    const auto& last = c.points.back();
    const double per_doubling = std::pow(last.fit_seconds / first.fit_seconds,
                                         1.0 / std::log2(static_cast<double>(last.n_train) / first.n_train));
    detail += fmt("%s: %.3fs at n=%zu -> %.3fs at n=%zu (x%.2f per doubling); ",
                  std::string(data::to_string(c.mode)).c_str(), first.fit_seconds, first.n_train, last.fit_seconds,
                  last.n_train, per_doubling);
  }
  detail += fmt("worst ratio/bound %.2f", worst);
  return {ok, detail};
}

// 6
Outcome impedance() {
  const double z = 0.03206 * 1000.0, len = 1000.0, i_s = 2400.0, i_f = 2100.0, rf = 20.0;
  double worst_exact = 0.0, worst_bias = 0.0;
  for (double m : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double v_s = m * z * i_s + rf * i_f;
    const auto exact = baselines::impedance_locate({v_s, i_s, i_f, rf, z, len});
    worst_exact = std::max(worst_exact, std::abs(exact.distance_km - m * len) / (m * len));
    for (double delta : {-15.0, -5.0, 1.0, 10.0, 50.0}) {
      const auto e = baselines::impedance_locate({v_s, i_s, i_f, rf - delta, z, len});
      const double expected = delta * i_f / (z * i_s) * len;
      worst_bias = std::max(worst_bias, std::abs((e.distance_km - m * len) - expected) / std::abs(expected));
    }
  }
  return {worst_exact < 1e-9 && worst_bias < 1e-9,
          fmt("max relative error exact %.1e, bias %.1e over 5x5 grid", worst_exact, worst_bias)};
}

// 7
Outcome physics() {
  const auto cfg = sim::NetworkConfig::defaults();
  const auto state = sim::build_network(cfg);

  sim::FaultScenario quiet;
  quiet.kind = sim::EventKind::LoadStep;
  quiet.branch_index = 1;
  quiet.load_step_fraction = 0.0;
  const auto rec = sim::simulate(state, quiet, 0.2);
  double drift = 0.0;
  for (double v : rec.voltage) drift = std::max(drift, std::abs(v - rec.voltage[0]) / rec.voltage[0]);

  sim::Transient t(state, 0.1);
  t.set_fault(state.fault_node(0, 180.0), 2.0);
  t.set_sources_enabled(false);
  double prev = t.stored_energy();
  double worst_growth = -INFINITY;
  for (int k = 0; k < 12500; ++k) {
    t.step();
    const double e = t.stored_energy();
    worst_growth = std::max(worst_growth, (e - prev) / prev);
    prev = e;
  }

  const double tau = cfg.branches[0].delay_per_km();
  const auto s1 = testsupport::arrival_steps(state, 0, 80.0, 1.0);
  const auto s2 = testsupport::arrival_steps(state, 0, 380.0, 1.0);
  const auto s3 = testsupport::arrival_steps(state, 1, 600.0, 1.0);
  const double slope12 = static_cast<double>(s2 - s1) * state.dt_internal / 300.0;
  const double slope13 = static_cast<double>(s3 - s1) * state.dt_internal / 520.0;
  const double err = std::max(std::abs(slope12 / tau - 1.0), std::abs(slope13 / tau - 1.0));

  const bool ok = drift < 0.01 && worst_growth <= 1e-6 && s1 < s2 && s2 < s3 && err <= 0.10;
  return {ok, fmt("steady drift %.2e, max energy growth/step %.1e, arrival slope error %.1f%%", drift, worst_growth,
                  100.0 * err)};
}

// 8
Outcome standardization() {
  const auto& cfg = default_config();
  double worst_mean = 0.0, worst_std = 0.0;
  int splits = 0, constant = 0;
  for (auto mode : {data::ChannelMode::Voltage, data::ChannelMode::Current, data::ChannelMode::Both}) {
    auto m = data::build_regression_matrix(default_records(), cfg.n_window, mode);
    m.fold_of_row = data::assign_folds(m.rows(), cfg.folds, cfg.seed);
    for (int f = 0; f < cfg.folds; ++f) {
      const auto train = m.train_rows(f);
      const auto scaler = data::fit_scaler(m.x, train);
      const auto z = data::transform(scaler, m.x.select_rows(train));
      ++splits;
      for (std::size_t c = 0; c < z.cols(); ++c) {
        constant += scaler.scale[c] == 1.0;
        double mean = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) mean += z(r, c);
        mean /= static_cast<double>(z.rows());
        double var = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) var += (z(r, c) - mean) * (z(r, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(z.rows()));
        worst_mean = std::max(worst_mean, std::abs(mean));
        if (scaler.scale[c] != 1.0) worst_std = std::max(worst_std, std::abs(sd - 1.0));
      }
    }
  }
  return {worst_mean < 1e-9 && worst_std < 1e-9, fmt("%d splits, max |mean| %.1e, max |std-1| %.1e, %d constant columns",
                                                     splits, worst_mean, worst_std, constant)};
}

// 9
Outcome classification() {
  const auto rep = harness::classify_events(default_config(), default_records());
  return {rep.accuracy >= 0.9, fmt("accuracy %.4f (tp %zu tn %zu fp %zu fn %zu)", rep.accuracy, rep.true_pos,
                                   rep.true_neg, rep.false_pos, rep.false_neg)};
}

// 10
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  if (cli_path.empty()) return {false, "no --cli path given"};
  testsupport::TempDir dir("determinism");
  {
    auto j = harness::to_json(default_config());
    std::ofstream(dir / "config.json") << j.dump(2);
  }
  for (const char* run : {"a", "b"}) {
    const auto cmd = "\"" + cli_path + "\" evaluate --config \"" + (dir / "config.json").string() + "\" --out \"" +
                     (dir / run).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "evaluate run failed: " + cmd};
  }
  bool ok = true;
  std::string detail;
  for (const char* file : {"kfold.csv", "summary.csv"}) {
    const auto a = slurp(dir / "a" / file);
    const auto b = slurp(dir / "b" / file);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += fmt("%s %s (%zu bytes); ", file, same ? "identical" : "DIFFERS", a.size());
  }
  return {ok, detail + "two CLI evaluate runs"};
}

// 11
Outcome noise() {
  auto cfg = default_config();
  cfg.noise_snr_db = {sim::kNoNoise, 40.0, 20.0};
  const auto rows = harness::noise_sweep(cfg, default_records());
  bool ok = true;
  std::string detail;
  for (auto mode : cfg.channel_modes) {
    double clean = NAN, db40 = NAN, db20 = NAN;
    for (const auto& r : rows) {
      if (r.mode != mode || r.model != "boosted") continue;
      if (std::isinf(r.snr_db)) clean = r.mean_mae;
      if (r.snr_db == 40.0) db40 = r.mean_mae;
      if (r.snr_db == 20.0) db20 = r.mean_mae;
    }
    ok = ok && db40 >= 0.95 * clean && db20 >= 0.95 * db40;
    detail += fmt("%s boosted: clean %.1f, 40 dB %.1f, 20 dB %.1f km; ", std::string(data::to_string(mode)).c_str(),
                  clean, db40, db20);
  }
  return {ok, detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--cli" && a + 1 < argc) {
      cli_path = argv[++a];
    } else if (arg == "--only" && a + 1 < argc) {
      std::stringstream ss(argv[++a]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--cli <faultloc>] [--only 1,2,...]\n";
      return 2;
    }
  }

  // Criterion 3 includes the shared simulation in its budget; 10 is bounded by
  // twice criterion 3's budget.
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", 1.0, gradients},
      {2, "boosting monotonicity", 30.0, monotonicity},
      {3, "model ranking", 300.0, [] {
         default_records();
         return ranking();
       }},
      {4, "learning curve", 180.0, learning_curves},
      {5, "timing scalability", INFINITY, timing},
      {6, "impedance exactness and bias", 1.0, impedance},
      {7, "simulator physics", 30.0, physics},
      {8, "standardization", 1.0, standardization},
      {9, "classification", 120.0, classification},
      {10, "determinism", 600.0, determinism},
      {11, "noise sensitivity", 600.0, noise},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    // Data shared by later criteria is built outside their timers.
    if (c.id == 4 || c.id == 8 || c.id == 9 || c.id == 11) default_records();
    if (c.id == 5 && curves.empty()) learning_curves();
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = out.pass && in_budget;
    failed += pass ? 0 : 1;
    std::printf("%s [%2d] %s: %s (%.2fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs,
                in_budget ? "" : fmt(" over %.0fs budget", c.budget_seconds).c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
