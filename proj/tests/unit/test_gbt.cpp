#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "faultloc/error.hpp"
#include "faultloc/gbt.hpp"
#include "support.hpp"

using namespace faultloc;
using namespace faultloc::gbt;
using testsupport::rows;

namespace {

Hyperparams params(int rounds, int depth, int min_leaf, double gamma, double lambda) {
  Hyperparams p;
  p.n_rounds = rounds;
  p.max_depth = depth;
  p.min_samples_leaf = min_leaf;
  p.gamma = gamma;
  p.lambda_leaf = lambda;
  return p;
}

// Best root split by brute force: score = GL^2/(nL+l) + GR^2/(nR+l).
struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -INFINITY;
};

Split brute_force_split(const Matrix& x, const std::vector<double>& g, double lambda, int min_leaf) {
  Split best;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> values;
    for (std::size_t r = 0; r < x.rows(); ++r) values.push_back(x(r, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double thr = 0.5 * (values[k] + values[k + 1]);
      double gl = 0, gr = 0;
      int nl = 0, nr = 0;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        if (x(r, f) <= thr) {
          gl += g[r];
          ++nl;
        } else {
          gr += g[r];
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      const double score = gl * gl / (nl + lambda) + gr * gr / (nr + lambda);
      if (best.feature < 0 || score > best.score + 1e-9 * std::abs(best.score)) best = {static_cast<int>(f), thr, score};
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("gbt.loss") {
  TEST_CASE("squared loss examples") {
    CHECK(squared_loss(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
    CHECK(squared_loss(std::vector<double>{1, 2}, std::vector<double>{0, 0}) == 5.0);
    CHECK(squared_loss(std::vector<double>{3}, std::vector<double>{1}) == 4.0);
  }

  TEST_CASE("logistic loss examples") {
    CHECK(logistic_loss(std::vector<double>{1}, std::vector<double>{0}) == doctest::Approx(std::log(2.0)));
    CHECK(logistic_loss(std::vector<double>{0}, std::vector<double>{0}) == doctest::Approx(std::log(2.0)));
    CHECK(logistic_loss(std::vector<double>{1}, std::vector<double>{2}) ==
          doctest::Approx(std::log1p(std::exp(-2.0))).epsilon(1e-14));
    CHECK(logistic_loss(std::vector<double>{1}, std::vector<double>{2}) == doctest::Approx(0.126928).epsilon(1e-6));
    // Large scores neither overflow nor lose the tail.
    CHECK(std::isfinite(logistic_loss(std::vector<double>{0}, std::vector<double>{800})));
    CHECK(logistic_loss(std::vector<double>{0}, std::vector<double>{800}) == doctest::Approx(800.0));
    CHECK(logistic_loss(std::vector<double>{1}, std::vector<double>{800}) >= 0.0);
  }

  TEST_CASE("gradient examples") {
    CHECK(loss_gradient(Task::Regression, std::vector<double>{2, 5}, std::vector<double>{2, 5}) ==
          std::vector<double>{0, 0});
    CHECK(loss_gradient(Task::Regression, std::vector<double>{3}, std::vector<double>{1}) == std::vector<double>{-4});
    CHECK(loss_gradient(Task::Classification, std::vector<double>{1}, std::vector<double>{0}) ==
          std::vector<double>{-0.5});
    CHECK(sigmoid(0.0) == 0.5);
  }

  TEST_CASE("analytic gradients match finite differences of the total loss") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> reg(-10, 10), score(-5, 5);
    std::bernoulli_distribution coin(0.5);
    const double eps = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
      for (Task task : {Task::Regression, Task::Classification}) {
        std::vector<double> y(20), yhat(20);
        for (std::size_t i = 0; i < y.size(); ++i) {
          y[i] = task == Task::Regression ? reg(rng) : (coin(rng) ? 1.0 : 0.0);
          yhat[i] = task == Task::Regression ? reg(rng) : score(rng);
        }
        const auto g = loss_gradient(task, y, yhat);
        for (std::size_t i = 0; i < y.size(); ++i) {
          auto up = yhat, down = yhat;
          up[i] += eps;
          down[i] -= eps;
          const double fd = (loss(task, y, up) - loss(task, y, down)) / (2 * eps);
          // Differencing a sum of 20 terms loses a few digits to cancellation.
          CHECK(std::abs(fd - g[i]) < 1e-4 * std::max(1.0, std::abs(g[i])));
        }
        CHECK(gradient_check(task, y, yhat, eps) < 1e-5);
      }
    }
  }

  TEST_CASE("gradient check edge cases") {
    CHECK(gradient_check(Task::Regression, std::vector<double>{}, std::vector<double>{}, 1e-5) == 0.0);
    CHECK_THROWS_AS(loss_gradient(Task::Regression, std::vector<double>{1, 2}, std::vector<double>{1}), Error);
    CHECK_THROWS_AS(loss(Task::Classification, std::vector<double>{0.5}, std::vector<double>{0}), Error);
  }
}

TEST_SUITE("gbt.tree") {
  TEST_CASE("constant targets give a single shrunk leaf") {
    const auto x = rows({{0}, {1}, {2}, {3}, {4}});
    const std::vector<double> g(5, 2.0);
    const auto t = fit_tree(x, g, params(1, 3, 1, 1.0, 1.0));
    REQUIRE(t.nodes().size() == 1);
    CHECK(t.nodes()[0].value == doctest::Approx(10.0 / 6.0).epsilon(1e-15));
  }

  TEST_CASE("depth-1 split on the hand example") {
    const auto x = rows({{0}, {1}, {2}, {3}});
    const auto t = fit_tree(x, std::vector<double>{-1, -1, 1, 1}, params(1, 1, 1, 1.0, 0.0));
    REQUIRE(t.nodes().size() == 3);
    const auto& root = t.nodes()[0];
    CHECK(root.feature == 0);
    CHECK(root.threshold > 1.0);
    CHECK(root.threshold < 2.0);
    CHECK(t.nodes()[root.left].value == -1.0);
    CHECK(t.nodes()[root.right].value == 1.0);
    CHECK(t.depth() == 1);
    CHECK(t.leaf_count() == 2);
  }

  TEST_CASE("min_samples_leaf equal to n forces a leaf") {
    const auto x = rows({{0}, {1}, {2}, {3}});
    const auto t = fit_tree(x, std::vector<double>{-1, -1, 1, 1}, params(1, 4, 4, 1.0, 0.0));
    CHECK(t.nodes().size() == 1);
    CHECK(t.nodes()[0].value == 0.0);
  }

  TEST_CASE("root split matches brute-force enumeration") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 40; ++trial) {
      const auto x = testsupport::random_matrix(30, 4, rng);
      std::vector<double> g(30);
      for (auto& v : g) v = n01(rng);
      const double lambda = trial % 2 ? 1.0 : 0.0;
      const int min_leaf = 1 + trial % 4;
      const auto t = fit_tree(x, g, params(1, 1, min_leaf, 1.0, lambda));
      const auto best = brute_force_split(x, g, lambda, min_leaf);
      REQUIRE(t.nodes().size() == 3);
      CHECK(t.nodes()[0].feature == best.feature);
      CHECK(t.nodes()[0].threshold == doctest::Approx(best.threshold));
    }
  }

  TEST_CASE("ties go to the lowest feature") {
    // Both columns separate the targets identically.
    const auto x = rows({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
    const auto t = fit_tree(x, std::vector<double>{-1, -1, 1, 1}, params(1, 1, 1, 1.0, 0.0));
    CHECK(t.nodes()[0].feature == 0);
  }

  TEST_CASE("bad inputs") {
    CHECK_THROWS_AS(fit_tree(Matrix{}, std::vector<double>{}, params(1, 1, 1, 1, 0)), Error);
    CHECK_THROWS_AS(fit_tree(rows({{0}, {1}}), std::vector<double>{1}, params(1, 1, 1, 1, 0)), Error);
    CHECK_THROWS_AS(params(1, 1, 1, 0.0, 0).validate(), Error);
    CHECK_THROWS_AS(params(1, 1, 1, 1.5, 0).validate(), Error);
    CHECK_THROWS_AS(params(1, 1, 1, 1.0, -1).validate(), Error);
  }
}

TEST_SUITE("gbt.fit") {
  TEST_CASE("constant targets give the base prediction and zero trees") {
    const auto x = rows({{0}, {1}, {2}, {3}, {4}, {5}});
    const auto m = fit(x, std::vector<double>(6, 7.5), Task::Regression, params(5, 3, 1, 0.5, 1.0));
    CHECK(m.base_prediction == 7.5);
    for (const auto& t : m.trees) {
      for (const auto& node : t.nodes()) {
        if (node.is_leaf()) CHECK(node.value == 0.0);
      }
    }
    for (double p : predict(m, x)) CHECK(p == 7.5);
  }

  TEST_CASE("one round on the hand example recovers the targets") {
    const auto x = rows({{0}, {1}, {2}, {3}});
    const std::vector<double> y{0, 0, 4, 4};
    const auto m = fit(x, y, Task::Regression, params(1, 1, 1, 1.0, 0.0));
    CHECK(m.base_prediction == 2.0);
    CHECK(predict(m, x) == y);
    CHECK(m.train_loss.size() == 2);
    CHECK(m.train_loss[0] == 16.0);
    CHECK(m.train_loss[1] == 0.0);
  }

  TEST_CASE("training loss never increases") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = testsupport::random_matrix(200, 5, rng);
      std::vector<double> y(200);
      for (std::size_t r = 0; r < 200; ++r) y[r] = 5 * x(r, 0) - 3 * x(r, 1) * x(r, 2) + n01(rng);
      for (double gamma : {0.1, 0.5, 1.0}) {
        for (double lambda : {0.0, 1.0}) {
          const auto m = fit(x, y, Task::Regression, params(30, 4, 5, gamma, lambda));
          for (std::size_t k = 1; k < m.train_loss.size(); ++k) {
            CHECK(m.train_loss[k] <= m.train_loss[k - 1]);
          }
          CHECK(m.train_loss.back() < m.train_loss.front());
        }
      }
    }
  }

  TEST_CASE("deep trees interpolate distinct single-feature inputs") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-50, 50);
    Matrix x;
    std::vector<double> y;
    for (int i = 0; i < 64; ++i) {
      x.push_row(std::vector<double>{static_cast<double>(i) * 0.37});
      y.push_back(u(rng));
    }
    const auto m = fit(x, y, Task::Regression, params(2, 64, 1, 1.0, 0.0));
    const auto p = predict(m, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(p[i] == doctest::Approx(y[i]).epsilon(1e-12));
  }

  TEST_CASE("fitting is deterministic and row-order invariant") {
    std::mt19937_64 rng(12);
    const auto x = testsupport::random_matrix(120, 3, rng);
    std::vector<double> y(120);
    for (std::size_t r = 0; r < 120; ++r) y[r] = std::sin(3 * x(r, 0)) + x(r, 2);
    const auto p = params(20, 3, 3, 0.3, 1.0);
    const auto a = fit(x, y, Task::Regression, p);
    CHECK(a == fit(x, y, Task::Regression, p));

    std::vector<std::size_t> perm(120);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> y_perm;
    for (auto r : perm) y_perm.push_back(y[r]);
    const auto b = fit(x.select_rows(perm), y_perm, Task::Regression, p);
    const auto query = testsupport::random_matrix(50, 3, rng);
    CHECK(predict(a, query) == predict(b, query));
  }

  TEST_CASE("zero-tree ensemble predicts the base value") {
    BoostedEnsemble m;
    m.base_prediction = 3.25;
    m.n_features = 2;
    CHECK(predict(m, rows({{0, 0}, {5, 5}})) == std::vector<double>{3.25, 3.25});
    m.task = Task::Classification;
    m.base_prediction = 0.0;
    CHECK(predict(m, rows({{1, 1}})) == std::vector<double>{0.5});
  }

  TEST_CASE("classifier separates a clean threshold") {
    Matrix x;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
      x.push_row(std::vector<double>{static_cast<double>(i)});
      y.push_back(i >= 20 ? 1.0 : 0.0);
    }
    const auto m = fit(x, y, Task::Classification, params(30, 2, 2, 0.5, 1.0));
    const auto labels = predict_labels(m, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(labels[i] == static_cast<int>(y[i]));
    for (std::size_t k = 1; k < m.train_loss.size(); ++k) CHECK(m.train_loss[k] <= m.train_loss[k - 1] + 1e-12);
    CHECK_THROWS_AS(fit(x, std::vector<double>(40, 2.0), Task::Classification, params(3, 2, 2, 0.5, 1)), Error);
  }

  TEST_CASE("model JSON round trip preserves predictions") {
    testsupport::TempDir dir("gbt");
    std::mt19937_64 rng(6);
    const auto x = testsupport::random_matrix(80, 4, rng);
    std::vector<double> y(80);
    for (std::size_t r = 0; r < 80; ++r) y[r] = x(r, 0) * 100.0 + 1.0 / 3.0;
    const auto m = fit(x, y, Task::Regression, params(15, 3, 2, 0.2, 0.5));
    save_model(dir / "m.json", m);
    const auto back = load_model(dir / "m.json");
    CHECK(predict(back, x) == predict(m, x));
    CHECK(back.trees == m.trees);
    CHECK(ensemble_from_json(to_json(m)) == m);
    CHECK_THROWS_AS(ensemble_from_json(nlohmann::json{{"kind", "knn"}}), Error);
  }

  TEST_CASE("feature count mismatch at prediction") {
    const auto m = fit(rows({{0, 1}, {1, 0}, {2, 2}}), std::vector<double>{1, 2, 3}, Task::Regression,
                       params(2, 1, 1, 1, 0));
    CHECK_THROWS_AS(predict(m, rows({{0}})), Error);
  }
}
