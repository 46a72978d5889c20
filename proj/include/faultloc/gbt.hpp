#pragma once

// Gradient-boosted regression trees with first-order updates.
//
// Each round fits a least-squares tree to the negative loss gradient and adds
// gamma times its output to the running prediction. Squared loss is used for
// fault-distance regression, logistic loss for the fault / non-fault task.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultloc/matrix.hpp"

namespace faultloc::gbt {

enum class Task { Regression, Classification };

Task parse_task(std::string_view text);
std::string_view to_string(Task task);

struct Hyperparams {
  int n_rounds = 200;
  int max_depth = 4;
  int min_samples_leaf = 5;
  double gamma = 0.1;  // learning rate
  double lambda_leaf = 1.0;

  void validate() const;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Leaf when `feature < 0`; otherwise rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary tree stored as a flat node array; node 0 is the root.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const;
  int depth() const;
  std::size_t leaf_count() const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct BoostedEnsemble {
  Task task = Task::Regression;
  double base_prediction = 0.0;
  double gamma = 0.1;
  std::size_t n_features = 0;
  std::vector<Tree> trees;
  // train_loss[0] is the loss of the base prediction, train_loss[m] after round m.
  std::vector<double> train_loss;

  friend bool operator==(const BoostedEnsemble&, const BoostedEnsemble&) = default;
};

double squared_loss(std::span<const double> y, std::span<const double> yhat);
// Sum of y ln(1 + e^-s) + (1 - y) ln(1 + e^s), stable for large |s|.
double logistic_loss(std::span<const double> y, std::span<const double> scores);
double loss(Task task, std::span<const double> y, std::span<const double> yhat);

// dL/dyhat per sample: -2(y - yhat) for squared loss, sigmoid(s) - y for logistic.
std::vector<double> loss_gradient(Task task, std::span<const double> y, std::span<const double> yhat);

// Max |analytic - central difference| over samples.
double gradient_check(Task task, std::span<const double> y, std::span<const double> yhat, double epsilon);

double sigmoid(double s);

// Greedy least-squares tree on `targets`; leaf value sum / (count + lambda).
Tree fit_tree(const Matrix& x, std::span<const double> targets, const Hyperparams& params);

BoostedEnsemble fit(const Matrix& x, std::span<const double> y, Task task, const Hyperparams& params);

// Raw additive score base + gamma * sum of trees.
std::vector<double> predict_raw(const BoostedEnsemble& model, const Matrix& x);
// Regression: raw score. Classification: probability of class 1.
std::vector<double> predict(const BoostedEnsemble& model, const Matrix& x);
// Hard labels at probability 0.5.
std::vector<int> predict_labels(const BoostedEnsemble& model, const Matrix& x);

nlohmann::json to_json(const Tree& tree);
Tree tree_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoostedEnsemble& model);
BoostedEnsemble ensemble_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Hyperparams& params);
Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams defaults = {});

void save_model(const std::filesystem::path& path, const BoostedEnsemble& model);
BoostedEnsemble load_model(const std::filesystem::path& path);

}  // namespace faultloc::gbt
