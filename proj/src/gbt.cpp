#include "faultloc/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "faultloc/error.hpp"

namespace faultloc::gbt {

Task parse_task(std::string_view text) {
  if (text == "regression") return Task::Regression;
  if (text == "classification") return Task::Classification;
  throw Error("invalid_argument", "unknown task '" + std::string(text) + "'");
}

std::string_view to_string(Task task) {
  return task == Task::Regression ? "regression" : "classification";
}

void Hyperparams::validate() const {
  require(n_rounds >= 1, "n_rounds must be at least 1");
  require(max_depth >= 1, "max_depth must be at least 1");
  require(min_samples_leaf >= 1, "min_samples_leaf must be at least 1");
  require(gamma > 0 && gamma <= 1, "gamma must lie in (0, 1]");
  require(lambda_leaf >= 0, "lambda_leaf must be non-negative");
}

double Tree::predict(std::span<const double> x) const {
  require(!nodes_.empty(), "empty tree");
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].value;
}

int Tree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return deepest;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                [](const TreeNode& n) { return n.is_leaf(); }));
}

// --- losses --------------------------------------------------------------

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size()) {
    throw Error("invalid_argument", "length mismatch: " + std::to_string(y.size()) + " targets vs " +
                                        std::to_string(yhat.size()) + " predictions");
  }
}

void check_binary(std::span<const double> y) {
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw Error("invalid_argument", "classification targets must be 0 or 1");
  }
}

// ln(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double squared_term(double y, double s) { return (y - s) * (y - s); }
double logistic_term(double y, double s) { return y * softplus(-s) + (1.0 - y) * softplus(s); }

// Order-independent sum: adds values in sorted order.
double canonical_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

}  // namespace

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double squared_loss(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += squared_term(y[i], yhat[i]);
  return acc;
}

double logistic_loss(std::span<const double> y, std::span<const double> scores) {
  check_lengths(y, scores);
  check_binary(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += logistic_term(y[i], scores[i]);
  return acc;
}

double loss(Task task, std::span<const double> y, std::span<const double> yhat) {
  switch (task) {
    case Task::Regression: return squared_loss(y, yhat);
    case Task::Classification: return logistic_loss(y, yhat);
  }
  throw Error("invalid_argument", "unknown task");
}

std::vector<double> loss_gradient(Task task, std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y, yhat);
  std::vector<double> g(y.size());
  switch (task) {
    case Task::Regression:
      for (std::size_t i = 0; i < y.size(); ++i) g[i] = -2.0 * (y[i] - yhat[i]);
      return g;
    case Task::Classification:
      check_binary(y);
      for (std::size_t i = 0; i < y.size(); ++i) g[i] = sigmoid(yhat[i]) - y[i];
      return g;
  }
  throw Error("invalid_argument", "unknown task");
}

double gradient_check(Task task, std::span<const double> y, std::span<const double> yhat, double epsilon) {
  require(epsilon > 0, "epsilon must be positive");
  const auto analytic = loss_gradient(task, y, yhat);
  const auto term = task == Task::Regression ? squared_term : logistic_term;
  double worst = 0.0;
  // L is a sum of per-sample terms, so dL/dyhat_i only sees term i.
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double fd = (term(y[i], yhat[i] + epsilon) - term(y[i], yhat[i] - epsilon)) / (2.0 * epsilon);
    worst = std::max(worst, std::abs(fd - analytic[i]));
  }
  return worst;
}

// --- tree induction ------------------------------------------------------

namespace {

using RowList = std::vector<std::uint32_t>;

class TreeBuilder {
 public:
  explicit TreeBuilder(const Matrix& x) : x_(x), go_left_(x.rows(), 0) {
    const auto n = static_cast<std::uint32_t>(x.rows());
    sorted_.resize(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
      auto& order = sorted_[f];
      order.resize(n);
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const double va = x(a, f);
        const double vb = x(b, f);
        return va < vb || (va == vb && a < b);
      });
    }
  }

  Tree build(std::span<const double> targets, const Hyperparams& params) {
    targets_ = targets;
    params_ = &params;
    nodes_.clear();
    grow(sorted_, 0);
    return Tree(std::move(nodes_));
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  double leaf_value(const RowList& rows) const {
    std::vector<double> vals;
    vals.reserve(rows.size());
    for (auto r : rows) vals.push_back(targets_[r]);
    return canonical_sum(std::move(vals)) / (static_cast<double>(rows.size()) + params_->lambda_leaf);
  }

  Split best_split(const std::vector<RowList>& lists) const {
    const double lambda = params_->lambda_leaf;
    const auto min_leaf = static_cast<std::size_t>(params_->min_samples_leaf);
    const std::size_t m = lists.front().size();
    Split best;
    if (m < 2 * min_leaf) return best;

    double sum_sq = 0.0;
    for (auto r : lists.front()) sum_sq += targets_[r] * targets_[r];
    const double min_gain = 1e-12 * sum_sq;

    for (std::size_t f = 0; f < lists.size(); ++f) {
      const auto& rows = lists[f];
      double total = 0.0;
      for (auto r : rows) total += targets_[r];
      const double parent = total * total / (static_cast<double>(m) + lambda);
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        left += targets_[rows[i]];
        const double xa = x_(rows[i], f);
        const double xb = x_(rows[i + 1], f);
        if (!(xa < xb)) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = m - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right = total - left;
        const double gain = left * left / (static_cast<double>(n_left) + lambda) +
                            right * right / (static_cast<double>(n_right) + lambda) - parent;
        // Strict comparison keeps the lowest feature, then the lowest threshold.
        if (gain > best.gain && gain > min_gain) {
          double mid = 0.5 * (xa + xb);
          if (!(mid < xb)) mid = xa;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  int grow(const std::vector<RowList>& lists, int depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Split split;
    if (depth < params_->max_depth) split = best_split(lists);
    if (split.feature < 0) {
      nodes_[index].value = leaf_value(lists.front());
      return index;
    }

    const auto f = static_cast<std::size_t>(split.feature);
    for (auto r : lists.front()) go_left_[r] = x_(r, f) <= split.threshold ? 1 : 0;
    std::vector<RowList> left(lists.size());
    std::vector<RowList> right(lists.size());
    for (std::size_t k = 0; k < lists.size(); ++k) {
      for (auto r : lists[k]) (go_left_[r] ? left[k] : right[k]).push_back(r);
    }
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = nodes_[index];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  const Matrix& x_;
  std::vector<RowList> sorted_;
  std::vector<char> go_left_;
  std::span<const double> targets_;
  const Hyperparams* params_ = nullptr;
  std::vector<TreeNode> nodes_;
};

void check_fit_inputs(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw Error("invalid_argument", "cannot fit on an empty dataset");
  require(x.cols() >= 1, "dataset has no feature columns");
  require(x.rows() == y.size(), "feature rows and targets differ in length");
}

}  // namespace

Tree fit_tree(const Matrix& x, std::span<const double> targets, const Hyperparams& params) {
  params.validate();
  check_fit_inputs(x, targets);
  TreeBuilder builder(x);
  return builder.build(targets, params);
}

BoostedEnsemble fit(const Matrix& x, std::span<const double> y, Task task, const Hyperparams& params) {
  params.validate();
  check_fit_inputs(x, y);
  require(x.rows() >= 2, "boosting needs at least two rows");
  if (task == Task::Classification) check_binary(y);

  BoostedEnsemble model;
  model.task = task;
  model.gamma = params.gamma;
  model.n_features = x.cols();
  const double mean = canonical_sum({y.begin(), y.end()}) / static_cast<double>(y.size());
  if (task == Task::Regression) {
    model.base_prediction = mean;
  } else {
    const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
    model.base_prediction = std::log(p / (1.0 - p));
  }

  // Squared loss has constant curvature 2: dividing the negative gradient by
  // it makes each tree fit the plain residual y - yhat.
  const double curvature = task == Task::Regression ? 2.0 : 1.0;

  const std::size_t n = x.rows();
  std::vector<double> yhat(n, model.base_prediction);
  std::vector<double> targets(n);
  model.train_loss.push_back(loss(task, y, yhat));
  model.trees.reserve(static_cast<std::size_t>(params.n_rounds));

  TreeBuilder builder(x);
  for (int round = 0; round < params.n_rounds; ++round) {
    const auto grad = loss_gradient(task, y, yhat);
    for (std::size_t i = 0; i < n; ++i) targets[i] = -grad[i] / curvature;
    Tree tree = builder.build(targets, params);
    for (std::size_t i = 0; i < n; ++i) yhat[i] += params.gamma * tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(loss(task, y, yhat));
  }
  return model;
}

std::vector<double> predict_raw(const BoostedEnsemble& model, const Matrix& x) {
  if (x.rows() > 0 && x.cols() != model.n_features) {
    throw Error("invalid_argument", "model expects " + std::to_string(model.n_features) +
                                        " features, got " + std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows(), model.base_prediction);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double acc = model.base_prediction;
    for (const auto& t : model.trees) acc += model.gamma * t.predict(row);
    out[i] = acc;
  }
  return out;
}

std::vector<double> predict(const BoostedEnsemble& model, const Matrix& x) {
  auto raw = predict_raw(model, x);
  if (model.task == Task::Classification) {
    for (auto& s : raw) s = sigmoid(s);
  }
  return raw;
}

std::vector<int> predict_labels(const BoostedEnsemble& model, const Matrix& x) {
  const auto p = predict(model, x);
  std::vector<int> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= 0.5 ? 1 : 0;
  return out;
}

// --- serialization -------------------------------------------------------

namespace {

nlohmann::json node_json(const std::vector<TreeNode>& nodes, int i) {
  const auto& n = nodes[i];
  if (n.is_leaf()) return {{"leaf", n.value}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", node_json(nodes, n.left)},
          {"right", node_json(nodes, n.right)}};
}

int node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes) {
  const int index = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes[index].value = j.at("leaf").get<double>();
    return index;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0) throw Error("parse", "tree node has a negative feature index");
  const double threshold = j.at("threshold").get<double>();
  const int l = node_from_json(j.at("left"), nodes);
  const int r = node_from_json(j.at("right"), nodes);
  nodes[index] = {feature, threshold, l, r, 0.0};
  return index;
}

}  // namespace

nlohmann::json to_json(const Tree& tree) {
  require(!tree.nodes().empty(), "cannot serialize an empty tree");
  return node_json(tree.nodes(), 0);
}

Tree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeNode> nodes;
  node_from_json(j, nodes);
  return Tree(std::move(nodes));
}

nlohmann::json to_json(const BoostedEnsemble& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(to_json(t));
  return {{"kind", "gbt"},
          {"task", to_string(model.task)},
          {"gamma", model.gamma},
          {"base_prediction", model.base_prediction},
          {"n_features", model.n_features},
          {"trees", trees},
          {"train_loss", model.train_loss}};
}

BoostedEnsemble ensemble_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string("gbt")) != "gbt") throw Error("parse", "model file is not a gbt model");
  BoostedEnsemble m;
  m.task = parse_task(j.at("task").get<std::string>());
  m.gamma = j.at("gamma").get<double>();
  m.base_prediction = j.at("base_prediction").get<double>();
  m.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  if (j.contains("train_loss")) m.train_loss = j.at("train_loss").get<std::vector<double>>();
  return m;
}

nlohmann::json to_json(const Hyperparams& p) {
  return {{"n_rounds", p.n_rounds},
          {"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"gamma", p.gamma},
          {"lambda_leaf", p.lambda_leaf}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j, Hyperparams p) {
  p.n_rounds = j.value("n_rounds", p.n_rounds);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.gamma = j.value("gamma", p.gamma);
  p.lambda_leaf = j.value("lambda_leaf", p.lambda_leaf);
  p.validate();
  return p;
}

void save_model(const std::filesystem::path& path, const BoostedEnsemble& model) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot open " + path.string() + " for writing");
  out << to_json(model).dump() << '\n';
}

BoostedEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  try {
    return ensemble_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", path.string() + ": " + e.what());
  }
}

}  // namespace faultloc::gbt
