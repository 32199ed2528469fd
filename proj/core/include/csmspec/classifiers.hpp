#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace csmspec {

enum class ModelKind { TreeDepth2, PolyLogisticDeg2 };

std::string to_string(ModelKind kind);

struct ClassifierReport {
  ModelKind kind = ModelKind::TreeDepth2;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;  // empty when the split leaves no held-out rows
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  bool degenerate = false;  // single class in the training split
  std::string description;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle (classes in ascending label order, one generator) and
/// round(fraction * n_c) rows of each class to train. Both index lists sorted.
Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed);

/// Greedy CART: Gini impurity, thresholds at midpoints between sorted unique
/// values, ties broken by lowest feature then lowest threshold, majority leaves
/// (lowest label on ties). Goes left when x[feature] <= threshold.
class DecisionTree {
 public:
  struct Node {
    bool leaf = true;
    int label = 0;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
  };

  void fit(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<std::size_t>& rows, int max_depth);
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t leaves() const;
  std::string describe() const;

 private:
  int grow(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<std::size_t> rows, int depth, int max_depth);
  std::vector<Node> nodes_;
};

struct TreeOptions {
  int max_depth = 2;
  double split_fraction = 0.7;
  std::uint64_t seed = 0;
};

ClassifierReport train_tree(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                            const TreeOptions& options = {});

/// Monomials of total degree <= degree (degree 1 or 2): bias, x_i, then x_i x_j for i <= j.
Eigen::MatrixXd polynomial_features(const Eigen::MatrixXd& X, int degree);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;
};

/// Mean multinomial cross-entropy of softmax(X W) against class indices y in
/// [0, C), plus (l2/2) ||W||^2 over every row except row 0 (the bias).
LossAndGradient multinomial_logistic_loss(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                          const Eigen::MatrixXd& W, double l2);

struct PolyLogisticOptions {
  int degree = 2;
  double l2 = 1e-3;
  int iters = 500;
  double lr = 0.5;
  double split_fraction = 0.7;
  std::uint64_t seed = 0;
};

/// Full-batch gradient descent on standardized polynomial features; weights
/// start at zero with the bias at the log class priors. Ten consecutive loss
/// increases throw LearningRateTooHigh.
ClassifierReport train_polylogistic(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                    const PolyLogisticOptions& options = {});

}  // namespace csmspec
