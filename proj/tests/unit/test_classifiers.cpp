#include "csmspec/classifiers.hpp"

#include "../support/helpers.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace csmspec;

namespace {

struct Data {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Data blobs(int per_class, double distance, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  Data d;
  d.X.resize(2 * per_class, 2);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    d.X.row(i) << c * distance + g(rng), g(rng);
    d.y.push_back(c);
  }
  return d;
}

Data circles(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  Data d;
  d.X.resize(2 * per_class, 2);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int c = i < per_class ? 0 : 1;
    const double r = (c == 0 ? 0.5 : 1.5) + jitter(rng);
    const double a = angle(rng);
    d.X.row(i) << r * std::cos(a), r * std::sin(a);
    d.y.push_back(c);
  }
  return d;
}

}  // namespace

TEST_CASE("stratified_split keeps class proportions") {
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(i % 3 == 0 ? 7 : 2);
  const auto s = stratified_split(labels, 0.7, 1);
  CHECK(s.train.size() + s.test.size() == 30);
  CHECK(std::is_sorted(s.train.begin(), s.train.end()));
  const auto sevens = std::count_if(s.train.begin(), s.train.end(), [&](std::size_t i) { return labels[i] == 7; });
  CHECK(sevens == 7);
  CHECK(s.train.size() == 21);
  CHECK(stratified_split(labels, 0.7, 1).train == s.train);
  CHECK_CSM_ERROR(stratified_split(labels, 0.0, 1), ErrorCode::InvalidArgument);
}

TEST_CASE("train_tree: indicator labels in one dimension") {
  Eigen::MatrixXd X(40, 1);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = -2.0 + 0.1 * i + 0.01;
    y.push_back(X(i, 0) > 0.0 ? 1 : 0);
  }
  for (int depth : {1, 2}) {
    const auto rep = train_tree(X, y, {depth, 0.7, 3});
    CHECK(rep.train_accuracy == 1.0);
    CHECK(*rep.test_accuracy == 1.0);
    CHECK_FALSE(rep.degenerate);
  }
}

TEST_CASE("DecisionTree on XOR matches the greedy search oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd X(200, 2);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    X.row(i) << u(rng), u(rng);
    y.push_back((X(i, 0) > 0.0) != (X(i, 1) > 0.0) ? 1 : 0);
  }
  std::vector<std::size_t> all(200);
  std::iota(all.begin(), all.end(), 0);
  DecisionTree tree;
  tree.fit(X, y, all, 2);
  CHECK(tree.leaves() <= 4);
  const auto expected = oracle::greedy_tree_predict(X, y, 2);
  std::size_t ok = 0;
  for (Eigen::Index i = 0; i < 200; ++i) {
    CHECK(tree.predict(X.row(i)) == expected[static_cast<std::size_t>(i)]);
    ok += tree.predict(X.row(i)) == y[static_cast<std::size_t>(i)];
  }
  const double acc = static_cast<double>(ok) / 200.0;
  CHECK(acc > 0.5);
  CHECK(acc < 1.0);
  MESSAGE("XOR depth-2 training accuracy " << acc);
}

TEST_CASE("DecisionTree on random multi-class data matches the oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd X(60, 3);
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
      X.row(i) << g(rng), std::round(2 * g(rng)), g(rng);
      y.push_back(static_cast<int>(rng() % 3));
    }
    std::vector<std::size_t> all(60);
    std::iota(all.begin(), all.end(), 0);
    DecisionTree tree;
    tree.fit(X, y, all, 2);
    const auto expected = oracle::greedy_tree_predict(X, y, 2);
    for (Eigen::Index i = 0; i < 60; ++i) CHECK(tree.predict(X.row(i)) == expected[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("train_tree: single class is degenerate") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
  const auto rep = train_tree(X, std::vector<int>(10, 4));
  CHECK(rep.degenerate);
  CHECK(rep.train_accuracy == 1.0);
  CHECK(*rep.test_accuracy == 1.0);
  CHECK_CSM_ERROR(train_tree(X, std::vector<int>(9, 1)), ErrorCode::ShapeError);
}

TEST_CASE("polynomial_features layout") {
  Eigen::MatrixXd X(1, 3);
  X << 2.0, 3.0, 5.0;
  const auto F = polynomial_features(X, 2);
  Eigen::RowVectorXd expected(10);
  expected << 1, 2, 3, 5, 4, 6, 10, 9, 15, 25;
  CHECK(F.row(0) == expected);
  CHECK(polynomial_features(X, 1).cols() == 4);
  CHECK_CSM_ERROR(polynomial_features(X, 3), ErrorCode::InvalidArgument);
}

TEST_CASE("multinomial logistic gradient matches central differences") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  const int n = 30, p = 4, C = 3;
  Eigen::MatrixXd X(n, p);
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (int j = 1; j < p; ++j) X(i, j) = g(rng);
    y.push_back(static_cast<int>(rng() % C));
  }
  for (int point = 0; point < 20; ++point) {
    Eigen::MatrixXd W(p, C);
    for (int a = 0; a < p; ++a)
      for (int c = 0; c < C; ++c) W(a, c) = g(rng);
    const double l2 = 0.1 * point;
    const auto lg = multinomial_logistic_loss(X, y, W, l2);
    Eigen::MatrixXd fd(p, C);
    const double h = 1e-5;
    for (int a = 0; a < p; ++a)
      for (int c = 0; c < C; ++c) {
        Eigen::MatrixXd Wp = W, Wm = W;
        Wp(a, c) += h;
        Wm(a, c) -= h;
        fd(a, c) = (multinomial_logistic_loss(X, y, Wp, l2).loss - multinomial_logistic_loss(X, y, Wm, l2).loss) / (2 * h);
      }
    CHECK((lg.gradient - fd).norm() / std::max(1e-12, fd.norm()) <= 1e-5);
  }
}

TEST_CASE("multinomial logistic loss at zero weights is log C") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 2);
  const auto lg = multinomial_logistic_loss(X, {0, 1, 2, 3, 0}, Eigen::MatrixXd::Zero(2, 4), 1.0);
  CHECK(std::abs(lg.loss - std::log(4.0)) <= 1e-15);
  CHECK_CSM_ERROR(multinomial_logistic_loss(X, {0, 1, 2, 4, 0}, Eigen::MatrixXd::Zero(2, 4), 0.0),
                  ErrorCode::InvalidArgument);
}

TEST_CASE("train_polylogistic: separable blobs and concentric circles") {
  const auto b = blobs(100, 10.0, 0.5, 7);
  const auto rb = train_polylogistic(b.X, b.y);
  CHECK(*rb.test_accuracy >= 0.99);
  CHECK(rb.n_train == 140);
  CHECK(rb.n_test == 60);

  const auto c = circles(150, 8);
  const auto rc = train_polylogistic(c.X, c.y);
  CHECK(*rc.test_accuracy >= 0.95);
  // Degree one cannot separate circles.
  PolyLogisticOptions linear;
  linear.degree = 1;
  CHECK(*train_polylogistic(c.X, c.y, linear).test_accuracy < 0.8);

  const auto again = train_polylogistic(c.X, c.y);
  CHECK(again.description == rc.description);
}

TEST_CASE("train_polylogistic: zero iterations predicts the majority class") {
  auto d = blobs(50, 3.0, 1.0, 9);
  for (int i = 0; i < 30; ++i) d.y[static_cast<std::size_t>(50 + i)] = 0;  // 80 zeros, 20 ones
  PolyLogisticOptions opts;
  opts.iters = 0;
  const auto rep = train_polylogistic(d.X, d.y, opts);
  CHECK(*rep.test_accuracy == doctest::Approx(24.0 / 30.0));
  CHECK(rep.train_accuracy == doctest::Approx(56.0 / 70.0));
}

TEST_CASE("train_polylogistic: degenerate and divergent training") {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(12, 2);
  const auto rep = train_polylogistic(X, std::vector<int>(12, 3));
  CHECK(rep.degenerate);
  CHECK(rep.train_accuracy == 1.0);

  const auto b = blobs(40, 2.0, 1.0, 10);
  PolyLogisticOptions hot;
  hot.lr = 1e4;
  hot.l2 = 10.0;
  CHECK_CSM_ERROR(train_polylogistic(b.X, b.y, hot), ErrorCode::LearningRateTooHigh);
  hot.lr = -1.0;
  CHECK_CSM_ERROR(train_polylogistic(b.X, b.y, hot), ErrorCode::InvalidArgument);
}
