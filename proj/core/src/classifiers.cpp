#include "csmspec/classifiers.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace csmspec {

namespace {

struct Encoded {
  std::vector<int> classes;  // sorted unique labels
  std::vector<int> y;        // class index per row
};

Encoded encode(const std::vector<int>& labels) {
  Encoded e;
  e.classes = labels;
  std::sort(e.classes.begin(), e.classes.end());
  e.classes.erase(std::unique(e.classes.begin(), e.classes.end()), e.classes.end());
  e.y.reserve(labels.size());
  for (int l : labels)
    e.y.push_back(static_cast<int>(std::lower_bound(e.classes.begin(), e.classes.end(), l) - e.classes.begin()));
  return e;
}

void check_inputs(const Eigen::MatrixXd& X, const std::vector<int>& labels, double split_fraction) {
  require(X.rows() >= 1 && static_cast<std::size_t>(X.rows()) == labels.size(), ErrorCode::ShapeError,
          "feature rows differ from label count");
  require(X.allFinite(), ErrorCode::InvalidArgument, "features must be finite");
  require(split_fraction > 0.0 && split_fraction <= 1.0, ErrorCode::InvalidArgument,
          "split fraction must lie in (0,1]");
}

int majority(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  std::map<int, std::size_t> count;
  for (auto r : rows) ++count[y[r]];
  int best = 0;
  std::size_t best_n = 0;
  for (const auto& [label, n] : count)
    if (n > best_n) { best = label; best_n = n; }
  return best;
}

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double s = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    s += p * p;
  }
  return 1.0 - s;
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::TreeDepth2 ? "tree-depth2" : "polylogistic-deg2";
}

Split stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction <= 1.0, ErrorCode::InvalidArgument, "train fraction must lie in (0,1]");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  Split s;
  for (auto& [_, rows] : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    auto take = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
    take = std::clamp<std::size_t>(take, 1, rows.size());
    s.train.insert(s.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    s.test.insert(s.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void DecisionTree::fit(const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                       int max_depth) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "cannot fit a tree on zero rows");
  require(max_depth >= 0, ErrorCode::InvalidArgument, "max_depth must be >= 0");
  nodes_.clear();
  grow(X, y, rows, 0, max_depth);
}

constexpr double kGainTolerance = 1e-12;

int DecisionTree::grow(const Eigen::MatrixXd& X, const std::vector<int>& y, std::vector<std::size_t> rows, int depth,
                       int max_depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{true, majority(y, rows), -1, 0.0, -1, -1});

  const int n_classes = *std::max_element(y.begin(), y.end()) + 1;
  std::vector<std::size_t> total(static_cast<std::size_t>(n_classes), 0);
  for (auto r : rows) ++total[static_cast<std::size_t>(y[r])];
  const double parent = gini(total, rows.size());
  if (depth >= max_depth || parent <= 0.0) return id;

  double best_gain = kGainTolerance;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<std::pair<double, int>> col(rows.size());
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {X(static_cast<Eigen::Index>(rows[i]), f), y[rows[i]]};
    std::sort(col.begin(), col.end());
    std::vector<std::size_t> left(static_cast<std::size_t>(n_classes), 0);
    std::vector<std::size_t> right = total;
    for (std::size_t i = 0; i + 1 < col.size(); ++i) {
      ++left[static_cast<std::size_t>(col[i].second)];
      --right[static_cast<std::size_t>(col[i].second)];
      if (col[i].first == col[i + 1].first) continue;
      const std::size_t nl = i + 1, nr = col.size() - nl;
      const double weighted = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                              static_cast<double>(col.size());
      const double gain = parent - weighted;
      // Near-equal gains keep the first split in (feature, threshold) order.
      if (gain > best_gain + kGainTolerance) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = 0.5 * (col[i].first + col[i + 1].first);
      }
    }
  }
  if (best_feature < 0) return id;

  std::vector<std::size_t> lrows, rrows;
  for (auto r : rows) (X(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? lrows : rrows).push_back(r);
  const int l = grow(X, y, std::move(lrows), depth + 1, max_depth);
  const int rr = grow(X, y, std::move(rrows), depth + 1, max_depth);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.leaf = false;
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = l;
  node.right = rr;
  return id;
}

int DecisionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  require(!nodes_.empty(), ErrorCode::InvalidArgument, "tree is not fitted");
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].leaf) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].label;
}

std::size_t DecisionTree::leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
}

std::string DecisionTree::describe() const {
  std::ostringstream os;
  os.precision(6);
  const auto rec = [&](const auto& self, int i) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.leaf) {
      os << "class " << n.label;
      return;
    }
    os << "(x" << n.feature << " <= " << n.threshold << " ? ";
    self(self, n.left);
    os << " : ";
    self(self, n.right);
    os << ")";
  };
  if (!nodes_.empty()) rec(rec, 0);
  return os.str();
}

ClassifierReport train_tree(const Eigen::MatrixXd& features, const std::vector<int>& labels, const TreeOptions& options) {
  check_inputs(features, labels, options.split_fraction);
  const Encoded enc = encode(labels);
  const Split split = stratified_split(labels, options.split_fraction, options.seed);

  ClassifierReport rep;
  rep.kind = ModelKind::TreeDepth2;
  rep.n_train = split.train.size();
  rep.n_test = split.test.size();

  DecisionTree tree;
  tree.fit(features, enc.y, split.train, options.max_depth);
  std::map<int, int> train_classes;
  for (auto r : split.train) ++train_classes[enc.y[r]];
  rep.degenerate = train_classes.size() < 2;

  auto accuracy = [&](const std::vector<std::size_t>& rows) {
    std::size_t ok = 0;
    for (auto r : rows) ok += tree.predict(features.row(static_cast<Eigen::Index>(r))) == enc.y[r];
    return static_cast<double>(ok) / static_cast<double>(rows.size());
  };
  rep.train_accuracy = accuracy(split.train);
  if (!split.test.empty()) rep.test_accuracy = accuracy(split.test);

  // Report splits in terms of original labels.
  std::string desc = tree.describe();
  std::ostringstream os;
  os << desc << " [classes:";
  for (std::size_t c = 0; c < enc.classes.size(); ++c) os << " " << c << "=" << enc.classes[c];
  os << "]";
  rep.description = os.str();
  return rep;
}

Eigen::MatrixXd polynomial_features(const Eigen::MatrixXd& X, int degree) {
  require(degree == 1 || degree == 2, ErrorCode::InvalidArgument, "polynomial degree must be 1 or 2");
  const auto n = X.rows();
  const auto d = X.cols();
  const Eigen::Index p = 1 + d + (degree == 2 ? d * (d + 1) / 2 : 0);
  Eigen::MatrixXd F(n, p);
  F.col(0).setOnes();
  F.middleCols(1, d) = X;
  if (degree == 2) {
    Eigen::Index c = 1 + d;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) F.col(c++) = X.col(i).cwiseProduct(X.col(j));
  }
  return F;
}

LossAndGradient multinomial_logistic_loss(const Eigen::MatrixXd& X, const std::vector<int>& y, const Eigen::MatrixXd& W,
                                          double l2) {
  require(static_cast<std::size_t>(X.rows()) == y.size() && X.rows() >= 1, ErrorCode::ShapeError, "X rows differ from y");
  require(W.rows() == X.cols(), ErrorCode::ShapeError, "W rows differ from feature count");
  const auto n = X.rows();
  Eigen::MatrixXd Z = X * W;
  LossAndGradient out;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = Z.row(i).maxCoeff();
    Z.row(i) = (Z.row(i).array() - m).exp();
    const double s = Z.row(i).sum();
    Z.row(i) /= s;
    const int yi = y[static_cast<std::size_t>(i)];
    require(yi >= 0 && yi < W.cols(), ErrorCode::InvalidArgument, "class index out of range");
    loss -= std::log(std::max(Z(i, yi), std::numeric_limits<double>::min()));
    Z(i, yi) -= 1.0;
  }
  out.loss = loss / static_cast<double>(n);
  out.gradient = X.transpose() * Z / static_cast<double>(n);
  if (l2 > 0.0 && W.rows() > 1) {
    const auto body = W.bottomRows(W.rows() - 1);
    out.loss += 0.5 * l2 * body.squaredNorm();
    out.gradient.bottomRows(W.rows() - 1) += l2 * body;
  }
  return out;
}

ClassifierReport train_polylogistic(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                    const PolyLogisticOptions& options) {
  check_inputs(features, labels, options.split_fraction);
  require(options.iters >= 0 && options.lr > 0.0 && options.l2 >= 0.0, ErrorCode::InvalidArgument,
          "iters >= 0, lr > 0 and l2 >= 0 required");
  const Encoded enc = encode(labels);
  const Split split = stratified_split(labels, options.split_fraction, options.seed);
  const auto C = static_cast<Eigen::Index>(enc.classes.size());

  ClassifierReport rep;
  rep.kind = ModelKind::PolyLogisticDeg2;
  rep.n_train = split.train.size();
  rep.n_test = split.test.size();

  const Eigen::MatrixXd F = polynomial_features(features, options.degree);
  const auto p = F.cols();
  Eigen::MatrixXd Ftr(static_cast<Eigen::Index>(split.train.size()), p);
  std::vector<int> ytr;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    Ftr.row(static_cast<Eigen::Index>(i)) = F.row(static_cast<Eigen::Index>(split.train[i]));
    ytr.push_back(enc.y[split.train[i]]);
  }

  // Standardize every non-bias column with training statistics.
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p);
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(p);
  for (Eigen::Index j = 1; j < p; ++j) {
    mean[j] = Ftr.col(j).mean();
    const double sd = std::sqrt((Ftr.col(j).array() - mean[j]).square().mean());
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  auto standardize = [&](Eigen::MatrixXd M) {
    for (Eigen::Index j = 1; j < p; ++j) M.col(j) = (M.col(j).array() - mean[j]) / scale[j];
    return M;
  };
  const Eigen::MatrixXd Xtr = standardize(Ftr);

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, C);
  std::vector<double> prior(static_cast<std::size_t>(C), 0.0);
  for (int yi : ytr) prior[static_cast<std::size_t>(yi)] += 1.0;
  for (Eigen::Index c = 0; c < C; ++c) {
    const double pc = prior[static_cast<std::size_t>(c)] / static_cast<double>(ytr.size());
    W(0, c) = std::log(std::max(pc, 1e-12));
  }
  rep.degenerate = std::count_if(prior.begin(), prior.end(), [](double v) { return v > 0.0; }) < 2;

  if (!rep.degenerate) {
    double previous = multinomial_logistic_loss(Xtr, ytr, W, options.l2).loss;
    int rising = 0;
    for (int it = 0; it < options.iters; ++it) {
      const LossAndGradient lg = multinomial_logistic_loss(Xtr, ytr, W, options.l2);
      W -= options.lr * lg.gradient;
      const double now = multinomial_logistic_loss(Xtr, ytr, W, options.l2).loss;
      if (!std::isfinite(now)) throw Error(ErrorCode::LearningRateTooHigh, "loss became non-finite");
      rising = now > previous ? rising + 1 : 0;
      if (rising >= 10)
        throw Error(ErrorCode::LearningRateTooHigh, "loss rose for 10 consecutive steps at iteration " + std::to_string(it));
      previous = now;
    }
  }

  const Eigen::MatrixXd Xall = standardize(F);
  auto accuracy = [&](const std::vector<std::size_t>& rows) {
    std::size_t ok = 0;
    for (auto r : rows) {
      Eigen::Index arg;
      (Xall.row(static_cast<Eigen::Index>(r)) * W).maxCoeff(&arg);
      ok += static_cast<int>(arg) == enc.y[r];
    }
    return static_cast<double>(ok) / static_cast<double>(rows.size());
  };
  rep.train_accuracy = accuracy(split.train);
  if (!split.test.empty()) rep.test_accuracy = accuracy(split.test);

  std::ostringstream os;
  os.precision(6);
  os << "degree " << options.degree << ", " << p << " features x " << C << " classes; ||W||_F = " << W.norm();
  rep.description = os.str();
  return rep;
}

}  // namespace csmspec
