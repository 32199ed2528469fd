#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace oracle {

std::vector<cd> charpoly_roots(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  // Faddeev-LeVerrier: c[0] = 1, M_k = A M_{k-1} + c_{n-k+1} I, c_{n-k} = -tr(A M_k)/k.
  std::vector<long double> c(static_cast<std::size_t>(n) + 1, 0.0L);
  c[static_cast<std::size_t>(n)] = 1.0L;
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatL A = m.cast<long double>();
  MatL M = MatL::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    M = A * M + c[static_cast<std::size_t>(n - k + 1)] * MatL::Identity(n, n);
    c[static_cast<std::size_t>(n - k)] = -(A * M).trace() / static_cast<long double>(k);
  }
  auto eval = [&](cd x) {
    std::complex<long double> acc = 1.0L;
    const std::complex<long double> xl(x.real(), x.imag());
    for (int k = n - 1; k >= 0; --k) acc = acc * xl + c[static_cast<std::size_t>(k)];
    return acc;
  };
  auto deriv = [&](cd x) {
    std::complex<long double> acc = static_cast<long double>(n);
    const std::complex<long double> xl(x.real(), x.imag());
    for (int k = n - 1; k >= 1; --k) acc = acc * xl + static_cast<long double>(k) * c[static_cast<std::size_t>(k)];
    return acc;
  };

  std::vector<cd> z(static_cast<std::size_t>(n));
  const cd seed(0.4, 0.9);
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = std::pow(seed, i);
  for (int iter = 0; iter < 2000; ++iter) {
    double change = 0.0;
    for (int i = 0; i < n; ++i) {
      std::complex<long double> denom = 1.0L;
      const auto zi = z[static_cast<std::size_t>(i)];
      for (int j = 0; j < n; ++j)
        if (j != i) {
          const auto d = zi - z[static_cast<std::size_t>(j)];
          denom *= std::complex<long double>(d.real(), d.imag());
        }
      const auto step = eval(zi) / denom;
      const cd s(static_cast<double>(step.real()), static_cast<double>(step.imag()));
      z[static_cast<std::size_t>(i)] -= s;
      change = std::max(change, std::abs(s));
    }
    if (change < 1e-15) break;
  }
  for (auto& x : z)
    for (int it = 0; it < 3; ++it) {
      const auto d = deriv(x);
      if (std::abs(d) < 1e-14L) break;
      const auto s = eval(x) / d;
      x -= cd(static_cast<double>(s.real()), static_cast<double>(s.imag()));
    }
  return z;
}

double matched_distance(const std::vector<cd>& a, const std::vector<cd>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[perm[i]]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::size_t scan_cell(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, const std::vector<std::size_t>& cells,
                      const Eigen::VectorXd& p) {
  std::size_t total = 1;
  for (auto c : cells) total *= c;
  const auto d = cells.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    bool inside = true;
    for (std::size_t k = d; k-- > 0;) {
      const std::size_t i = rem % cells[k];
      rem /= cells[k];
      const auto ki = static_cast<Eigen::Index>(k);
      const double width = hi[ki] - lo[ki];
      const double a = lo[ki] + width * static_cast<double>(i) / static_cast<double>(cells[k]);
      const double b = lo[ki] + width * static_cast<double>(i + 1) / static_cast<double>(cells[k]);
      if (p[ki] < a || p[ki] > b) inside = false;
    }
    if (inside) return idx;
  }
  return std::numeric_limits<std::size_t>::max();
}

Eigen::MatrixXd naive_multiply(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Eigen::MatrixXd naive_power(const Eigen::MatrixXd& m, int t) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < t; ++i) out = naive_multiply(out, m);
  return out;
}

double doeblin_over_subsets(const Eigen::MatrixXd& P, const Eigen::VectorXd& nu) {
  const auto n = static_cast<int>(P.cols());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double mass = 0.0;
    for (int j = 0; j < n; ++j)
      if (mask & (1u << j)) mass += nu[j];
    if (mass <= 0.0) continue;
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      double k = 0.0;
      for (int j = 0; j < n; ++j)
        if (mask & (1u << j)) k += P(i, j);
      best = std::min(best, k / mass);
    }
  }
  return best;
}

Eigen::MatrixXd lump(const Eigen::MatrixXd& P, const std::vector<int>& labels, const Eigen::VectorXd& mu, int r) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(r, r);
  std::vector<double> mass(static_cast<std::size_t>(r), 0.0);
  for (std::size_t s = 0; s < labels.size(); ++s) mass[static_cast<std::size_t>(labels[s] - 1)] += mu[static_cast<Eigen::Index>(s)];
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const int bi = labels[s] - 1;
    const double w = mu[static_cast<Eigen::Index>(s)] / mass[static_cast<std::size_t>(bi)];
    for (std::size_t t = 0; t < labels.size(); ++t)
      Q(bi, labels[t] - 1) += w * P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
  }
  return Q;
}

double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      if (sa && sb) ++n11;
      else if (sa) ++n10;
      else if (sb) ++n01;
      else ++n00;
    }
  const double denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (denom == 0.0) return 1.0;
  return 2.0 * (n00 * n11 - n01 * n10) / denom;
}

Eigen::MatrixXd random_stochastic(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd P(n, n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += (P(i, j) = u(rng) + 1e-9);
    P.row(i) /= s;
  }
  return P;
}

Eigen::MatrixXd block_kernel(const std::vector<int>& sizes, double rho, std::mt19937_64& rng) {
  const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  int offset = 0;
  for (int size : sizes) {
    for (int i = 0; i < size; ++i) {
      double s = 0.0;
      for (int j = 0; j < size; ++j) s += (P(offset + i, offset + j) = u(rng));
      for (int j = 0; j < size; ++j) P(offset + i, offset + j) *= (1.0 - rho) / s;
      const int outside = n - size;
      if (outside > 0)
        for (int j = 0; j < n; ++j)
          if (j < offset || j >= offset + size) P(offset + i, j) = rho / outside;
    }
    offset += size;
  }
  for (int i = 0; i < n; ++i) P.row(i) /= P.row(i).sum();
  return P;
}

namespace {

struct OracleNode {
  bool leaf = true;
  int label = 0;
  int feature = 0;
  double threshold = 0.0;
  int left = -1, right = -1;
};

double gini(const std::map<int, int>& counts, int total) {
  double g = 1.0;
  for (const auto& [c, k] : counts) g -= (static_cast<double>(k) / total) * (static_cast<double>(k) / total);
  return g;
}

int majority(const std::map<int, int>& counts) {
  int best = 0, label = 0;
  for (const auto& [c, k] : counts)
    if (k > best) {
      best = k;
      label = c;
    }
  return label;
}

int grow(std::vector<OracleNode>& nodes, const Eigen::MatrixXd& X, const std::vector<int>& y, const std::vector<int>& rows,
         int depth, int max_depth) {
  std::map<int, int> counts;
  for (int r : rows) ++counts[y[static_cast<std::size_t>(r)]];
  const int id = static_cast<int>(nodes.size());
  nodes.push_back({});
  nodes[static_cast<std::size_t>(id)].label = majority(counts);
  if (depth >= max_depth || counts.size() < 2) return id;

  const int total = static_cast<int>(rows.size());
  const double parent = gini(counts, total);
  double best_gain = 1e-12;
  int best_f = -1;
  double best_t = 0.0;
  for (int f = 0; f < X.cols(); ++f) {
    std::set<double> values;
    for (int r : rows) values.insert(X(r, f));
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = 0.5 * (v[k] + v[k + 1]);
      std::map<int, int> l, rr;
      int nl = 0;
      for (int r : rows) {
        if (X(r, f) <= t) {
          ++l[y[static_cast<std::size_t>(r)]];
          ++nl;
        } else {
          ++rr[y[static_cast<std::size_t>(r)]];
        }
      }
      const int nr = total - nl;
      const double child = (nl * gini(l, nl) + nr * gini(rr, nr)) / total;
      const double gain = parent - child;
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best_f = f;
        best_t = t;
      }
    }
  }
  if (best_f < 0) return id;
  std::vector<int> lrows, rrows;
  for (int r : rows) (X(r, best_f) <= best_t ? lrows : rrows).push_back(r);
  const int l = grow(nodes, X, y, lrows, depth + 1, max_depth);
  const int rr = grow(nodes, X, y, rrows, depth + 1, max_depth);
  auto& node = nodes[static_cast<std::size_t>(id)];
  node.leaf = false;
  node.feature = best_f;
  node.threshold = best_t;
  node.left = l;
  node.right = rr;
  return id;
}

}  // namespace

std::vector<int> greedy_tree_predict(const Eigen::MatrixXd& X, const std::vector<int>& y, int max_depth) {
  std::vector<OracleNode> nodes;
  std::vector<int> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  grow(nodes, X, y, rows, 0, max_depth);
  std::vector<int> out;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].leaf) {
      const auto& n = nodes[static_cast<std::size_t>(at)];
      at = X(i, n.feature) <= n.threshold ? n.left : n.right;
    }
    out.push_back(nodes[static_cast<std::size_t>(at)].label);
  }
  return out;
}

}  // namespace oracle
