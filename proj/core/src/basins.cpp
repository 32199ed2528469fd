#include "csmspec/basins.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace csmspec {

std::vector<std::size_t> BasinLabeling::counts() const {
  std::vector<std::size_t> c(r, 0);
  for (int l : labels)
    if (l >= 1 && static_cast<std::size_t>(l) <= r) ++c[static_cast<std::size_t>(l - 1)];
  return c;
}

Eigen::MatrixXd localized_basis(const SpectralDecomposition& dec, std::size_t r) {
  require(r >= 1 && r <= dec.modes(), ErrorCode::InvalidArgument, "rank must lie in [1, modes]");
  const auto n = static_cast<Eigen::Index>(dec.size());
  const auto R = static_cast<Eigen::Index>(r);

  Eigen::MatrixXd X(n, R);
  for (Eigen::Index j = 0; j < R; ++j) {
    const auto lam = dec.values[j];
    if (std::abs(lam.imag()) <= 1e-12) {
      X.col(j) = dec.right.col(j).real();
    } else if (lam.imag() > 0.0 || j == 0) {
      X.col(j) = dec.right.col(j).real();
    } else {
      // Second member of a conjugate pair: use the imaginary part of its partner.
      X.col(j) = dec.right.col(j - 1).imag();
    }
  }

  // Inner-simplex vertex search.
  std::vector<Eigen::Index> vertex(static_cast<std::size_t>(R));
  {
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = X.row(i).norm();
      if (d > best) { best = d; vertex[0] = i; }
    }
  }
  Eigen::MatrixXd ortho = X.rowwise() - X.row(vertex[0]);
  for (Eigen::Index k = 1; k < R; ++k) {
    const Eigen::RowVectorXd dir = ortho.row(vertex[static_cast<std::size_t>(k - 1)]);
    double best = -1.0;
    Eigen::Index arg = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      ortho.row(i) -= ortho.row(i).dot(dir) * dir;
      const double d = ortho.row(i).norm();
      const bool used = std::find(vertex.begin(), vertex.begin() + k, i) != vertex.begin() + k;
      if (d > best && !used) { best = d; arg = i; }
    }
    vertex[static_cast<std::size_t>(k)] = arg;
    if (best > 0.0) ortho /= best;
  }

  Eigen::MatrixXd corners(R, R);
  for (Eigen::Index k = 0; k < R; ++k) corners.row(k) = X.row(vertex[static_cast<std::size_t>(k)]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(corners);
  require(lu.isInvertible(), ErrorCode::IllConditionedSpectrum,
          "dominant subspace is degenerate on the selected vertices");
  return X * lu.inverse();
}

BasinLabeling assign_basins(const SpectralDecomposition& dec, std::size_t r, const BasinOptions& options) {
  require(r != 0, ErrorCode::EmptyRank);
  require(r <= dec.modes(), ErrorCode::InvalidArgument, "rank exceeds the retained modes");
  const auto n = static_cast<Eigen::Index>(dec.size());

  Eigen::MatrixXd moduli;
  std::size_t first = 0;
  if (options.basis == BasinBasis::Localized) {
    moduli = localized_basis(dec, r).cwiseAbs();
  } else {
    moduli = dec.right.leftCols(static_cast<Eigen::Index>(r)).cwiseAbs();
    if (options.drop_trivial && r > 1) first = 1;
  }
  for (Eigen::Index j = 0; j < moduli.cols(); ++j) {
    const double m = moduli.col(j).maxCoeff();
    if (m > 0.0) moduli.col(j) /= m;
  }

  BasinLabeling out;
  out.r = r;
  out.labels.resize(static_cast<std::size_t>(n));
  out.margin.resize(static_cast<std::size_t>(n));
  out.tie.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double top = -1.0, second = 0.0;
    std::size_t arg = first;
    for (auto j = static_cast<Eigen::Index>(first); j < moduli.cols(); ++j) {
      const double v = moduli(i, j);
      if (v > top) {
        second = std::max(second, top);
        top = v;
        arg = static_cast<std::size_t>(j);
      } else {
        second = std::max(second, v);
      }
    }
    const auto ii = static_cast<std::size_t>(i);
    out.labels[ii] = static_cast<int>(arg) + 1;
    out.margin[ii] = top - second;
    out.tie[ii] = out.margin[ii] < kTieTolerance;
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  require(a.size() == b.size() && !a.empty(), ErrorCode::ShapeError, "labelings must be non-empty and equal length");
  std::map<int, std::size_t> ca, cb;
  std::map<std::pair<int, int>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++joint[{a[i], b[i]}];
  }
  auto pairs = [](std::size_t m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - (m > 0 ? 1 : 0)); };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [_, c] : joint) index += pairs(c);
  for (const auto& [_, c] : ca) sa += pairs(c);
  for (const auto& [_, c] : cb) sb += pairs(c);
  const double total = pairs(a.size());
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double jaccard_ovr(const std::vector<int>& a, const std::vector<int>& b) {
  require(a.size() == b.size() && !a.empty(), ErrorCode::ShapeError, "labelings must be non-empty and equal length");
  std::map<int, std::size_t> ca, cb;
  std::map<std::pair<int, int>, std::size_t> overlap;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    ++overlap[{a[i], b[i]}];
  }

  // Greedy maximum-overlap matching; map order gives the smallest (a, b) pair on ties.
  std::map<int, int> match;
  std::map<int, bool> b_used;
  while (true) {
    std::size_t best = 0;
    std::pair<int, int> arg{};
    for (const auto& [key, c] : overlap) {
      if (match.count(key.first) || b_used[key.second]) continue;
      if (c > best) { best = c; arg = key; }
    }
    if (best == 0) break;
    match[arg.first] = arg.second;
    b_used[arg.second] = true;
  }

  double sum = 0.0;
  for (const auto& [cls, size_a] : ca) {
    const auto it = match.find(cls);
    if (it == match.end()) continue;
    const std::size_t inter = overlap[{cls, it->second}];
    const std::size_t uni = size_a + cb[it->second] - inter;
    sum += static_cast<double>(inter) / static_cast<double>(uni);
  }
  return sum / static_cast<double>(ca.size());
}

BasinLabeling label_point_cloud(const PointCloud& cloud, const SpectralPipelineConfig& config, std::size_t r) {
  const KernelMatrix K = diffusion_kernel(cloud, config.kernel);
  const std::size_t k = std::min(std::max(config.modes, r), K.size());
  const SpectralDecomposition dec = eigendecompose(K, k);
  return assign_basins(dec, r, config.basins);
}

BootstrapReport bootstrap_ari(const PointCloud& cloud, const std::vector<int>& full_labels, std::size_t r,
                              const SpectralPipelineConfig& config, int B, double frac, std::uint64_t seed,
                              int workers) {
  require(B >= 2, ErrorCode::InvalidArgument, "bootstrap needs B >= 2");
  require(frac > 0.0 && frac <= 1.0, ErrorCode::InvalidArgument, "frac must lie in (0,1]");
  require(full_labels.size() == cloud.size(), ErrorCode::ShapeError, "labels do not match the cloud");
  const std::size_t n = cloud.size();
  const auto m = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n)));
  require(m >= r + 1, ErrorCode::SubsampleTooSmall,
          "subsample of " + std::to_string(m) + " points for rank " + std::to_string(r));

  SpectralPipelineConfig inner = config;
  inner.kernel.workers = 1;

  BootstrapReport rep;
  rep.subsample_size = m;
  rep.ari.assign(static_cast<std::size_t>(B), 0.0);
  std::vector<double> jac(static_cast<std::size_t>(B), 0.0);
  parallel_for(static_cast<std::size_t>(B), workers, [&](std::size_t b) {
    Rng rng = make_rng(seed, b);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());

    const BasinLabeling sub = label_point_cloud(cloud.subset(idx), inner, r);
    std::vector<int> ref(m);
    for (std::size_t i = 0; i < m; ++i) ref[i] = full_labels[idx[i]];
    rep.ari[b] = adjusted_rand_index(ref, sub.labels);
    jac[b] = jaccard_ovr(ref, sub.labels);
  });

  double s = 0.0, sj = 0.0;
  for (std::size_t b = 0; b < rep.ari.size(); ++b) {
    s += rep.ari[b];
    sj += jac[b];
  }
  rep.ari_mean = s / B;
  rep.jaccard_mean = sj / B;
  double v = 0.0;
  for (double x : rep.ari) v += (x - rep.ari_mean) * (x - rep.ari_mean);
  rep.ari_std = std::sqrt(v / (B - 1));
  return rep;
}

}  // namespace csmspec
