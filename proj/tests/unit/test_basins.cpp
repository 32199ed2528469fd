#include "csmspec/basins.hpp"

#include "../support/helpers.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace csmspec;

namespace {

SpectralDecomposition manual(const Eigen::MatrixXd& right) {
  SpectralDecomposition dec;
  dec.values = Eigen::VectorXcd::Ones(right.cols());
  for (Eigen::Index j = 1; j < right.cols(); ++j) dec.values[j] = 1.0 - 0.1 * static_cast<double>(j);
  dec.right = right.cast<std::complex<double>>();
  dec.left = dec.right;
  return dec;
}

std::vector<int> block_labels(const std::vector<int>& sizes) {
  std::vector<int> out;
  for (std::size_t b = 0; b < sizes.size(); ++b) out.insert(out.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b) + 1);
  return out;
}

std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(1, classes);
  std::vector<int> out(n);
  for (auto& v : out) v = u(rng);
  return out;
}

}  // namespace

TEST_CASE("assign_basins: rank one labels everything 1") {
  std::mt19937_64 rng(1);
  const auto K = KernelMatrix::from_matrix(oracle::random_stochastic(9, rng));
  const auto dec = eigendecompose(K, 3);
  for (auto basis : {BasinBasis::Localized, BasinBasis::Eigen}) {
    const auto lab = assign_basins(dec, 1, {basis, false});
    CHECK(std::all_of(lab.labels.begin(), lab.labels.end(), [](int l) { return l == 1; }));
    CHECK(lab.counts() == std::vector<std::size_t>{9});
  }
  CHECK_CSM_ERROR(assign_basins(dec, 0), ErrorCode::EmptyRank);
  CHECK_CSM_ERROR(assign_basins(dec, 4), ErrorCode::InvalidArgument);
}

TEST_CASE("assign_basins: exact block kernels recover their blocks") {
  std::mt19937_64 rng(2);
  for (const auto& sizes : {std::vector<int>{4, 6}, std::vector<int>{5, 5, 5}, std::vector<int>{3, 8, 4, 6}}) {
    const auto K = KernelMatrix::from_matrix(oracle::block_kernel(sizes, 0.0, rng));
    const auto dec = eigendecompose(K, sizes.size() + 1);
    const auto sel = select_rank(dec);
    CHECK(sel.r == sizes.size());
    const auto lab = assign_basins(dec, sel.r);
    CHECK(adjusted_rand_index(lab.labels, block_labels(sizes)) == 1.0);
    for (bool t : lab.tie) CHECK_FALSE(t);
  }
}

TEST_CASE("assign_basins: weak cross-block mass keeps the partition") {
  std::mt19937_64 rng(3);
  const std::vector<int> sizes{10, 12, 8};
  const auto K = KernelMatrix::from_matrix(oracle::block_kernel(sizes, 0.01, rng));
  const auto dec = eigendecompose(K, 6);
  CHECK(select_rank(dec).r == 3);
  CHECK(adjusted_rand_index(assign_basins(dec, 3).labels, block_labels(sizes)) >= 0.99);
}

TEST_CASE("assign_basins: ties go to the smallest index") {
  Eigen::MatrixXd right(3, 2);
  right << 1.0, 1.0,
           0.5, -0.2,
           0.1, 0.3;
  const auto lab = assign_basins(manual(right), 2, {BasinBasis::Eigen, false});
  CHECK(lab.labels == std::vector<int>{1, 1, 2});
  CHECK(lab.tie == std::vector<bool>{true, false, false});
  CHECK(lab.margin[0] == 0.0);
  CHECK(std::abs(lab.margin[1] - 0.3) <= 1e-15);
  for (std::size_t i = 0; i < 3; ++i) CHECK(lab.tie[i] == (lab.margin[i] < kTieTolerance));
}

TEST_CASE("assign_basins: eigen basis normalizes each column to unit max modulus") {
  Eigen::MatrixXd right(3, 2);
  right << 0.2, 0.9,
           0.1, 0.3,
           0.05, 0.9;
  // After normalization column 1 is (1, .5, .25) and column 2 is (1, 1/3, 1).
  const auto lab = assign_basins(manual(right), 2, {BasinBasis::Eigen, false});
  CHECK(lab.labels == std::vector<int>{1, 1, 2});
  CHECK(lab.tie[0]);
  // Scaling a column by a positive constant does not change the labels.
  Eigen::MatrixXd scaled = right;
  scaled.col(1) *= 7.5;
  CHECK(assign_basins(manual(scaled), 2, {BasinBasis::Eigen, false}).labels == lab.labels);
  const auto dropped = assign_basins(manual(right), 2, {BasinBasis::Eigen, true});
  CHECK(dropped.labels == std::vector<int>{2, 2, 2});
}

TEST_CASE("adjusted_rand_index against pair enumeration") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial) * 3;
    const auto a = random_labels(n, 2 + trial % 4, rng);
    auto b = trial % 2 ? random_labels(n, 3, rng) : a;
    if (trial % 2 == 0)
      for (std::size_t i = 0; i < n / 4; ++i) b[i] = 1;
    const double ari = adjusted_rand_index(a, b);
    CHECK(std::abs(ari - oracle::ari_pairs(a, b)) <= 1e-12);
    CHECK(std::abs(ari - adjusted_rand_index(b, a)) <= 1e-15);
    std::vector<int> perm{1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), rng);
    auto relabeled = b;
    for (auto& v : relabeled) v = perm[static_cast<std::size_t>(v - 1)] + 10;
    CHECK(std::abs(ari - adjusted_rand_index(a, relabeled)) <= 1e-12);
  }
  const std::vector<int> x{1, 1, 2, 2, 3};
  CHECK(adjusted_rand_index(x, x) == 1.0);
  CHECK(adjusted_rand_index(std::vector<int>(4, 1), std::vector<int>(4, 2)) == 1.0);
  CHECK_CSM_ERROR(adjusted_rand_index({}, {}), ErrorCode::ShapeError);
  CHECK_CSM_ERROR(adjusted_rand_index({1, 2}, {1}), ErrorCode::ShapeError);
}

TEST_CASE("adjusted_rand_index of independent random labelings is near zero") {
  std::mt19937_64 rng(5);
  const auto a = random_labels(200, 3, rng);
  const auto b = random_labels(200, 3, rng);
  // Permutation null: shuffle b and recompute with the pair-enumeration oracle.
  std::vector<double> null;
  auto shuffled = b;
  for (int k = 0; k < 200; ++k) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    null.push_back(oracle::ari_pairs(a, shuffled));
  }
  const double mean = std::accumulate(null.begin(), null.end(), 0.0) / null.size();
  double var = 0.0;
  for (double v : null) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (null.size() - 1));
  CHECK(std::abs(mean) <= 3.0 * sd / std::sqrt(static_cast<double>(null.size())));
  CHECK(std::abs(adjusted_rand_index(a, b)) <= 3.0 * sd);
}

TEST_CASE("jaccard_ovr examples") {
  CHECK(std::abs(jaccard_ovr({1, 1, 2, 2}, {1, 2, 2, 2}) - 7.0 / 12.0) <= 1e-15);
  CHECK(jaccard_ovr({1, 2, 3, 3}, {1, 2, 3, 3}) == 1.0);
  CHECK(jaccard_ovr({1, 2, 3, 3}, {5, 6, 7, 7}) == 1.0);
  // Every class of b is used once: class 2 of a has no partner left.
  CHECK(jaccard_ovr({1, 1, 2, 2}, {1, 1, 1, 1}) == 0.25);
  CHECK_CSM_ERROR(jaccard_ovr({1}, {1, 2}), ErrorCode::ShapeError);
}

TEST_CASE("localized basis puts each vertex on a simplex corner") {
  std::mt19937_64 rng(6);
  const auto K = KernelMatrix::from_matrix(oracle::block_kernel({6, 6, 6}, 0.02, rng));
  const auto dec = eigendecompose(K, 3);
  const Eigen::MatrixXd X = localized_basis(dec, 3);
  // Columns of X span the same space as the real eigenvectors and rows sum to 1
  // because phi_1 is constant and every corner row is a unit vector.
  CHECK((X.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-8);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(X.col(j).maxCoeff() >= 1.0 - 1e-8);
}

TEST_CASE("bootstrap_ari on well separated clusters") {
  MixtureParams params;
  params.points_per_cluster = 30;
  const auto cloud = synth_mixture(params, 3);
  SpectralPipelineConfig cfg;
  const auto full = label_point_cloud(cloud, cfg, 3);
  CHECK(adjusted_rand_index(full.labels, *cloud.labels) == 1.0);
  const auto rep = bootstrap_ari(cloud, full.labels, 3, cfg, 6, 0.8, 11);
  CHECK(rep.subsample_size == 72);
  CHECK(rep.ari.size() == 6);
  CHECK(rep.ari_mean >= 0.99);
  CHECK(rep.jaccard_mean >= 0.99);
  const auto again = bootstrap_ari(cloud, full.labels, 3, cfg, 6, 0.8, 11, 3);
  CHECK(again.ari == rep.ari);

  CHECK_CSM_ERROR(bootstrap_ari(cloud, full.labels, 3, cfg, 1, 0.8, 1), ErrorCode::InvalidArgument);
  CHECK_CSM_ERROR(bootstrap_ari(cloud, full.labels, 3, cfg, 4, 0.0, 1), ErrorCode::InvalidArgument);
  CHECK_CSM_ERROR(bootstrap_ari(cloud, full.labels, 3, cfg, 4, 0.03, 1), ErrorCode::SubsampleTooSmall);
}
