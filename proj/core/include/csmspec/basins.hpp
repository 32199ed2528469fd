#pragma once

#include "csmspec/operators.hpp"
#include "csmspec/spectral.hpp"
#include "csmspec/state_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace csmspec {

enum class BasinBasis {
  /// argmax_j |phi_j| over the raw eigenvectors, each scaled to unit max-modulus.
  Eigen,
  /// Same argmax over the inner-simplex (PCCA+-style) basis of span{phi_1..phi_r}.
  Localized,
};

struct BasinOptions {
  BasinBasis basis = BasinBasis::Localized;
  /// Exclude phi_1 from the argmax (Eigen basis only).
  bool drop_trivial = false;
};

struct BasinLabeling {
  std::vector<int> labels;     // 1-based basin index per point
  std::vector<double> margin;  // top-1 minus top-2 normalized modulus
  std::vector<bool> tie;       // margin < 1e-12
  std::size_t r = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::vector<std::size_t> counts() const;  // index b-1 holds |B_b|
};

inline constexpr double kTieTolerance = 1e-12;

/// Real basis X of the dominant invariant subspace (complex pairs split into
/// real and imaginary parts), rotated so that X(v_k, j) = delta_kj at r
/// greedily chosen vertex points.
Eigen::MatrixXd localized_basis(const SpectralDecomposition& dec, std::size_t r);

BasinLabeling assign_basins(const SpectralDecomposition& dec, std::size_t r, const BasinOptions& options = {});

/// Adjusted Rand index from the pair-counting contingency table. Returns 1
/// when both partitions are trivial in the same way (zero denominator).
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Mean over classes c of a of |A_c ∩ B_s(c)| / |A_c ∪ B_s(c)|, with s the
/// greedy maximum-overlap alignment (unmatched classes contribute 0).
double jaccard_ovr(const std::vector<int>& a, const std::vector<int>& b);

/// Kernel -> spectrum -> basins for a point cloud at a fixed rank.
struct SpectralPipelineConfig {
  DiffusionOptions kernel;
  std::size_t modes = 10;
  BasinOptions basins;
};

BasinLabeling label_point_cloud(const PointCloud& cloud, const SpectralPipelineConfig& config, std::size_t r);

struct BootstrapReport {
  double ari_mean = 0.0;
  double ari_std = 0.0;
  double jaccard_mean = 0.0;
  std::vector<double> ari;
  std::size_t subsample_size = 0;
};

/// B resamples of ceil(frac * n) points without replacement (resample b uses
/// derive_seed(seed, b)); each is relabeled at the full run's rank and compared
/// with the full labels restricted to the subsample.
BootstrapReport bootstrap_ari(const PointCloud& cloud, const std::vector<int>& full_labels, std::size_t r,
                              const SpectralPipelineConfig& config, int B, double frac, std::uint64_t seed,
                              int workers = 1);

}  // namespace csmspec
