#pragma once

#include "csmspec/operators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace csmspec {

/// Leading eigen-triples of a kernel, ordered by nonincreasing modulus (ties:
/// larger real part first, then larger imaginary part, so lambda = 1 leads).
/// Right vectors are unit 2-norm with their largest-modulus entry real and
/// positive; left vectors are scaled so that left_i^H right_j = delta_ij.
struct SpectralDecomposition {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd right;  // N x k, columns phi_i
  Eigen::MatrixXcd left;   // N x k, columns psi_i
  double biorthogonality_residual = 0.0;
  double conditioning = 1.0;  // ||Phi||_2 ||Psi||_2 over the retained modes
  bool from_companion = false;
  std::string truncation;  // set when fewer than the requested modes were kept

  std::size_t size() const noexcept { return static_cast<std::size_t>(right.rows()); }
  std::size_t modes() const noexcept { return static_cast<std::size_t>(values.size()); }
  double modulus(std::size_t i) const { return std::abs(values[static_cast<Eigen::Index>(i)]); }
  bool is_real(double tol = 1e-12) const;
};

struct EigenOptions {
  /// Solve diffusion kernels through their symmetric companion.
  bool use_companion = true;
  double biorthogonality_tol = 1e-8;
  /// Keep the modes before the first ill-conditioned or defective one instead
  /// of throwing (the leading mode must still be well conditioned).
  bool truncate_ill_conditioned = false;
};

/// Dense eigendecomposition keeping the top-k modes. Left vectors of simple
/// modes come from the transposed problem; repeated eigenvalues get both bases
/// from a null-space SVD. Only clusters among the top k are examined; a
/// defective or ill-conditioned one throws IllConditionedSpectrum.
SpectralDecomposition eigendecompose(const KernelMatrix& K, std::size_t k, const EigenOptions& options = {});

/// All eigenvalues of a dense matrix in the same ordering as eigendecompose.
Eigen::VectorXcd ordered_eigenvalues(const Eigen::MatrixXd& m);

enum class RankMethod { MaxRatio, Threshold };

struct RankOptions {
  RankMethod method = RankMethod::MaxRatio;
  double epsilon = 0.05;
};

struct RankSelection {
  std::size_t r = 0;
  double gap_ratio = std::numeric_limits<double>::quiet_NaN();  // |lambda_{r+1}| / |lambda_r|
  bool no_gap = false;  // every consecutive modulus ratio is equal
};

RankSelection select_rank(const SpectralDecomposition& dec, const RankOptions& options = {});

struct CollapseOptions {
  int t_max = 20;
  int n_probes = 8;
  std::uint64_t seed = 0;
  int workers = 1;
  /// Residuals at or below floor * max(1, residual at t = 0) are excluded from the fit.
  double floor = 1e-12;
};

struct CollapseReport {
  std::size_t r = 0;
  std::vector<double> mean_residual;  // t = 0..t_max, averaged over probes
  std::vector<double> max_residual;
  double fitted_slope = 0.0;  // -inf when the collapse is exact
  double reference_slope = std::numeric_limits<double>::quiet_NaN();  // log|lambda_{r+1}/lambda_r|
  double rate_slope = std::numeric_limits<double>::quiet_NaN();       // log|lambda_{r+1}|
  double prefactor = std::numeric_limits<double>::quiet_NaN();        // max_t residual / |lambda_{r+1}|^t
  double conditioning = 1.0;
  int fit_points = 0;
  bool exact_collapse = false;
};

/// Tracks || P^t f - sum_{i<=r} lambda_i^t <f, psi_i> phi_i || for random unit
/// probes f and fits the log-residual slope against t.
CollapseReport verify_collapse(const KernelMatrix& K, const SpectralDecomposition& dec, std::size_t r,
                               const CollapseOptions& options = {});

struct SpectralCoordinates {
  Eigen::MatrixXd coords;      // N x r (real parts of phi_1..phi_r)
  std::vector<bool> trivial;   // column is constant within 1e-6
};

SpectralCoordinates spectral_coordinates(const SpectralDecomposition& dec, std::size_t r);

}  // namespace csmspec
