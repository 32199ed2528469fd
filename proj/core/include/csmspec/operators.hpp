#pragma once

#include "csmspec/csm.hpp"
#include "csmspec/state_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace csmspec {

enum class KernelSource { Ulam, Diffusion, Explicit };
enum class DiffusionVariant { Squared, Plain };

std::string to_string(KernelSource source);
std::string to_string(DiffusionVariant variant);

/// Row-stochastic approximation of a Markov kernel / transfer operator.
struct KernelMatrix {
  Eigen::MatrixXd P;
  KernelSource source = KernelSource::Explicit;

  // Diffusion kernels: S = D^{-1/2} W D^{-1/2} and sqrt(diag D), so that
  // P = D^{-1/2} S D^{1/2}.
  std::optional<Eigen::MatrixXd> symmetric_companion;
  std::optional<Eigen::VectorXd> degree_sqrt;

  std::optional<Eigen::VectorXd> stationary;
  std::optional<Grid> grid;

  double bandwidth = 0.0;
  DiffusionVariant variant = DiffusionVariant::Squared;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return static_cast<std::size_t>(P.rows()); }

  /// Wraps an arbitrary matrix. Entries must be >= 0 and rows must sum to 1
  /// within `tol`; rows are then renormalized exactly.
  static KernelMatrix from_matrix(Eigen::MatrixXd P, double tol = 1e-9);

  /// Largest |row sum - 1|.
  double row_sum_error() const;
};

using ReferenceMeasure = Eigen::VectorXd;

enum class EscapePolicy {
  Clamp,     // images outside the grid box are clamped onto it
  SelfLoop,  // escaped samples are dropped; an all-escaped cell keeps a self-loop (warning)
  Error,     // any escaped sample throws DomainEscape
};

struct UlamOptions {
  EscapePolicy escape = EscapePolicy::Clamp;
  int workers = 1;
};

/// Ulam estimate: entry (i,j) is the fraction of `samples_per_cell` uniform
/// samples of cell i whose image under s -> T(s, O(s)) lands in cell j.
/// Cell i draws from derive_seed(seed, i), so the result is worker-independent.
KernelMatrix ulam_kernel(const CSMSpec& spec, const Grid& grid, int samples_per_cell, std::uint64_t seed,
                         const UlamOptions& options = {});

struct DiffusionOptions {
  std::optional<double> bandwidth;  // nullopt: median pairwise distance
  DiffusionVariant variant = DiffusionVariant::Squared;
  int workers = 1;
};

double median_pairwise_distance(const Eigen::MatrixXd& points);

/// W_ij = exp(-d_ij^2 / (2 sigma^2)) (Squared) or exp(-d_ij / sigma) (Plain),
/// self-weights retained; P = D^{-1} W.
KernelMatrix diffusion_kernel(const PointCloud& cloud, const DiffusionOptions& options = {});

struct StationaryOptions {
  double tol = 1e-13;
  int max_iters = 200'000;
  bool lazy = false;
  double beta = 0.5;
};

/// P <- (1 - beta) I + beta P.
KernelMatrix lazy_kernel(const KernelMatrix& K, double beta);

/// Period of the chain's recurrent classes (largest period found; 1 = aperiodic).
int chain_period(const Eigen::MatrixXd& P);

/// Power iteration mu <- mu P from the uniform vector until the L1 change is
/// below tol. A periodic recurrent class throws NoSpectralConvergence unless
/// lazy smoothing is enabled.
Eigen::VectorXd stationary_distribution(const KernelMatrix& K, const StationaryOptions& options = {});

/// Largest eps with K_ij >= eps * nu_j for all i and all j with nu_j > 0.
double doeblin_check(const KernelMatrix& K, const ReferenceMeasure& nu);

/// (1/tau) * sum_{t=0}^{tau-1} K^t.
KernelMatrix finite_horizon_propagator(const KernelMatrix& K, int tau);

/// Random row-stochastic matrix: i.i.d. uniform rows, normalized, then mixed
/// as (1 - delta) R + delta * (1/n) 11^T.
KernelMatrix random_kernel(std::size_t n, std::uint64_t seed, double delta = 0.0);

double spectral_norm(const Eigen::MatrixXd& m);
double max_row_sum_norm(const Eigen::MatrixXd& m);

}  // namespace csmspec
