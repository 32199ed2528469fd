#pragma once

#include "csmspec/basins.hpp"
#include "csmspec/csm.hpp"
#include "csmspec/operators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace csmspec {

/// Directed graph over basins 1..r. `weights` holds the full row-stochastic
/// basin-to-basin matrix; `edges` keeps entries >= threshold.
struct SkeletonGraph {
  struct Edge {
    int from = 0;  // 1-based basin ids
    int to = 0;
    double weight = 0.0;
  };

  std::size_t vertices = 0;
  Eigen::MatrixXd weights;
  std::vector<Edge> edges;
  double threshold = 1e-3;
  std::vector<bool> empty;          // basin had no mass / no visits
  std::vector<double> row_samples;  // rollout transitions observed per basin (0 for lumping)
  std::vector<std::string> warnings;

  double max_off_diagonal() const;
  bool self_loops_only() const;
  /// True when the edge set has no directed cycle once self-loops are removed.
  bool acyclic_without_self_loops() const;
  std::string to_dot() const;
};

inline constexpr double kDefaultSkeletonThreshold = 1e-3;

/// Lumped matrix Q_ij = sum_{s in B_i} mu(s | B_i) sum_{s' in B_j} K(s, s').
/// A basin with zero mu-mass falls back to the uniform conditional (flagged);
/// an empty basin keeps its vertex with zero out-mass.
SkeletonGraph build_skeleton(const KernelMatrix& K, const BasinLabeling& labeling, const Eigen::VectorXd& mu,
                             double threshold = kDefaultSkeletonThreshold);

struct RolloutOptions {
  int n_rollouts = 1000;
  int horizon = 5;
  std::uint64_t seed = 0;
  /// Per-cell start distribution (uniform over cells when empty); starts are
  /// uniform inside the drawn cell.
  std::optional<Eigen::VectorXd> start_weights;
  double threshold = kDefaultSkeletonThreshold;
  int workers = 1;
};

/// Counts basin-to-basin transitions along simulated closed-loop rollouts and
/// normalizes rows. Rollout i uses derive_seed(seed, i).
SkeletonGraph rollout_skeleton(const CSMSpec& spec, const Grid& grid, const BasinLabeling& labeling,
                               const RolloutOptions& options = {});

}  // namespace csmspec
