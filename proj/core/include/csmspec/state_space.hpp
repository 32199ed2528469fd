#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace csmspec {

/// Axis-aligned compact box [lower, upper] in R^d.
class StateBox {
 public:
  StateBox(Eigen::VectorXd lower, Eigen::VectorXd upper);

  /// The cube [lo, hi]^d.
  static StateBox cube(int d, double lo, double hi);

  int dim() const noexcept { return static_cast<int>(lower_.size()); }
  const Eigen::VectorXd& lower() const noexcept { return lower_; }
  const Eigen::VectorXd& upper() const noexcept { return upper_; }
  double volume() const;
  bool contains(const Eigen::VectorXd& point) const;
  bool contains(const StateBox& other) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& point) const;

 private:
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
};

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

/// Uniform tensor grid over a StateBox. Cells are numbered in row-major
/// order: the last dimension varies fastest.
class Grid {
 public:
  const StateBox& box() const noexcept { return box_; }
  const std::vector<std::size_t>& cells_per_dim() const noexcept { return cells_; }
  std::size_t size() const noexcept { return total_; }
  int dim() const noexcept { return box_.dim(); }

  /// Lower edge of slab `i` along dimension `k`; edge(k, n_k) is the upper bound.
  double edge(int k, std::size_t i) const;
  std::vector<std::size_t> multi_index(std::size_t cell) const;
  std::size_t linear_index(const std::vector<std::size_t>& multi) const;
  Eigen::VectorXd center(std::size_t cell) const;
  Eigen::VectorXd cell_lower(std::size_t cell) const;
  Eigen::VectorXd cell_upper(std::size_t cell) const;
  double cell_volume(std::size_t cell) const;
  Eigen::MatrixXd centers() const;

 private:
  friend Grid make_grid(const StateBox&, const std::vector<std::size_t>&, std::size_t);
  Grid(StateBox box, std::vector<std::size_t> cells);

  StateBox box_;
  std::vector<std::size_t> cells_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

Grid make_grid(const StateBox& box, const std::vector<std::size_t>& cells_per_dim,
               std::size_t cap = kDefaultGridCap);

/// Index of the cell containing `point`. Points on a shared face belong to the
/// cell with the smallest linear index. Outside the box: clamp when allowed,
/// otherwise throws ErrorCode::OutOfDomain.
std::size_t locate_cell(const Grid& grid, const Eigen::VectorXd& point, bool clamp = false);

enum class Provenance { Synthetic, Ingested };

struct PointCloud {
  Eigen::MatrixXd points;  // n x d, one point per row
  std::optional<std::vector<int>> labels;
  Provenance provenance = Provenance::Synthetic;

  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  int dim() const noexcept { return static_cast<int>(points.cols()); }
  /// Throws ShapeError when labels do not match the point count.
  void validate() const;
  PointCloud subset(const std::vector<std::size_t>& rows) const;
};

struct MixtureParams {
  int clusters = 3;
  int dim = 2;
  int points_per_cluster = 100;
  double spread = 0.03;
  double separation = 0.4;
};

/// Isotropic Gaussian clusters; centers drawn in the unit box with pairwise
/// distance >= separation. Points are ordered by cluster, labels 0..k-1.
PointCloud synth_mixture(const MixtureParams& params, std::uint64_t seed);

}  // namespace csmspec
