#include "csmspec/state_space.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace csmspec {

StateBox::StateBox(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(lower_.size() >= 1, ErrorCode::ShapeError, "box dimension must be >= 1");
  require(lower_.size() == upper_.size(), ErrorCode::ShapeError, "bound vectors differ in length");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    require(std::isfinite(lower_[i]) && std::isfinite(upper_[i]) && lower_[i] < upper_[i],
            ErrorCode::InvalidArgument, "box requires lower < upper in every dimension");
  }
}

StateBox StateBox::cube(int d, double lo, double hi) {
  require(d >= 1, ErrorCode::ShapeError, "box dimension must be >= 1");
  return StateBox(Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi));
}

double StateBox::volume() const { return (upper_ - lower_).prod(); }

bool StateBox::contains(const Eigen::VectorXd& point) const {
  if (point.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < point.size(); ++i)
    if (!(point[i] >= lower_[i] && point[i] <= upper_[i])) return false;
  return true;
}

bool StateBox::contains(const StateBox& other) const {
  if (other.dim() != dim()) return false;
  return (other.lower_.array() >= lower_.array()).all() && (other.upper_.array() <= upper_.array()).all();
}

Eigen::VectorXd StateBox::clamp(const Eigen::VectorXd& point) const {
  require(point.size() == lower_.size(), ErrorCode::ShapeError, "point dimension differs from box");
  return point.cwiseMax(lower_).cwiseMin(upper_);
}

Grid::Grid(StateBox box, std::vector<std::size_t> cells)
    : box_(std::move(box)), cells_(std::move(cells)), strides_(cells_.size(), 1) {
  total_ = 1;
  for (std::size_t k = cells_.size(); k-- > 0;) {
    strides_[k] = total_;
    total_ *= cells_[k];
  }
}

double Grid::edge(int k, std::size_t i) const {
  const double lo = box_.lower()[k];
  const double hi = box_.upper()[k];
  const auto n = cells_[static_cast<std::size_t>(k)];
  if (i == 0) return lo;
  if (i == n) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
}

std::vector<std::size_t> Grid::multi_index(std::size_t cell) const {
  require(cell < total_, ErrorCode::InvalidArgument, "cell index out of range");
  std::vector<std::size_t> m(cells_.size());
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    m[k] = cell / strides_[k];
    cell %= strides_[k];
  }
  return m;
}

std::size_t Grid::linear_index(const std::vector<std::size_t>& multi) const {
  require(multi.size() == cells_.size(), ErrorCode::ShapeError, "multi-index rank differs from grid");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    require(multi[k] < cells_[k], ErrorCode::InvalidArgument, "multi-index out of range");
    idx += multi[k] * strides_[k];
  }
  return idx;
}

Eigen::VectorXd Grid::cell_lower(std::size_t cell) const {
  const auto m = multi_index(cell);
  Eigen::VectorXd v(dim());
  for (int k = 0; k < dim(); ++k) v[k] = edge(k, m[static_cast<std::size_t>(k)]);
  return v;
}

Eigen::VectorXd Grid::cell_upper(std::size_t cell) const {
  const auto m = multi_index(cell);
  Eigen::VectorXd v(dim());
  for (int k = 0; k < dim(); ++k) v[k] = edge(k, m[static_cast<std::size_t>(k)] + 1);
  return v;
}

Eigen::VectorXd Grid::center(std::size_t cell) const {
  return 0.5 * (cell_lower(cell) + cell_upper(cell));
}

double Grid::cell_volume(std::size_t cell) const { return (cell_upper(cell) - cell_lower(cell)).prod(); }

Eigen::MatrixXd Grid::centers() const {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(total_), dim());
  for (std::size_t i = 0; i < total_; ++i) c.row(static_cast<Eigen::Index>(i)) = center(i).transpose();
  return c;
}

Grid make_grid(const StateBox& box, const std::vector<std::size_t>& cells_per_dim, std::size_t cap) {
  require(cells_per_dim.size() == static_cast<std::size_t>(box.dim()), ErrorCode::ShapeError,
          "cells_per_dim has " + std::to_string(cells_per_dim.size()) + " entries for a " +
              std::to_string(box.dim()) + "-d box");
  std::size_t total = 1;
  for (auto n : cells_per_dim) {
    require(n >= 1, ErrorCode::InvalidArgument, "every dimension needs at least one cell");
    require(total <= cap / n, ErrorCode::GridTooLarge,
            "cell count exceeds cap " + std::to_string(cap));
    total *= n;
  }
  return Grid(box, cells_per_dim);
}

std::size_t locate_cell(const Grid& grid, const Eigen::VectorXd& point, bool clamp) {
  require(point.size() == grid.dim(), ErrorCode::ShapeError, "point dimension differs from grid");
  Eigen::VectorXd p = point;
  if (!grid.box().contains(p)) {
    require(clamp && p.allFinite(), ErrorCode::OutOfDomain, "point lies outside the box");
    p = grid.box().clamp(p);
  }
  std::vector<std::size_t> m(static_cast<std::size_t>(grid.dim()));
  for (int k = 0; k < grid.dim(); ++k) {
    const auto n = grid.cells_per_dim()[static_cast<std::size_t>(k)];
    const double lo = grid.box().lower()[k];
    const double hi = grid.box().upper()[k];
    const double t = (p[k] - lo) / (hi - lo) * static_cast<double>(n);
    // ceil(t) - 1 puts shared faces in the lower slab; then reconcile with the
    // exact edge formula so results match a membership scan bit for bit.
    auto i = static_cast<std::ptrdiff_t>(std::ceil(t)) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
    auto idx = static_cast<std::size_t>(i);
    while (idx > 0 && p[k] <= grid.edge(k, idx)) --idx;
    while (idx + 1 < n && p[k] > grid.edge(k, idx + 1)) ++idx;
    m[static_cast<std::size_t>(k)] = idx;
  }
  return grid.linear_index(m);
}

void PointCloud::validate() const {
  require(points.rows() >= 1 && points.cols() >= 1, ErrorCode::ShapeError, "point cloud is empty");
  if (labels) {
    require(labels->size() == size(), ErrorCode::ShapeError, "label count differs from point count");
  }
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& rows) const {
  PointCloud out;
  out.provenance = provenance;
  out.points.resize(static_cast<Eigen::Index>(rows.size()), points.cols());
  if (labels) out.labels.emplace();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < size(), ErrorCode::InvalidArgument, "subset row out of range");
    out.points.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(rows[i]));
    if (labels) out.labels->push_back((*labels)[rows[i]]);
  }
  return out;
}

PointCloud synth_mixture(const MixtureParams& params, std::uint64_t seed) {
  require(params.clusters >= 1 && params.dim >= 1 && params.points_per_cluster >= 1,
          ErrorCode::InvalidArgument, "synth_mixture needs k, d, n_per >= 1");
  require(params.spread > 0.0 && params.separation > 0.0, ErrorCode::InvalidArgument,
          "spread and separation must be positive");

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int k = params.clusters;
  const int d = params.dim;

  constexpr int kRestarts = 200;
  constexpr int kAttemptsPerCenter = 1000;
  Eigen::MatrixXd centers(k, d);
  bool placed = false;
  for (int restart = 0; restart < kRestarts && !placed; ++restart) {
    int count = 0;
    for (int attempt = 0; attempt < kAttemptsPerCenter * k && count < k; ++attempt) {
      Eigen::VectorXd c(d);
      for (int j = 0; j < d; ++j) c[j] = unit(rng);
      bool ok = true;
      for (int m = 0; m < count && ok; ++m) ok = (centers.row(m).transpose() - c).norm() >= params.separation;
      if (ok) centers.row(count++) = c.transpose();
    }
    placed = (count == k);
  }
  require(placed, ErrorCode::SeparationInfeasible,
          "cannot place " + std::to_string(k) + " centers at separation " + std::to_string(params.separation));

  std::normal_distribution<double> noise(0.0, params.spread);
  PointCloud cloud;
  cloud.provenance = Provenance::Synthetic;
  const Eigen::Index n = static_cast<Eigen::Index>(k) * params.points_per_cluster;
  cloud.points.resize(n, d);
  cloud.labels.emplace();
  cloud.labels->reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    for (int p = 0; p < params.points_per_cluster; ++p, ++row) {
      for (int j = 0; j < d; ++j) cloud.points(row, j) = centers(c, j) + noise(rng);
      cloud.labels->push_back(c);
    }
  }
  return cloud;
}

}  // namespace csmspec
