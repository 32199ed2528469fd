#include "csmspec/skeleton.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

namespace csmspec {

namespace {

void finalize_edges(SkeletonGraph& g) {
  g.edges.clear();
  const auto r = static_cast<Eigen::Index>(g.vertices);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      if (g.weights(i, j) > 0.0 && g.weights(i, j) >= g.threshold)
        g.edges.push_back({static_cast<int>(i) + 1, static_cast<int>(j) + 1, g.weights(i, j)});
}

void check_labeling(const BasinLabeling& labeling, std::size_t n) {
  require(labeling.size() == n, ErrorCode::ShapeError,
          "labeling covers " + std::to_string(labeling.size()) + " states, kernel has " + std::to_string(n));
  require(labeling.r >= 1, ErrorCode::EmptyRank);
  for (int l : labeling.labels)
    require(l >= 1 && static_cast<std::size_t>(l) <= labeling.r, ErrorCode::InvalidArgument, "basin label out of range");
}

}  // namespace

double SkeletonGraph::max_off_diagonal() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    for (Eigen::Index j = 0; j < weights.cols(); ++j)
      if (i != j) m = std::max(m, weights(i, j));
  return m;
}

bool SkeletonGraph::self_loops_only() const {
  return std::all_of(edges.begin(), edges.end(), [](const Edge& e) { return e.from == e.to; });
}

bool SkeletonGraph::acyclic_without_self_loops() const {
  std::vector<std::vector<int>> adj(vertices);
  for (const auto& e : edges)
    if (e.from != e.to) adj[static_cast<std::size_t>(e.from - 1)].push_back(e.to - 1);
  std::vector<int> state(vertices, 0);  // 0 new, 1 on path, 2 done
  std::function<bool(int)> has_cycle = [&](int v) {
    state[static_cast<std::size_t>(v)] = 1;
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (state[static_cast<std::size_t>(w)] == 1) return true;
      if (state[static_cast<std::size_t>(w)] == 0 && has_cycle(w)) return true;
    }
    state[static_cast<std::size_t>(v)] = 2;
    return false;
  };
  for (std::size_t v = 0; v < vertices; ++v)
    if (state[v] == 0 && has_cycle(static_cast<int>(v))) return false;
  return true;
}

std::string SkeletonGraph::to_dot() const {
  std::ostringstream os;
  os << "digraph skeleton {\n";
  std::vector<bool> touched(vertices, false);
  char buf[32];
  for (const auto& e : edges) {
    std::snprintf(buf, sizeof(buf), "%.3f", e.weight);
    os << "  " << e.from << " -> " << e.to << " [label=\"" << buf << "\"];\n";
    touched[static_cast<std::size_t>(e.from - 1)] = true;
    touched[static_cast<std::size_t>(e.to - 1)] = true;
  }
  for (std::size_t v = 0; v < vertices; ++v)
    if (!touched[v]) os << "  " << v + 1 << ";\n";
  os << "}\n";
  return os.str();
}

SkeletonGraph build_skeleton(const KernelMatrix& K, const BasinLabeling& labeling, const Eigen::VectorXd& mu,
                             double threshold) {
  const std::size_t n = K.size();
  check_labeling(labeling, n);
  require(mu.size() == static_cast<Eigen::Index>(n), ErrorCode::ShapeError, "stationary measure has wrong length");
  require(threshold >= 0.0, ErrorCode::InvalidArgument, "threshold must be >= 0");

  SkeletonGraph g;
  g.vertices = labeling.r;
  g.threshold = threshold;
  const auto r = static_cast<Eigen::Index>(labeling.r);
  g.weights = Eigen::MatrixXd::Zero(r, r);
  g.empty.assign(labeling.r, false);
  g.row_samples.assign(labeling.r, 0.0);

  std::vector<double> mass(labeling.r, 0.0);
  std::vector<std::size_t> members(labeling.r, 0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto b = static_cast<std::size_t>(labeling.labels[s] - 1);
    mass[b] += mu[static_cast<Eigen::Index>(s)];
    ++members[b];
  }

  for (std::size_t s = 0; s < n; ++s) {
    const auto b = static_cast<std::size_t>(labeling.labels[s] - 1);
    const double w = mass[b] > 0.0 ? mu[static_cast<Eigen::Index>(s)] / mass[b] : 1.0 / static_cast<double>(members[b]);
    if (w == 0.0) continue;
    const auto si = static_cast<Eigen::Index>(s);
    for (std::size_t t = 0; t < n; ++t) {
      const double k = K.P(si, static_cast<Eigen::Index>(t));
      if (k != 0.0) g.weights(static_cast<Eigen::Index>(b), labeling.labels[t] - 1) += w * k;
    }
  }
  for (std::size_t b = 0; b < labeling.r; ++b) {
    if (members[b] == 0) {
      g.empty[b] = true;
      g.warnings.push_back("basin " + std::to_string(b + 1) + " is empty");
    } else if (mass[b] <= 0.0) {
      g.warnings.push_back("basin " + std::to_string(b + 1) + " carries no stationary mass; uniform conditional used");
    }
  }
  finalize_edges(g);
  return g;
}

SkeletonGraph rollout_skeleton(const CSMSpec& spec, const Grid& grid, const BasinLabeling& labeling,
                               const RolloutOptions& options) {
  check_labeling(labeling, grid.size());
  require(options.horizon >= 1, ErrorCode::InvalidArgument, "horizon must be >= 1");
  require(options.n_rollouts >= 1, ErrorCode::InvalidArgument, "n_rollouts must be >= 1");
  require(grid.dim() == spec.dim(), ErrorCode::ShapeError, "grid dimension differs from the CSM state dimension");

  std::vector<double> weights(grid.size(), 1.0);
  if (options.start_weights) {
    require(options.start_weights->size() == static_cast<Eigen::Index>(grid.size()), ErrorCode::ShapeError,
            "start weights must have one entry per cell");
    require((options.start_weights->array() >= 0.0).all() && options.start_weights->sum() > 0.0,
            ErrorCode::InvalidArgument, "start weights must be nonnegative with positive total");
    for (std::size_t i = 0; i < grid.size(); ++i) weights[i] = (*options.start_weights)[static_cast<Eigen::Index>(i)];
  }

  const auto r = static_cast<Eigen::Index>(labeling.r);
  std::vector<Eigen::MatrixXd> counts(static_cast<std::size_t>(options.n_rollouts));
  parallel_for(counts.size(), options.workers, [&](std::size_t k) {
    Rng rng = make_rng(options.seed, k);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t cell = pick(rng);
    const Eigen::VectorXd lo = grid.cell_lower(cell);
    const Eigen::VectorXd width = grid.cell_upper(cell) - lo;
    Eigen::VectorXd s(grid.dim());
    for (int j = 0; j < grid.dim(); ++j) s[j] = lo[j] + width[j] * unit(rng);

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(r, r);
    std::size_t from_cell = cell;
    for (int t = 0; t < options.horizon; ++t) {
      const Eigen::VectorXd u = decode(spec, s, rng);
      s = step_deterministic(spec, s, u);
      const std::size_t to_cell = locate_cell(grid, s, /*clamp=*/true);
      c(labeling.labels[from_cell] - 1, labeling.labels[to_cell] - 1) += 1.0;
      from_cell = to_cell;
    }
    counts[k] = std::move(c);
  });

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(r, r);
  for (const auto& c : counts) total += c;

  SkeletonGraph g;
  g.vertices = labeling.r;
  g.threshold = options.threshold;
  g.weights = Eigen::MatrixXd::Zero(r, r);
  g.empty.assign(labeling.r, false);
  g.row_samples.assign(labeling.r, 0.0);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double n_i = total.row(i).sum();
    g.row_samples[static_cast<std::size_t>(i)] = n_i;
    if (n_i > 0.0) {
      g.weights.row(i) = total.row(i) / n_i;
    } else {
      g.empty[static_cast<std::size_t>(i)] = true;
    }
  }
  std::size_t reached = 0;
  for (Eigen::Index j = 0; j < r; ++j)
    if (total.col(j).sum() > 0.0 || total.row(j).sum() > 0.0) ++reached;
  if (reached <= 1) g.warnings.emplace_back("all rollouts confined to one basin");
  finalize_edges(g);
  return g;
}

}  // namespace csmspec
