#include "csmspec/operators.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stack>

namespace csmspec {

std::string to_string(KernelSource source) {
  switch (source) {
    case KernelSource::Ulam: return "ulam";
    case KernelSource::Diffusion: return "diffusion";
    case KernelSource::Explicit: return "explicit";
  }
  return "explicit";
}

std::string to_string(DiffusionVariant variant) {
  return variant == DiffusionVariant::Squared ? "squared" : "plain";
}

KernelMatrix KernelMatrix::from_matrix(Eigen::MatrixXd P, double tol) {
  require(P.rows() >= 1 && P.rows() == P.cols(), ErrorCode::ShapeError, "kernel must be square and non-empty");
  require(P.allFinite() && (P.array() >= 0.0).all(), ErrorCode::InvalidArgument, "kernel entries must be finite and >= 0");
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const double s = P.row(i).sum();
    require(std::abs(s - 1.0) <= tol, ErrorCode::InvalidArgument,
            "row " + std::to_string(i) + " sums to " + std::to_string(s));
    P.row(i) /= s;
  }
  KernelMatrix K;
  K.P = std::move(P);
  K.source = KernelSource::Explicit;
  return K;
}

double KernelMatrix::row_sum_error() const {
  return (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

KernelMatrix random_kernel(std::size_t n, std::uint64_t seed, double delta) {
  require(n >= 1, ErrorCode::InvalidArgument, "kernel size must be >= 1");
  require(delta >= 0.0 && delta <= 1.0, ErrorCode::InvalidArgument, "mixing weight must lie in [0, 1]");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd R(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) R(i, j) = u(rng) + 1e-12;
  R.array().colwise() /= R.rowwise().sum().array();
  R = (1.0 - delta) * R + Eigen::MatrixXd::Constant(N, N, delta / static_cast<double>(n));
  auto K = KernelMatrix::from_matrix(std::move(R));
  K.seed = seed;
  return K;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double max_row_sum_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

KernelMatrix ulam_kernel(const CSMSpec& spec, const Grid& grid, int samples_per_cell, std::uint64_t seed,
                         const UlamOptions& options) {
  require(samples_per_cell >= 1, ErrorCode::InvalidArgument, "samples_per_cell must be >= 1");
  require(grid.dim() == spec.dim(), ErrorCode::ShapeError, "grid dimension differs from the CSM state dimension");

  const std::size_t n = grid.size();
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  std::vector<char> all_escaped(n, 0);

  parallel_for(n, options.workers, [&](std::size_t cell) {
    Rng rng = make_rng(seed, cell);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::VectorXd lo = grid.cell_lower(cell);
    const Eigen::VectorXd width = grid.cell_upper(cell) - lo;
    Eigen::VectorXd s(grid.dim());
    std::vector<std::size_t> hits(n, 0);
    std::size_t kept = 0;
    for (int k = 0; k < samples_per_cell; ++k) {
      for (int j = 0; j < grid.dim(); ++j) s[j] = lo[j] + width[j] * unit(rng);
      const Eigen::VectorXd u = decode(spec, s, rng);
      const Eigen::VectorXd image = step_deterministic(spec, s, u);
      if (!grid.box().contains(image)) {
        if (options.escape == EscapePolicy::Error)
          throw Error(ErrorCode::DomainEscape, "image of cell " + std::to_string(cell) + " leaves the grid");
        if (options.escape == EscapePolicy::SelfLoop) continue;
      }
      ++hits[locate_cell(grid, image, /*clamp=*/true)];
      ++kept;
    }
    const auto row = static_cast<Eigen::Index>(cell);
    if (kept == 0) {
      P(row, row) = 1.0;
      all_escaped[cell] = 1;
      return;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (hits[j]) P(row, static_cast<Eigen::Index>(j)) = static_cast<double>(hits[j]) / static_cast<double>(kept);
  });

  KernelMatrix K;
  K.P = std::move(P);
  K.source = KernelSource::Ulam;
  K.grid = grid;
  K.seed = seed;
  for (std::size_t c = 0; c < n; ++c)
    if (all_escaped[c]) K.warnings.push_back("domain escape: every sample of cell " + std::to_string(c) + " left the grid; self-loop kept");
  return K;
}

double median_pairwise_distance(const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  require(n >= 2, ErrorCode::InvalidArgument, "median distance needs at least two points");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((points.row(i) - points.row(j)).norm());
  const std::size_t m = d.size();
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m / 2), d.end());
  const double upper = d[m / 2];
  if (m % 2 == 1) return upper;
  const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m / 2));
  return 0.5 * (lower + upper);
}

KernelMatrix diffusion_kernel(const PointCloud& cloud, const DiffusionOptions& options) {
  cloud.validate();
  const Eigen::Index n = cloud.points.rows();
  require(n >= 2, ErrorCode::InvalidArgument, "diffusion kernel needs at least two points");

  KernelMatrix K;
  K.source = KernelSource::Diffusion;
  K.variant = options.variant;

  double sigma = 0.0;
  if (options.bandwidth) {
    sigma = *options.bandwidth;
    require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::InvalidArgument, "bandwidth must be > 0");
  } else {
    sigma = median_pairwise_distance(cloud.points);
    if (!(sigma > 0.0)) {
      K.warnings.emplace_back("degenerate kernel: median pairwise distance is zero, bandwidth set to 1");
      sigma = 1.0;
    }
  }
  K.bandwidth = sigma;

  Eigen::MatrixXd W(n, n);
  std::vector<char> row_has_distance(static_cast<std::size_t>(n), 0);
  const bool squared = options.variant == DiffusionVariant::Squared;
  parallel_for(static_cast<std::size_t>(n), options.workers, [&](std::size_t ii) {
    const auto i = static_cast<Eigen::Index>(ii);
    W(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (cloud.points.row(i) - cloud.points.row(j)).norm();
      if (d > 0.0) row_has_distance[ii] = 1;
      const double w = squared ? std::exp(-d * d / (2.0 * sigma * sigma)) : std::exp(-d / sigma);
      W(i, j) = w;
      W(j, i) = w;
    }
  });
  if (std::none_of(row_has_distance.begin(), row_has_distance.end(), [](char c) { return c != 0; }))
    K.warnings.emplace_back("degenerate kernel: all points coincide");

  Eigen::VectorXd degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += W(i, j);
    degree[i] = s;
  }
  const Eigen::VectorXd dsqrt = degree.array().sqrt().matrix();

  K.P.resize(n, n);
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.P(i, j) = W(i, j) / degree[i];
      S(i, j) = W(i, j) / (dsqrt[i] * dsqrt[j]);
    }
  }
  K.symmetric_companion = std::move(S);
  K.degree_sqrt = dsqrt;
  return K;
}

KernelMatrix lazy_kernel(const KernelMatrix& K, double beta) {
  require(beta > 0.0 && beta <= 1.0, ErrorCode::InvalidArgument, "lazy smoothing needs beta in (0,1]");
  KernelMatrix out = K;
  const auto n = static_cast<Eigen::Index>(K.size());
  out.P = (1.0 - beta) * Eigen::MatrixXd::Identity(n, n) + beta * K.P;
  if (K.symmetric_companion) {
    // D^{-1/2}((1-b)I + bP)D^{1/2} = (1-b)I + bS, still symmetric.
    out.symmetric_companion = (1.0 - beta) * Eigen::MatrixXd::Identity(n, n) + beta * *K.symmetric_companion;
  }
  out.stationary.reset();
  return out;
}

namespace {

// Iterative Tarjan; returns component id per vertex (ids in reverse topological order).
std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<std::pair<int, std::size_t>> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < adj[v].size()) {
        const int w = adj[v][pos++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        const int done = v;
        call.pop_back();
        if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
        if (low[done] == index[done]) {
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = ncomp;
          } while (w != done);
          ++ncomp;
        }
      }
    }
  }
  return comp;
}

}  // namespace

int chain_period(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (P(i, j) > 0.0) adj[i].push_back(j);
  const auto comp = strongly_connected(adj);
  const int ncomp = n == 0 ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;

  std::vector<char> closed(ncomp, 1);
  for (int v = 0; v < n; ++v)
    for (int w : adj[v])
      if (comp[w] != comp[v]) closed[comp[v]] = 0;

  int period = 1;
  std::vector<int> level(n, -1);
  for (int c = 0; c < ncomp; ++c) {
    if (!closed[c]) continue;
    int root = -1;
    for (int v = 0; v < n && root < 0; ++v)
      if (comp[v] == c) root = v;
    std::vector<int> queue{root};
    level[root] = 0;
    int g = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int v = queue[q];
      for (int w : adj[v]) {
        if (comp[w] != c) continue;
        if (level[w] < 0) {
          level[w] = level[v] + 1;
          queue.push_back(w);
        } else {
          g = std::gcd(g, std::abs(level[v] + 1 - level[w]));
        }
      }
    }
    if (g > 1) period = std::max(period, g);
  }
  return period;
}

Eigen::VectorXd stationary_distribution(const KernelMatrix& K, const StationaryOptions& options) {
  require(K.size() >= 1, ErrorCode::ShapeError, "empty kernel");
  require(options.tol > 0.0 && options.max_iters >= 1, ErrorCode::InvalidArgument, "tol/max_iters out of range");
  const KernelMatrix chain = options.lazy ? lazy_kernel(K, options.beta) : K;

  const int period = chain_period(chain.P);
  if (period > 1)
    throw Error(ErrorCode::NoSpectralConvergence,
                "recurrent class has period " + std::to_string(period) + "; enable lazy smoothing");

  const auto n = static_cast<Eigen::Index>(chain.size());
  const Eigen::MatrixXd Pt = chain.P.transpose();
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < options.max_iters; ++it) {
    Eigen::VectorXd next = Pt * mu;
    next /= next.sum();
    const double change = (next - mu).lpNorm<1>();
    mu = std::move(next);
    if (change < options.tol) return mu;
  }
  throw Error(ErrorCode::NoSpectralConvergence,
              "power iteration did not converge in " + std::to_string(options.max_iters) + " iterations");
}

double doeblin_check(const KernelMatrix& K, const ReferenceMeasure& nu) {
  require(nu.size() == static_cast<Eigen::Index>(K.size()), ErrorCode::ShapeError, "reference measure has wrong length");
  require((nu.array() >= 0.0).all() && std::abs(nu.sum() - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          "reference measure must be a probability vector");
  double eps = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (nu[j] <= 0.0) continue;
    for (Eigen::Index i = 0; i < K.P.rows(); ++i) eps = std::min(eps, K.P(i, j) / nu[j]);
  }
  return std::isfinite(eps) ? std::max(eps, 0.0) : 0.0;
}

KernelMatrix finite_horizon_propagator(const KernelMatrix& K, int tau) {
  require(tau >= 1, ErrorCode::InvalidArgument, "tau must be >= 1");
  const auto n = static_cast<Eigen::Index>(K.size());
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = power;
  for (int t = 1; t < tau; ++t) {
    power = power * K.P;
    sum += power;
  }
  sum /= static_cast<double>(tau);
  KernelMatrix out = KernelMatrix::from_matrix(std::move(sum));
  out.grid = K.grid;
  return out;
}

}  // namespace csmspec
