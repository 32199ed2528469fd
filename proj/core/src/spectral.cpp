#include "csmspec/spectral.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>
#include <numeric>

namespace csmspec {

namespace {

using cd = std::complex<double>;

// Modulus descending; near-equal moduli ordered by real part, then imaginary part.
std::vector<Eigen::Index> modulus_order(const Eigen::VectorXcd& values) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values[a]) > std::abs(values[b]); });
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start + 1;
    const double m0 = std::abs(values[idx[start]]);
    while (end < idx.size() && m0 - std::abs(values[idx[end]]) <= 1e-10 * std::max(1.0, m0)) ++end;
    std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](Eigen::Index a, Eigen::Index b) {
                       const cd x = values[a], y = values[b];
                       if (std::abs(x.real() - y.real()) > 1e-10 * std::max(1.0, m0)) return x.real() > y.real();
                       return x.imag() > y.imag();
                     });
    start = end;
  }
  return idx;
}

// Unit 2-norm right vector, largest-modulus entry real positive; left vector
// rescaled to keep left^H right = 1.
void normalize_pair(Eigen::Ref<Eigen::VectorXcd> right, Eigen::Ref<Eigen::VectorXcd> left) {
  const double norm = right.norm();
  if (norm > 0.0) {
    right /= norm;
    left *= norm;
  }
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < right.size(); ++i) {
    const double m = std::abs(right[i]);
    if (m > best * (1.0 + 1e-12)) {
      best = m;
      arg = i;
    }
  }
  if (best > 0.0) {
    const cd phase = std::conj(right[arg]) / best;
    right *= phase;
    left *= phase;
    right[arg] = cd(right[arg].real(), 0.0);
  }
}

double matrix_two_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

double gram_residual(const SpectralDecomposition& dec, Eigen::Index k) {
  const Eigen::MatrixXcd gram = dec.left.leftCols(k).adjoint() * dec.right.leftCols(k);
  return (gram - Eigen::MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff();
}

void finish(SpectralDecomposition& dec, double tol, bool truncate = false) {
  const auto k = dec.values.size();
  for (Eigen::Index i = 0; i < k; ++i) normalize_pair(dec.right.col(i), dec.left.col(i));
  dec.biorthogonality_residual = gram_residual(dec, k);
  if (truncate && !(dec.biorthogonality_residual <= tol)) {
    Eigen::Index keep = k - 1;
    while (keep > 1 && !(gram_residual(dec, keep) <= tol)) --keep;
    // Never split a conjugate pair.
    while (keep > 1 && std::abs(dec.values[keep] - std::conj(dec.values[keep - 1])) <= 1e-12 &&
           dec.values[keep].imag() != 0.0)
      --keep;
    if (keep >= 1 && gram_residual(dec, keep) <= tol) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "retained %ld of %ld modes: biorthogonality residual %.3g", static_cast<long>(keep),
                    static_cast<long>(k), dec.biorthogonality_residual);
      if (!dec.truncation.empty()) dec.truncation += "; ";
      dec.truncation += buf;
      dec.values.conservativeResize(keep);
      dec.right.conservativeResize(Eigen::NoChange, keep);
      dec.left.conservativeResize(Eigen::NoChange, keep);
      dec.biorthogonality_residual = gram_residual(dec, keep);
    }
  }
  dec.conditioning = matrix_two_norm(dec.right) * matrix_two_norm(dec.left);
  if (!(dec.biorthogonality_residual <= tol)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "biorthogonality residual %.3g", dec.biorthogonality_residual);
    throw Error(ErrorCode::IllConditionedSpectrum, buf);
  }
}

SpectralDecomposition companion_path(const KernelMatrix& K, std::size_t k, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*K.symmetric_companion);
  require(es.info() == Eigen::Success, ErrorCode::IllConditionedSpectrum, "symmetric eigensolver failed");
  const Eigen::VectorXcd values = es.eigenvalues().cast<cd>();
  const auto order = modulus_order(values);
  const Eigen::VectorXd& dsqrt = *K.degree_sqrt;

  SpectralDecomposition dec;
  dec.from_companion = true;
  const auto n = static_cast<Eigen::Index>(K.size());
  const auto kk = static_cast<Eigen::Index>(k);
  dec.values.resize(kk);
  dec.right.resize(n, kk);
  dec.left.resize(n, kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const Eigen::VectorXd u = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    dec.values[i] = values[order[static_cast<std::size_t>(i)]];
    dec.right.col(i) = (u.array() / dsqrt.array()).matrix().cast<cd>();
    dec.left.col(i) = (u.array() * dsqrt.array()).matrix().cast<cd>();
  }
  finish(dec, tol);
  return dec;
}

SpectralDecomposition general_path(const KernelMatrix& K, std::size_t k, const EigenOptions& options) {
  const Eigen::MatrixXd& P = K.P;
  const auto n = P.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::EigenSolver<Eigen::MatrixXd> es(P, /*computeEigenvectors=*/true);
  require(es.info() == Eigen::Success, ErrorCode::IllConditionedSpectrum, "eigensolver did not converge");
  Eigen::EigenSolver<Eigen::MatrixXd> est(P.transpose(), /*computeEigenvectors=*/true);
  require(est.info() == Eigen::Success, ErrorCode::IllConditionedSpectrum, "eigensolver did not converge");

  const Eigen::VectorXcd raw_values = es.eigenvalues();
  const auto order = modulus_order(raw_values);
  Eigen::VectorXcd values(n);
  for (Eigen::Index i = 0; i < n; ++i) values[i] = raw_values[order[static_cast<std::size_t>(i)]];
  const Eigen::VectorXcd tvalues = est.eigenvalues();
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  const double scale = std::max(1.0, P.cwiseAbs().rowwise().sum().maxCoeff());
  std::vector<cd> vals;
  std::vector<Eigen::VectorXcd> rights;
  std::vector<Eigen::VectorXcd> lefts;
  std::string truncation;

  Eigen::Index start = 0;
  while (start < kk) {
    Eigen::Index end = start + 1;
    while (end < n && std::abs(values[end] - values[start]) <= 1e-8 * std::max(1.0, std::abs(values[start]))) ++end;
    const Eigen::Index m = end - start;
    cd lambda = values.segment(start, m).mean();
    std::string failure;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;

    if (m == 1) {
      right = es.eigenvectors().col(order[static_cast<std::size_t>(start)]);
      Eigen::Index match = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = std::abs(tvalues[j] - lambda);
        if (!used[static_cast<std::size_t>(j)] && d < best) {
          best = d;
          match = j;
        }
      }
      used[static_cast<std::size_t>(match)] = true;
      left = est.eigenvectors().col(match).conjugate();
      const cd overlap = (left.adjoint() * right)(0, 0);
      const double cosine = std::abs(overlap) / (left.norm() * right.norm());
      if (!(cosine > 1e-10)) {
        failure = "eigenvalue " + std::to_string(lambda.real()) + (lambda.imag() != 0.0 ? "+" + std::to_string(lambda.imag()) + "i" : "") +
                  " has condition number " + std::to_string(1.0 / cosine);
      } else {
        left /= std::conj(overlap);
      }
    } else {
      // Repeated eigenvalue: orthonormal null spaces of P - lambda I on both sides.
      const bool real = std::abs(lambda.imag()) <= 1e-12 * scale;
      Eigen::MatrixXcd U_c;
      Eigen::MatrixXcd V_c;
      double sigma_m = 0.0;
      if (real) {
        lambda = cd(lambda.real(), 0.0);
        Eigen::MatrixXd shifted = P - lambda.real() * Eigen::MatrixXd::Identity(n, n);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullU | Eigen::ComputeFullV);
        U_c = svd.matrixU().rightCols(m).cast<cd>();
        V_c = svd.matrixV().rightCols(m).cast<cd>();
        sigma_m = svd.singularValues()(n - m);
      } else {
        Eigen::MatrixXcd shifted = P.cast<cd>() - lambda * Eigen::MatrixXcd::Identity(n, n);
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullU | Eigen::ComputeFullV);
        U_c = svd.matrixU().rightCols(m);
        V_c = svd.matrixV().rightCols(m);
        sigma_m = svd.singularValues()(n - m);
      }
      const Eigen::MatrixXcd G = U_c.adjoint() * V_c;
      Eigen::JacobiSVD<Eigen::MatrixXcd> gsvd(G);
      const double g_min = gsvd.singularValues()(m - 1);
      if (sigma_m > 1e-6 * scale || !(g_min > 1e-10)) {
        failure = "defective eigenvalue cluster of size " + std::to_string(m) + " at " + std::to_string(std::abs(lambda)) +
                  " (null-space residual " + std::to_string(sigma_m) + ")";
      } else {
        right = V_c;
        left = U_c * G.inverse().adjoint();
      }
    }

    if (!failure.empty()) {
      if (options.truncate_ill_conditioned && !vals.empty()) {
        truncation = "retained " + std::to_string(vals.size()) + " of " + std::to_string(k) + " modes: " + failure;
        break;
      }
      throw Error(ErrorCode::IllConditionedSpectrum, failure);
    }
    for (Eigen::Index c = 0; c < m && start + c < kk; ++c) {
      vals.push_back(lambda);
      rights.emplace_back(right.col(c));
      lefts.emplace_back(left.col(c));
    }
    start = end;
  }

  SpectralDecomposition dec;
  const auto kept = static_cast<Eigen::Index>(vals.size());
  dec.values.resize(kept);
  dec.right.resize(n, kept);
  dec.left.resize(n, kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    dec.values[i] = vals[static_cast<std::size_t>(i)];
    dec.right.col(i) = rights[static_cast<std::size_t>(i)];
    dec.left.col(i) = lefts[static_cast<std::size_t>(i)];
  }
  dec.truncation = truncation;
  finish(dec, options.biorthogonality_tol, options.truncate_ill_conditioned);
  return dec;
}

}  // namespace

bool SpectralDecomposition::is_real(double tol) const {
  return values.imag().cwiseAbs().maxCoeff() <= tol && right.imag().cwiseAbs().maxCoeff() <= tol;
}

Eigen::VectorXcd ordered_eigenvalues(const Eigen::MatrixXd& m) {
  require(m.rows() == m.cols() && m.rows() >= 1, ErrorCode::ShapeError, "matrix must be square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  require(es.info() == Eigen::Success, ErrorCode::IllConditionedSpectrum, "eigensolver did not converge");
  const Eigen::VectorXcd raw = es.eigenvalues();
  const auto order = modulus_order(raw);
  Eigen::VectorXcd out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) out[i] = raw[order[static_cast<std::size_t>(i)]];
  return out;
}

SpectralDecomposition eigendecompose(const KernelMatrix& K, std::size_t k, const EigenOptions& options) {
  require(K.size() >= 1 && K.P.rows() == K.P.cols(), ErrorCode::ShapeError, "kernel must be square");
  require(k >= 1 && k <= K.size(), ErrorCode::InvalidArgument, "requested modes must lie in [1, N]");
  if (options.use_companion && K.symmetric_companion && K.degree_sqrt)
    return companion_path(K, k, options.biorthogonality_tol);
  return general_path(K, k, options);
}

RankSelection select_rank(const SpectralDecomposition& dec, const RankOptions& options) {
  const std::size_t k = dec.modes();
  require(k >= 3, ErrorCode::InvalidArgument, "rank selection needs at least three modes");
  RankSelection sel;

  std::size_t above = 0;
  while (above < k && dec.modulus(above) > options.epsilon) ++above;
  if (above == 0)
    throw Error(ErrorCode::NoSignificantSpectrum, "no eigenvalue modulus exceeds " + std::to_string(options.epsilon));

  auto ratio = [&](std::size_t i) {  // |lambda_i| / |lambda_{i+1}|, 0-based i
    const double next = dec.modulus(i + 1);
    return next > 0.0 ? dec.modulus(i) / next : std::numeric_limits<double>::infinity();
  };

  if (options.method == RankMethod::Threshold) {
    sel.r = above;
  } else {
    const std::size_t last = std::min(above, k - 1);
    double best = -1.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
      const double q = ratio(i);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
      if (q > best) {
        best = q;
        sel.r = i + 1;
      }
    }
    if (last == 0 || (std::isfinite(hi) && hi - lo <= 1e-12 * hi)) {
      sel.no_gap = true;
      sel.r = above;
    }
  }
  if (sel.r < k && dec.modulus(sel.r - 1) > 0.0) sel.gap_ratio = dec.modulus(sel.r) / dec.modulus(sel.r - 1);
  return sel;
}

CollapseReport verify_collapse(const KernelMatrix& K, const SpectralDecomposition& dec, std::size_t r,
                               const CollapseOptions& options) {
  const std::size_t n = K.size();
  require(dec.size() == n, ErrorCode::ShapeError, "decomposition does not match the kernel");
  require(r >= 1 && r <= n, ErrorCode::InvalidArgument, "rank must lie in [1, N]");
  require(r <= dec.modes(), ErrorCode::InvalidArgument, "rank exceeds the retained modes");
  require(options.t_max >= 3 && options.n_probes >= 1, ErrorCode::InvalidArgument, "t_max >= 3 and n_probes >= 1 required");

  CollapseReport rep;
  rep.r = r;
  rep.conditioning = dec.conditioning;
  const bool have_next = r < dec.modes();
  if (have_next) {
    const double next = dec.modulus(r);
    rep.rate_slope = std::log(next);
    rep.reference_slope = std::log(next / dec.modulus(r - 1));
  }

  const auto N = static_cast<Eigen::Index>(n);
  const auto R = static_cast<Eigen::Index>(r);
  const std::size_t T = static_cast<std::size_t>(options.t_max) + 1;
  const Eigen::MatrixXcd Phi = dec.right.leftCols(R);
  const Eigen::MatrixXcd Psi = dec.left.leftCols(R);
  const Eigen::VectorXcd lambda = dec.values.head(R);

  std::vector<std::vector<double>> per_probe(static_cast<std::size_t>(options.n_probes), std::vector<double>(T));
  parallel_for(per_probe.size(), options.workers, [&](std::size_t p) {
    Rng rng = make_rng(options.seed, p);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd f(N);
    for (Eigen::Index i = 0; i < N; ++i) f[i] = g(rng);
    f /= f.norm();
    const Eigen::VectorXcd coeff = Psi.adjoint() * f.cast<cd>();
    Eigen::VectorXd pf = f;
    Eigen::VectorXcd lt = Eigen::VectorXcd::Ones(R);
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) {
        pf = K.P * pf;
        lt = lt.cwiseProduct(lambda);
      }
      const Eigen::VectorXcd approx = Phi * lt.cwiseProduct(coeff);
      per_probe[p][t] = (pf.cast<cd>() - approx).norm();
    }
  });

  rep.mean_residual.assign(T, 0.0);
  rep.max_residual.assign(T, 0.0);
  for (const auto& probe : per_probe) {
    for (std::size_t t = 0; t < T; ++t) {
      rep.mean_residual[t] += probe[t];
      rep.max_residual[t] = std::max(rep.max_residual[t], probe[t]);
    }
  }
  for (auto& v : rep.mean_residual) v /= static_cast<double>(per_probe.size());

  // Least-squares slope of log residual against t, above the floating-point
  // floor taken relative to the initial residual.
  const double floor = options.floor * std::max(1.0, rep.mean_residual[0]);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t t = 0; t < T; ++t) {
    if (rep.mean_residual[t] <= floor) continue;
    const double x = static_cast<double>(t);
    const double y = std::log(rep.mean_residual[t]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  rep.fit_points = m;
  if (m < 2) {
    rep.exact_collapse = true;
    rep.fitted_slope = -std::numeric_limits<double>::infinity();
  } else {
    rep.fitted_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }

  if (have_next && dec.modulus(r) > 0.0) {
    double z = 0.0;
    const double next = dec.modulus(r);
    for (std::size_t t = 0; t < T; ++t) {
      if (rep.max_residual[t] <= options.floor) continue;
      z = std::max(z, rep.max_residual[t] / std::pow(next, static_cast<double>(t)));
    }
    rep.prefactor = z;
  }
  return rep;
}

SpectralCoordinates spectral_coordinates(const SpectralDecomposition& dec, std::size_t r) {
  require(r >= 1 && r <= dec.modes(), ErrorCode::InvalidArgument, "rank must lie in [1, modes]");
  SpectralCoordinates out;
  out.coords = dec.right.leftCols(static_cast<Eigen::Index>(r)).real();
  out.trivial.resize(r);
  for (std::size_t j = 0; j < r; ++j) {
    const auto col = out.coords.col(static_cast<Eigen::Index>(j));
    out.trivial[j] = (col.maxCoeff() - col.minCoeff()) <= 1e-6 * std::max(1.0, col.cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace csmspec
