#include "csmspec/adiabatic.hpp"

#include "csmspec/error.hpp"
#include "csmspec/rng.hpp"
#include "csmspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csmspec {

double operator_norm(const Eigen::MatrixXd& m, NormKind kind) {
  return kind == NormKind::Spectral ? spectral_norm(m) : max_row_sum_norm(m);
}

double family_drift(const std::vector<Eigen::MatrixXd>& kernels, NormKind norm) {
  double eta = 0.0;
  for (std::size_t t = 0; t + 1 < kernels.size(); ++t)
    eta = std::max(eta, operator_norm(kernels[t + 1] - kernels[t], norm));
  return eta;
}

AdiabaticFamily make_adiabatic_family(const KernelMatrix& base, const KernelMatrix& target, int steps, NormKind norm) {
  require(base.P.rows() == target.P.rows() && base.P.cols() == target.P.cols(), ErrorCode::ShapeError,
          "base and target kernels differ in size");
  require(steps >= 2, ErrorCode::InvalidArgument, "an adiabatic family needs at least two steps");
  AdiabaticFamily fam;
  fam.norm = norm;
  fam.kernels.reserve(static_cast<std::size_t>(steps));
  const double last = static_cast<double>(steps - 1);
  for (int t = 0; t < steps; ++t) {
    if (t == 0) {
      fam.kernels.push_back(base.P);
    } else if (t == steps - 1) {
      fam.kernels.push_back(target.P);
    } else {
      const double w = static_cast<double>(t) / last;
      fam.kernels.push_back(base.P + w * (target.P - base.P));
    }
  }
  fam.eta = family_drift(fam.kernels, norm);
  return fam;
}

AdiabaticFamily family_with_drift(const KernelMatrix& base, const KernelMatrix& target, double eta, int min_steps,
                                  NormKind norm) {
  require(eta >= 0.0 && std::isfinite(eta), ErrorCode::InvalidArgument, "eta must be finite and >= 0");
  require(min_steps >= 1, ErrorCode::InvalidArgument, "min_steps must be >= 1");
  if (eta == 0.0) {
    AdiabaticFamily fam;
    fam.norm = norm;
    fam.kernels.assign(static_cast<std::size_t>(min_steps), base.P);
    return fam;
  }
  const double distance = operator_norm(target.P - base.P, norm);
  const double needed = std::ceil(distance / eta - 1e-12) + 1.0;
  require(needed < 1e7, ErrorCode::InvalidArgument, "eta too small for the endpoint distance");
  const int steps = std::max({min_steps, 2, static_cast<int>(needed)});
  return make_adiabatic_family(base, target, steps, norm);
}

AdiabaticError compare_adiabatic(const AdiabaticFamily& family, int n) {
  require(n >= 1 && static_cast<std::size_t>(n) <= family.length(), ErrorCode::InvalidArgument,
          "horizon must lie in [1, family length]");
  const auto N = family.kernels.front().rows();
  Eigen::MatrixXd product = Eigen::MatrixXd::Identity(N, N);
  Eigen::MatrixXd average = Eigen::MatrixXd::Zero(N, N);
  for (int t = 0; t < n; ++t) {
    product = family.kernels[static_cast<std::size_t>(t)] * product;
    average += family.kernels[static_cast<std::size_t>(t)];
  }
  average /= static_cast<double>(n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(N, N);
  for (int t = 0; t < n; ++t) power = average * power;

  AdiabaticError out;
  out.n = n;
  out.eta = family.eta;
  out.error = operator_norm(product - power, family.norm);
  out.ratio = family.eta > 0.0 ? out.error / (n * family.eta) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

GapReport uniform_gap_check(const AdiabaticFamily& family, std::size_t r, int workers) {
  require(family.length() >= 1, ErrorCode::InvalidArgument, "empty family");
  const auto N = static_cast<std::size_t>(family.kernels.front().rows());
  require(r >= 1 && r < N, ErrorCode::InvalidArgument, "rank must lie in [1, N)");

  GapReport rep;
  rep.gaps.assign(family.length(), 0.0);
  parallel_for(family.length(), workers, [&](std::size_t t) {
    const Eigen::VectorXcd ev = ordered_eigenvalues(family.kernels[t]);
    rep.gaps[t] = std::abs(ev[static_cast<Eigen::Index>(r - 1)]) - std::abs(ev[static_cast<Eigen::Index>(r)]);
  });
  rep.gamma = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < rep.gaps.size(); ++t) {
    if (rep.gaps[t] < rep.gamma) {
      rep.gamma = rep.gaps[t];
      rep.argmin = t;
    }
  }
  // Eigenvalue round-off: treat a gap within 1e-10 of zero as closed.
  rep.closed = rep.gamma <= 1e-10;
  if (rep.closed) rep.message = "gap closed at t=" + std::to_string(rep.argmin);
  return rep;
}

}  // namespace csmspec
