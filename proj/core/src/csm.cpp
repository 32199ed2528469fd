#include "csmspec/csm.hpp"

#include "csmspec/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace csmspec {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* name) {
  require(m.allFinite(), ErrorCode::InvalidArgument, std::string(name) + " has non-finite entries");
}

double two_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

void check_simplex(const Eigen::VectorXd& u, int vocab) {
  require(u.size() == vocab, ErrorCode::ShapeError, "control has wrong length");
  require((u.array() >= 0.0).all() && std::abs(u.sum() - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          "control is not on the probability simplex");
}

}  // namespace

CSMSpec::CSMSpec(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd logits, DecoderMode decoder,
                 double sigma_dec, Eigen::VectorXd s0, std::optional<StateBox> box)
    : A_(std::move(A)),
      B_(std::move(B)),
      logits_(std::move(logits)),
      decoder_(decoder),
      sigma_dec_(sigma_dec),
      s0_(std::move(s0)),
      box_(box ? *box : StateBox::cube(static_cast<int>(std::max<Eigen::Index>(A_.rows(), 1)), -1.0, 1.0)) {
  const auto d = A_.rows();
  require(d >= 1 && A_.cols() == d, ErrorCode::ShapeError, "A must be square d x d");
  require(B_.rows() == d && B_.cols() >= 1, ErrorCode::ShapeError, "B must be d x |X|");
  require(logits_.rows() == B_.cols() && logits_.cols() == d, ErrorCode::ShapeError, "logits must be |X| x d");
  require(s0_.size() == d, ErrorCode::ShapeError, "s0 must have length d");
  require(box_.dim() == d, ErrorCode::ShapeError, "state box dimension differs from d");
  check_finite(A_, "A");
  check_finite(B_, "B");
  check_finite(logits_, "logits");
  require(std::isfinite(sigma_dec_) && sigma_dec_ >= 0.0, ErrorCode::InvalidArgument, "sigma_dec must be >= 0");
  require(box_.contains(StateBox::cube(static_cast<int>(d), -1.0, 1.0)), ErrorCode::InvalidArgument,
          "state box must contain [-1,1]^d");
  require(box_.contains(s0_), ErrorCode::OutOfDomain, "s0 lies outside the state box");
}

CSMSpec CSMSpec::with_noise(DecoderMode decoder, double sigma_dec) const {
  return CSMSpec(A_, B_, logits_, decoder, sigma_dec, s0_, box_);
}

LipschitzEstimate estimate_lipschitz(const CSMSpec& spec, int samples, std::uint64_t seed) {
  LipschitzEstimate est;
  const double normA = two_norm(spec.A());
  const double normB = two_norm(spec.B());
  const double normL = two_norm(spec.logits());
  est.state_analytic = normA;
  est.closed_loop_analytic = normA + 0.5 * normB * normL;

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int d = spec.dim();
  const int V = spec.vocab();
  for (int k = 0; k < samples; ++k) {
    Eigen::VectorXd s(d);
    for (int i = 0; i < d; ++i) {
      const double lo = spec.box().lower()[i];
      const double hi = spec.box().upper()[i];
      s[i] = lo + (hi - lo) * unit(rng);
    }
    Eigen::VectorXd u(V);
    for (int j = 0; j < V; ++j) u[j] = -std::log(1.0 - unit(rng));  // Dirichlet(1) via exponentials
    u /= u.sum();

    const Eigen::VectorXd pre = spec.A() * s + spec.B() * u;
    const Eigen::VectorXd sech2 = (1.0 - pre.array().tanh().square()).matrix();
    est.state_sampled = std::max(est.state_sampled, two_norm(sech2.asDiagonal() * spec.A()));

    const Eigen::VectorXd o = decode_softmax(spec, s);
    const Eigen::MatrixXd jo = Eigen::MatrixXd(o.asDiagonal()) - o * o.transpose();
    const Eigen::VectorXd pre_cl = spec.A() * s + spec.B() * o;
    const Eigen::VectorXd sech2_cl = (1.0 - pre_cl.array().tanh().square()).matrix();
    const Eigen::MatrixXd jac = sech2_cl.asDiagonal() * (spec.A() + spec.B() * jo * spec.logits());
    est.closed_loop_sampled = std::max(est.closed_loop_sampled, two_norm(jac));
  }
  return est;
}

Eigen::VectorXd step_deterministic(const CSMSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& u) {
  require(s.size() == spec.dim(), ErrorCode::ShapeError, "state has wrong length");
  require(u.size() == spec.vocab(), ErrorCode::ShapeError, "control has wrong length");
  return (spec.A() * s + spec.B() * u).array().tanh().matrix();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  require(z.size() >= 1, ErrorCode::ShapeError, "softmax of an empty vector");
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd decode_softmax(const CSMSpec& spec, const Eigen::VectorXd& s) {
  require(s.size() == spec.dim(), ErrorCode::ShapeError, "state has wrong length");
  return softmax(spec.logits() * s);
}

Eigen::VectorXd decode_stochastic(const CSMSpec& spec, const Eigen::VectorXd& s, Rng& rng) {
  require(s.size() == spec.dim(), ErrorCode::ShapeError, "state has wrong length");
  Eigen::VectorXd z = spec.logits() * s;
  if (spec.sigma_dec() > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.sigma_dec());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] += noise(rng);
  }
  return softmax(z);
}

Eigen::VectorXd decode(const CSMSpec& spec, const Eigen::VectorXd& s, Rng& rng) {
  return spec.decoder() == DecoderMode::GaussianLogit ? decode_stochastic(spec, s, rng) : decode_softmax(spec, s);
}

Trajectory simulate(const CSMSpec& spec, const Eigen::VectorXd& s0, int steps, std::uint64_t seed,
                    const SimulateOptions& options) {
  require(steps >= 1, ErrorCode::InvalidArgument, "steps must be >= 1");
  require(s0.size() == spec.dim(), ErrorCode::ShapeError, "s0 has wrong length");
  require(spec.box().contains(s0), ErrorCode::OutOfDomain, "s0 lies outside the state box");

  Trajectory traj;
  traj.seed = seed;
  traj.stochastic = spec.decoder() == DecoderMode::GaussianLogit && spec.sigma_dec() > 0.0;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.controls.reserve(static_cast<std::size_t>(steps) + 1);

  Rng rng(seed);
  auto control_at = [&](std::size_t t, const Eigen::VectorXd& s) -> Eigen::VectorXd {
    if (t < options.control_override.size() && options.control_override[t]) {
      const auto& u = *options.control_override[t];
      check_simplex(u, spec.vocab());
      return u;
    }
    return decode(spec, s, rng);
  };

  Eigen::VectorXd s = s0;
  for (int t = 0; t <= steps; ++t) {
    const auto tt = static_cast<std::size_t>(t);
    Eigen::VectorXd u = control_at(tt, s);
    traj.states.push_back(s);
    traj.controls.push_back(u);
    if (t == steps) break;
    s = step_deterministic(spec, s, u);
    require(s.allFinite(), ErrorCode::NumericalBlowUp, "non-finite state at step " + std::to_string(t + 1));
  }
  return traj;
}

void ConfidencePolicy::validate() const {
  require(alpha > 0.0, ErrorCode::InvalidArgument, "alpha must be > 0");
  require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidArgument, "tau must lie in (0,1)");
  require(tolerance > 0.0 && max_steps >= 1, ErrorCode::InvalidArgument, "tolerance/max_steps out of range");
  require(window_fraction > 0.0 && window_fraction <= 1.0, ErrorCode::InvalidArgument,
          "window_fraction must lie in (0,1]");
}

double confidence(double residual, double alpha) { return std::exp(-alpha * std::abs(residual)); }

std::string AttractorDecision::label() const {
  return unknown ? std::string("unknown") : std::to_string(*attractor);
}

AttractorDecision classify_attractor(const Trajectory& trajectory, const std::vector<Eigen::VectorXd>& attractors,
                                     const ConfidencePolicy& policy) {
  policy.validate();
  require(trajectory.length() >= 2, ErrorCode::InvalidArgument, "trajectory needs at least two states");
  const Eigen::VectorXd& last = trajectory.states.back();

  AttractorDecision out;
  std::optional<std::size_t> nearest;
  if (!attractors.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < attractors.size(); ++i) {
      require(attractors[i].size() == last.size(), ErrorCode::ShapeError, "attractor dimension differs");
      const double dist = (attractors[i] - last).norm();
      if (dist < best) {
        best = dist;
        nearest = i;
      }
    }
    out.residual = best;
  } else {
    // Finite-step surrogate: distance from the final state to the mean of the final window.
    const auto n = trajectory.length();
    auto window = static_cast<std::size_t>(std::ceil(policy.window_fraction * static_cast<double>(n)));
    window = std::clamp<std::size_t>(window, 2, n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(last.size());
    for (std::size_t i = n - window; i < n; ++i) mean += trajectory.states[i];
    mean /= static_cast<double>(window);
    out.residual = (last - mean).norm();
  }

  out.confidence = confidence(out.residual, policy.alpha);
  if (out.confidence < policy.tau) {
    out.unknown = true;
  } else if (nearest) {
    out.attractor = nearest;
  } else {
    // Settled but with no catalogue: the limit estimate itself is the attractor.
    out.attractor = 0;
  }
  return out;
}

Trajectory settle(const CSMSpec& spec, const Eigen::VectorXd& s0, const ConfidencePolicy& policy) {
  policy.validate();
  const CSMSpec det = spec.with_noise(DecoderMode::Softmax, 0.0);
  Trajectory traj;
  traj.states.push_back(s0);
  traj.controls.push_back(decode_softmax(det, s0));
  for (int t = 0; t < policy.max_steps; ++t) {
    Eigen::VectorXd next = step_deterministic(det, traj.states.back(), traj.controls.back());
    require(next.allFinite(), ErrorCode::NumericalBlowUp, "non-finite state while settling");
    const double delta = (next - traj.states.back()).norm();
    traj.controls.push_back(decode_softmax(det, next));
    traj.states.push_back(std::move(next));
    if (delta < policy.tolerance) break;
  }
  return traj;
}

}  // namespace csmspec
