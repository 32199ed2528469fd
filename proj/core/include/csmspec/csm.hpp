#pragma once

#include "csmspec/rng.hpp"
#include "csmspec/state_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace csmspec {

enum class DecoderMode { Softmax, GaussianLogit };

/// Continuous state machine with transition T(s,u) = tanh(A s + B u), decoder
/// O(s) = softmax(L s) (optionally with Gaussian logit noise) and the identity
/// decoding policy. The state box must contain [-1,1]^d, the range of tanh.
class CSMSpec {
 public:
  CSMSpec(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd logits, DecoderMode decoder,
          double sigma_dec, Eigen::VectorXd s0, std::optional<StateBox> box = std::nullopt);

  int dim() const noexcept { return static_cast<int>(A_.rows()); }
  int vocab() const noexcept { return static_cast<int>(B_.cols()); }
  const Eigen::MatrixXd& A() const noexcept { return A_; }
  const Eigen::MatrixXd& B() const noexcept { return B_; }
  /// |X| x d, row i is the functional l_i.
  const Eigen::MatrixXd& logits() const noexcept { return logits_; }
  DecoderMode decoder() const noexcept { return decoder_; }
  double sigma_dec() const noexcept { return sigma_dec_; }
  const Eigen::VectorXd& s0() const noexcept { return s0_; }
  const StateBox& box() const noexcept { return box_; }

  /// Copy with a different decoder noise; the rest is shared.
  CSMSpec with_noise(DecoderMode decoder, double sigma_dec) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd logits_;
  DecoderMode decoder_;
  double sigma_dec_;
  Eigen::VectorXd s0_;
  StateBox box_;
};

/// Lipschitz estimates for the transition. The state Jacobian of tanh(As+Bu)
/// is diag(sech^2) A, so ||A||_2 bounds it; the closed-loop map s -> T(s,O(s))
/// adds B times the softmax Jacobian (norm <= 1/2) times L.
struct LipschitzEstimate {
  double state_analytic = 0.0;
  double state_sampled = 0.0;
  double closed_loop_analytic = 0.0;
  double closed_loop_sampled = 0.0;
};

LipschitzEstimate estimate_lipschitz(const CSMSpec& spec, int samples, std::uint64_t seed);

Eigen::VectorXd step_deterministic(const CSMSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& u);

/// Numerically stable softmax (max-logit subtraction).
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

Eigen::VectorXd decode_softmax(const CSMSpec& spec, const Eigen::VectorXd& s);

/// Draws z ~ N(L s, sigma^2 I), one normal per token in index order, and
/// returns softmax(z). sigma = 0 consumes nothing and equals decode_softmax.
Eigen::VectorXd decode_stochastic(const CSMSpec& spec, const Eigen::VectorXd& s, Rng& rng);

/// Decoder selected by spec.decoder().
Eigen::VectorXd decode(const CSMSpec& spec, const Eigen::VectorXd& s, Rng& rng);

struct Trajectory {
  std::vector<Eigen::VectorXd> states;    // s_0 .. s_steps
  std::vector<Eigen::VectorXd> controls;  // u_t = Delta(O(s_t)) for every state
  std::uint64_t seed = 0;
  bool stochastic = false;

  std::size_t length() const noexcept { return states.size(); }
};

struct SimulateOptions {
  /// Optional exogenous control per step; when set, u_t is taken verbatim and
  /// no decoder draws are consumed for that step.
  std::vector<std::optional<Eigen::VectorXd>> control_override;
};

/// Closed loop s_{t+1} = T(s_t, u_t), u_t = O(s_t). Stochastic decoders draw
/// |X| normals per step in token order from a generator seeded with `seed`.
Trajectory simulate(const CSMSpec& spec, const Eigen::VectorXd& s0, int steps, std::uint64_t seed,
                    const SimulateOptions& options = {});

struct ConfidencePolicy {
  double alpha = 1.0;
  double tau = 0.5;
  double tolerance = 1e-8;
  int max_steps = 10'000;
  /// Fraction of the trajectory averaged for the limit estimate when no
  /// attractors are supplied.
  double window_fraction = 0.1;

  void validate() const;
};

/// Conf = exp(-alpha * residual).
double confidence(double residual, double alpha);

struct AttractorDecision {
  std::optional<std::size_t> attractor;  // nullopt = null attractor ("unknown")
  double residual = 0.0;
  double confidence = 0.0;
  bool unknown = false;

  std::string label() const;
};

AttractorDecision classify_attractor(const Trajectory& trajectory, const std::vector<Eigen::VectorXd>& attractors,
                                     const ConfidencePolicy& policy);

/// Iterates the deterministic closed loop until ||s_{t+1} - s_t|| < tolerance
/// or max_steps. Returns the trajectory; the last state approximates the fixed point.
Trajectory settle(const CSMSpec& spec, const Eigen::VectorXd& s0, const ConfidencePolicy& policy);

}  // namespace csmspec
