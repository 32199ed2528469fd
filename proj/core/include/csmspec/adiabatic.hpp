#pragma once

#include "csmspec/operators.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace csmspec {

enum class NormKind { Spectral, MaxRowSum };

double operator_norm(const Eigen::MatrixXd& m, NormKind kind);

/// Slowly drifting kernels P_0..P_{T-1} with drift eta = max_t ||P_{t+1} - P_t||.
struct AdiabaticFamily {
  std::vector<Eigen::MatrixXd> kernels;
  double eta = 0.0;
  NormKind norm = NormKind::Spectral;

  std::size_t length() const noexcept { return kernels.size(); }
};

/// P_t = (1 - t/(steps-1)) base + (t/(steps-1)) target.
AdiabaticFamily make_adiabatic_family(const KernelMatrix& base, const KernelMatrix& target, int steps,
                                      NormKind norm = NormKind::Spectral);

/// Linear path from base toward target with consecutive drift at most `eta`:
/// steps = max(min_steps, ceil(||target - base|| / eta) + 1). eta = 0 gives the
/// constant family of length min_steps.
AdiabaticFamily family_with_drift(const KernelMatrix& base, const KernelMatrix& target, double eta, int min_steps,
                                  NormKind norm = NormKind::Spectral);

/// Recomputes eta from consecutive differences.
double family_drift(const std::vector<Eigen::MatrixXd>& kernels, NormKind norm);

struct AdiabaticError {
  int n = 0;
  double eta = 0.0;
  double error = 0.0;  // ||P_{n-1} ... P_0 - Pbar^n||
  double ratio = 0.0;  // error / (n eta); NaN when eta = 0
};

/// Compares the time-ordered product of the first n kernels with the n-th
/// power of their time average Pbar (the window midpoint for a linear family).
AdiabaticError compare_adiabatic(const AdiabaticFamily& family, int n);

struct GapReport {
  double gamma = 0.0;            // min_t |lambda_r(t)| - |lambda_{r+1}(t)|
  std::size_t argmin = 0;
  std::vector<double> gaps;      // per t
  bool closed = false;           // gamma <= 0
  std::string message;
};

GapReport uniform_gap_check(const AdiabaticFamily& family, std::size_t r, int workers = 1);

}  // namespace csmspec
