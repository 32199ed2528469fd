#pragma once

#include "csmspec/adiabatic.hpp"
#include "csmspec/basins.hpp"
#include "csmspec/classifiers.hpp"
#include "csmspec/operators.hpp"
#include "csmspec/skeleton.hpp"
#include "csmspec/spectral.hpp"
#include "csmspec/state_space.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csmspec::workbench {

enum class InputKind { Synthetic, PointsCsv, CsmSpec };

struct InputConfig {
  InputKind kind = InputKind::Synthetic;
  MixtureParams mixture;
  std::filesystem::path path;  // resolved against the config file's directory
};

struct GridConfig {
  std::vector<std::size_t> cells_per_dim;  // one entry broadcasts to every dimension
  int samples_per_cell = 100;
  EscapePolicy escape = EscapePolicy::Clamp;
};

struct SpectralConfig {
  std::size_t k = 10;
  RankOptions rank;
  BasinOptions basins;
  int collapse_t_max = 20;
  int collapse_probes = 8;
};

struct MetricsConfig {
  int bootstrap_B = 50;
  double bootstrap_frac = 0.8;
  double split_fraction = 0.7;
  int tree_max_depth = 2;
  int poly_degree = 2;
  double poly_l2 = 1e-3;
  int poly_iters = 500;
  double poly_lr = 0.5;
};

struct SkeletonConfig {
  double threshold = kDefaultSkeletonThreshold;
  int n_rollouts = 1000;
  int horizon = 5;
};

struct SimulateConfig {
  int n_rollouts = 1;
  int steps = 100;
  std::optional<Eigen::VectorXd> s0;  // defaults to the spec's s0
};

struct AdiabaticConfig {
  std::vector<double> etas{0.1, 0.01, 0.001};
  int n = 8;
  std::size_t size = 6;
  std::size_t r = 1;
  double mixing = 0.1;
  NormKind norm = NormKind::Spectral;
};

struct RunConfig {
  InputConfig input;
  DiffusionOptions kernel;
  GridConfig grid;
  SpectralConfig spectral;
  MetricsConfig metrics;
  SkeletonConfig skeleton;
  SimulateConfig simulate;
  AdiabaticConfig adiabatic;
  std::optional<std::uint64_t> seed;  // mandatory before any command runs
  int workers = 1;
  std::filesystem::path out;
};

/// Invalid configuration or unreadable input (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage failed (exit code 3).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Seed of a pipeline stage: derive_seed(master, stage id). Throws ConfigError without a master seed.
std::uint64_t stage_seed(const RunConfig& config, std::uint64_t stage);

/// Writes trajectory_NNN.csv per rollout and manifest.json into config.out.
/// Rollout i uses derive_seed(stage_seed(kSimulate), i).
void cmd_simulate(const RunConfig& config);

/// Kernel, spectrum, rank, collapse, basins, skeleton and metrics; writes
/// every artifact and report.json into config.out.
void cmd_pipeline(const RunConfig& config);

/// Kernel, spectrum, basins and skeleton only.
void cmd_skeleton(const RunConfig& config);

/// Kernel, spectrum, basins and classifier/bootstrap metrics only.
void cmd_metrics(const RunConfig& config);

/// Product-versus-power sweep over config.adiabatic.etas; writes adiabatic.json.
void cmd_adiabatic(const RunConfig& config);

enum class Command { Simulate, Pipeline, Adiabatic, Skeleton, Metrics };

struct Invocation {
  Command command = Command::Pipeline;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool drop_trivial = false;  // forces spectral.drop_trivial on
};

/// Loads the config, applies overrides and runs the command. Returns 0 on
/// success, 2 on configuration/input errors and 3 on stage failures; the
/// error message goes to `err`.
int run(const Invocation& invocation, std::ostream& err);

}  // namespace csmspec::workbench
