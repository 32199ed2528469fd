#include "csmspec/classifiers.hpp"
#include "csmspec/csm.hpp"
#include "csmspec/operators.hpp"
#include "csmspec/spectral.hpp"
#include "csmspec/state_space.hpp"

#include <benchmark/benchmark.h>

using namespace csmspec;

namespace {

PointCloud mixture(int per_cluster) {
  MixtureParams p;
  p.points_per_cluster = per_cluster;
  return synth_mixture(p, 1);
}

void BM_DiffusionKernel(benchmark::State& state) {
  const auto cloud = mixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(diffusion_kernel(cloud));
  state.SetComplexityN(static_cast<long>(cloud.size()));
}
BENCHMARK(BM_DiffusionKernel)->Arg(50)->Arg(100)->Arg(200)->Complexity();

void BM_Eigendecompose(benchmark::State& state) {
  const auto K = random_kernel(static_cast<std::size_t>(state.range(0)), 2, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(K, 10));
}
BENCHMARK(BM_Eigendecompose)->Arg(100)->Arg(300);

void BM_EigendecomposeCompanion(benchmark::State& state) {
  const auto K = diffusion_kernel(mixture(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(K, 10));
}
BENCHMARK(BM_EigendecomposeCompanion)->Arg(100);

void BM_UlamKernel(benchmark::State& state) {
  Eigen::MatrixXd B(1, 2);
  B << 0.5, -0.5;
  Eigen::MatrixXd L(2, 1);
  L << 3.0, -3.0;
  const CSMSpec spec(Eigen::MatrixXd::Constant(1, 1, 1.2), B, L, DecoderMode::GaussianLogit, 1.0,
                     Eigen::VectorXd::Zero(1));
  const auto grid = make_grid(spec.box(), {static_cast<std::size_t>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(ulam_kernel(spec, grid, 200, 3));
}
BENCHMARK(BM_UlamKernel)->Arg(40)->Arg(160);

void BM_TrainTree(benchmark::State& state) {
  const auto cloud = mixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(train_tree(cloud.points, *cloud.labels));
}
BENCHMARK(BM_TrainTree)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
