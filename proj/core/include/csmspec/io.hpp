#pragma once

#include "csmspec/basins.hpp"
#include "csmspec/csm.hpp"
#include "csmspec/operators.hpp"
#include "csmspec/skeleton.hpp"
#include "csmspec/spectral.hpp"
#include "csmspec/state_space.hpp"

#include <filesystem>
#include <string>

namespace csmspec::io {

/// Shortest round-trip decimal representation (%.17g).
std::string format_double(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Header `x0,...,x{d-1}[,label]`, one point per row.
PointCloud read_point_cloud_csv(const std::filesystem::path& path);
PointCloud parse_point_cloud_csv(const std::string& text);
std::string point_cloud_csv(const PointCloud& cloud);

/// Fields d, vocab, A, B (row-major), logits (|X| x d), decoder
/// ("softmax" | "gaussian"), sigma_dec, s0. Optional "box": {"lower", "upper"}.
CSMSpec parse_csm_spec_json(const std::string& text);
CSMSpec read_csm_spec_json(const std::filesystem::path& path);
std::string csm_spec_json(const CSMSpec& spec);

/// `t,s0..s{d-1},u0..u{|X|-1}`.
std::string trajectory_csv(const Trajectory& trajectory);

/// Square matrix, one row per line.
std::string kernel_csv(const KernelMatrix& K);
/// Source tag, bandwidth, variant, grid descriptor and seed.
std::string kernel_sidecar_json(const KernelMatrix& K);

/// `i,re(lambda),im(lambda),modulus` with 1-based i.
std::string spectrum_csv(const SpectralDecomposition& dec);
/// N x k real parts; imaginary columns appended when the spectrum is complex.
std::string eigenvectors_csv(const SpectralDecomposition& dec);
/// `point_index,basin,margin,tie`.
std::string labels_csv(const BasinLabeling& labeling);
std::string coordinates_csv(const SpectralCoordinates& coords);
/// `from,to,weight` for every nonzero entry of the basin matrix, plus threshold flag.
std::string adjacency_csv(const SkeletonGraph& graph);

}  // namespace csmspec::io
