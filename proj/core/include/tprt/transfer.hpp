// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/basis.hpp"
#include "tprt/bvh.hpp"
#include "tprt/lighting.hpp"
#include "tprt/surface.hpp"
#include "tprt/wavelets.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

namespace tprt {

/// Dense transfer rows for one out-sample: entry (k, i) = b_k(|x_i - x_o|) * A_i.
[[nodiscard]] Eigen::MatrixXd transfer_rows(const SurfaceSamples& samples, const BasisSampler& sampler,
                                            std::size_t out_sample);

/// Number of coefficients kept per row for a retention fraction of the domain (at least one).
[[nodiscard]] std::size_t retained_count(std::size_t domain_size, double fraction);

/// Haar over the in-sample atlas domain (per part), then top-n over the concatenated spectrum.
[[nodiscard]] SparseSpectrum compress_step1(std::span<const double> row, const QuadtreeAtlas& atlas, std::size_t n);

/// Flatten per-sample values over the atlas and apply a wavelet to each part.
[[nodiscard]] std::vector<double> project_domain(Wavelet w, const QuadtreeAtlas& atlas, std::span<const double> values);
/// Inverse of project_domain: inverse wavelet per part, then gather samples.
[[nodiscard]] std::vector<double> unproject_domain(Wavelet w, const QuadtreeAtlas& atlas, std::span<const double> coeffs);

/// One spatially compressed column of a transfer matrix: the coefficient of
/// w0-index `source` across all out-samples, in the 9/7 domain.
struct TransferColumn {
  std::uint32_t source = 0;
  SparseSpectrum spectrum;
};

struct TransferBlock {
  std::vector<TransferColumn> columns;  // ascending source
  double step1_total = 0.0;
  double step1_kept = 0.0;
  double step2_total = 0.0;
  double step2_kept = 0.0;
  std::uint64_t step1_nnz = 0;  // coefficients retained by step 1 over all rows

  [[nodiscard]] std::uint64_t stored_nnz() const;
};

/// Gathers the step-1 spectra of one basis (indexed by sample) into columns
/// over the union of retained indices, applies the 9/7 transform over the
/// atlas, and keeps `fraction` of each column's coefficient energy.
[[nodiscard]] TransferBlock compress_step2(std::span<const SparseSpectrum> rows, const QuadtreeAtlas& atlas,
                                           double fraction);

struct TransferStats {
  std::uint64_t step1_nnz = 0;
  std::uint64_t stored_nnz = 0;
  double step1_energy = 1.0;  // kept / total
  double step2_energy = 1.0;
  /// Stored coefficients after step 2 per coefficient retained by step 1.
  [[nodiscard]] double step2_ratio() const {
    return step1_nnz == 0 ? 0.0 : static_cast<double>(stored_nnz) / static_cast<double>(step1_nnz);
  }
};

/// Doubly compressed transfer operators for every basis.
class CompressedTransfer {
 public:
  CompressedTransfer() = default;
  CompressedTransfer(std::uint32_t domain_size, std::uint32_t step1_terms, double step2_fraction,
                     std::vector<TransferBlock> blocks);

  [[nodiscard]] int count() const { return static_cast<int>(blocks_.size()); }
  [[nodiscard]] std::uint32_t domain_size() const { return domain_size_; }
  [[nodiscard]] std::uint32_t step1_terms() const { return step1_terms_; }
  [[nodiscard]] double step2_fraction() const { return step2_fraction_; }
  [[nodiscard]] const TransferBlock& block(int k) const { return blocks_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] const std::vector<TransferBlock>& blocks() const { return blocks_; }
  /// Column of basis k whose source index is j, or nullptr if step 1 dropped it everywhere.
  [[nodiscard]] const TransferColumn* column(int k, std::uint32_t j) const;

  /// out += T_k applied to a w0-domain signal, in the w1 domain.
  void apply(int k, const SparseSpectrum& signal_w0, std::span<double> out_w1) const;
  void apply(int k, std::span<const double> signal_w0, std::span<double> out_w1) const;

  [[nodiscard]] TransferStats stats() const;

 private:
  void index_columns();

  std::uint32_t domain_size_ = 0;
  std::uint32_t step1_terms_ = 0;
  double step2_fraction_ = 1.0;
  std::vector<TransferBlock> blocks_;
  std::vector<std::vector<std::int32_t>> column_of_;  // [k][source] -> column or -1
};

struct PrecomputeOptions {
  double step1_fraction = 0.01;  // of the w0 domain, per row
  bool step1_keep_all = false;
  double step2_fraction = 0.95;
  std::size_t rows_per_batch = 256;
  /// Directory for the step-1 spill files; empty uses the system temp directory.
  std::filesystem::path spill_dir;
  std::function<void(std::string_view stage, double progress)> on_progress;
};

/// Step 1 for every out-sample, kept in memory: result[k][sample].
[[nodiscard]] std::vector<std::vector<SparseSpectrum>> precompute_step1(const SurfaceSamples& samples,
                                                                        const QuadtreeAtlas& atlas,
                                                                        const DiffusionBasis& basis, std::size_t n);

/// Full two-step precompute. Step-1 spectra stream to per-basis spill files in
/// atlas order and are read back one basis at a time for step 2.
[[nodiscard]] CompressedTransfer precompute_transfer(const SurfaceSamples& samples, const QuadtreeAtlas& atlas,
                                                     const DiffusionBasis& basis, const PrecomputeOptions& options);

/// Binary visibility of every sample over the texel directions of a cubemap.
struct VisibilityMatrix {
  std::size_t samples = 0;
  DirectionSet directions;
  std::vector<std::uint8_t> visible;  // samples x directions

  [[nodiscard]] bool at(std::size_t sample, std::size_t direction) const {
    return visible[sample * directions.size() + direction] != 0;
  }
};

/// Rays leave each sample offset along its normal; directions below the
/// tangent plane are stored as 0. offset < 0 uses 1e-4 x scene diagonal.
[[nodiscard]] VisibilityMatrix precompute_visibility(const SurfaceSamples& samples, const RayAccelerator& accel,
                                                     int face_side, double offset = -1.0);

/// Row-major samples x directions matrix V * max(cos, 0) * F_t(eta, cos) * dω.
[[nodiscard]] std::vector<double> ambient_weights(const VisibilityMatrix& vis, const SurfaceSamples& samples,
                                                  double eta);

/// Box-filters or replicates texels so the map matches a face side.
[[nodiscard]] Cubemap resample_cubemap(const Cubemap& source, int face_side);

/// Unfolded ambient irradiance straight from the visibility matrix.
[[nodiscard]] ChannelVectors irradiance_from_visibility(const VisibilityMatrix& vis, const SurfaceSamples& samples,
                                                        double eta, const Cubemap& environment);

/// Transfer operators with visibility, cosine and entering Fresnel folded in:
/// columns[k][d] maps environment Haar coefficient d to w1 outgoing coefficients.
struct FoldedAmbientTransfer {
  int face_side = 0;
  double eta = 1.3;
  double fraction = 1.0;
  std::uint32_t domain_size = 0;
  std::vector<std::vector<SparseSpectrum>> columns;

  [[nodiscard]] std::size_t direction_count() const { return 6u * static_cast<std::size_t>(face_side * face_side); }
  [[nodiscard]] std::uint64_t stored_nnz() const;
  /// out += folded_k applied to a Haar environment spectrum.
  void apply(int k, const SparseSpectrum& environment, std::span<double> out_w1) const;
};

[[nodiscard]] FoldedAmbientTransfer fold_visibility(const CompressedTransfer& transfer, const VisibilityMatrix& vis,
                                                    const SurfaceSamples& samples, const QuadtreeAtlas& atlas,
                                                    double eta, double fraction);

}  // namespace tprt
