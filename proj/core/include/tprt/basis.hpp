// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/dipole.hpp"

#include <Eigen/Core>

#include <span>
#include <utility>
#include <vector>

namespace tprt {

class BinaryReader;
class BinaryWriter;

/// Box of supported materials plus discretization sizes for the basis fit.
struct BasisGridConfig {
  double sigma_s_prime_min = 0.1;
  double sigma_s_prime_max = 10.0;
  double sigma_a_min = 0.001;
  double sigma_a_max = 1.0;
  int sigma_s_prime_count = 32;
  int sigma_a_count = 32;
  int r_count = 512;
  double r_first = 1e-3;  // first non-zero node, mm
  double decay = 1e-9;    // R_d(r_max) / R_d(0) for the most translucent corner
  double eta = 1.3;
  double g = 0.0;
};

struct SigmaBox {
  double sigma_s_prime_min = 0.1;
  double sigma_s_prime_max = 10.0;
  double sigma_a_min = 0.001;
  double sigma_a_max = 1.0;

  [[nodiscard]] bool contains(double sigma_s_prime, double sigma_a) const;
  /// Clamps every channel of the material into the box; returns true if anything changed.
  bool clamp(OpticalMaterial& material) const;
  bool operator==(const SigmaBox&) const = default;
};

struct SigmaNode {
  double sigma_s_prime;
  double sigma_a;
};

struct SampleGrid {
  std::vector<double> r_nodes;
  std::vector<SigmaNode> sigma_nodes;
  SigmaBox box;
  double eta = 1.3;
  double g = 0.0;

  [[nodiscard]] double r_max() const { return r_nodes.back(); }
};

/// Trapezoidal quadrature weights on ascending nodes. A single node gets weight 1.
[[nodiscard]] std::vector<double> trapezoid_weights(std::span<const double> nodes);

/// Distance at which R_d of the given material falls below decay * R_d(0).
[[nodiscard]] double truncation_radius(const OpticalMaterial& material, int channel, double decay);

[[nodiscard]] SampleGrid build_sample_grid(const BasisGridConfig& config);

/// Dense matrix of quadrature-weighted R_d samples: rows are materials, columns are radii.
struct ScatterSampleMatrix {
  Eigen::MatrixXd values;
  std::vector<SigmaNode> row_map;
  std::vector<double> col_map;
  std::vector<double> weights;
};

[[nodiscard]] ScatterSampleMatrix assemble_matrix(const SampleGrid& grid);

/// Radial bases b_k(r) sampled on r_nodes. Rows of `bases` are orthonormal
/// under the trapezoid inner product on r_nodes.
struct DiffusionBasis {
  std::vector<double> r_nodes;
  std::vector<double> weights;
  Eigen::MatrixXd bases;  // K x N_r, unweighted samples
  std::vector<double> singular_values;
  SigmaBox box;
  double eta = 1.3;
  double g = 0.0;

  [[nodiscard]] int count() const { return static_cast<int>(bases.rows()); }
  [[nodiscard]] double r_max() const { return r_nodes.back(); }

  /// Copy holding only the leading k bases.
  [[nodiscard]] DiffusionBasis truncated(int k) const;

  void write(BinaryWriter& out) const;
  static DiffusionBasis read(BinaryReader& in);
};

/// Truncated SVD of the sample matrix; keeps the leading k right singular vectors.
[[nodiscard]] DiffusionBasis decompose(const ScatterSampleMatrix& m, int k);

/// s_k for one channel: the weighted inner products of R_d with every basis.
[[nodiscard]] std::vector<double> project_channel(const DiffusionBasis& basis,
                                                  const OpticalMaterial& material, int channel);

/// Per-channel s_k(sigma).
struct MaterialWeights {
  std::array<std::vector<double>, kChannels> s;
};

[[nodiscard]] MaterialWeights project_material(const DiffusionBasis& basis,
                                               const OpticalMaterial& material);

/// Projection of an arbitrary radial profile sampled on the basis nodes.
[[nodiscard]] std::vector<double> project_samples(const DiffusionBasis& basis,
                                                  std::span<const double> profile);

/// b_k(r) by linear interpolation on r_nodes; zero beyond r_max.
[[nodiscard]] double eval_basis(const DiffusionBasis& basis, int k, double r);

/// Evaluates every basis at one radius with a single node search. Produces
/// exactly the values eval_basis would.
class BasisSampler {
 public:
  explicit BasisSampler(const DiffusionBasis& basis);

  /// Writes b_k(r) for k in [0, K) into out.
  void eval(double r, std::span<double> out) const;
  [[nodiscard]] double r_max() const { return r_nodes_.back(); }
  [[nodiscard]] int count() const { return k_; }

 private:
  std::vector<double> r_nodes_;
  std::vector<double> node_major_;  // N_r x K, transposed for cache-friendly lerps
  int k_ = 0;
};

struct BasisErrorRow {
  int k = 0;
  double l2_rel = 0.0;    // weighted Frobenius error / weighted Frobenius norm
  double linf_abs = 0.0;  // max |R_d - R_K| over the grid
  double linf_rel = 0.0;  // linf_abs / max |R_d|
};

/// Truncation errors of the basis over the full sample grid for each requested K.
[[nodiscard]] std::vector<BasisErrorRow> error_report(const DiffusionBasis& basis,
                                                      const ScatterSampleMatrix& m,
                                                      std::span<const int> k_list);

/// Per-material relative L2 error of the K-term reconstruction (one entry per row of m).
[[nodiscard]] std::vector<double> row_errors(const DiffusionBasis& basis,
                                             const ScatterSampleMatrix& m, int k);

}  // namespace tprt
