// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tprt {

class BinaryReader;
class BinaryWriter;

/// Square power-of-two grid, row-major.
struct Grid2D {
  int side = 0;
  std::vector<double> values;

  Grid2D() = default;
  explicit Grid2D(int side_, double fill = 0.0);

  double& at(int row, int col) { return values[static_cast<std::size_t>(row * side + col)]; }
  [[nodiscard]] double at(int row, int col) const { return values[static_cast<std::size_t>(row * side + col)]; }
};

enum class Wavelet { Haar, Cdf97 };

// Full dyadic pyramid decompositions (one row pass then one column pass per
// level, recursing on the low-low quadrant down to a single DC coefficient).
// The in-place forms operate on a side x side row-major block.
void haar2d_inplace(std::span<double> values, int side);
void haar2d_inverse_inplace(std::span<double> values, int side);
void cdf97_inplace(std::span<double> values, int side);
void cdf97_inverse_inplace(std::span<double> values, int side);

void forward_inplace(Wavelet w, std::span<double> values, int side);
void inverse_inplace(Wavelet w, std::span<double> values, int side);

[[nodiscard]] Grid2D haar2d(const Grid2D& grid);
[[nodiscard]] Grid2D haar2d_inverse(const Grid2D& grid);
[[nodiscard]] Grid2D cdf97(const Grid2D& grid);
[[nodiscard]] Grid2D cdf97_inverse(const Grid2D& grid);

/// One analysis level of the 9/7 lifting scheme on an even-length signal:
/// approximations land in the first half, details in the second.
void cdf97_1d_forward(std::span<double> signal, std::span<double> scratch);
void cdf97_1d_inverse(std::span<double> signal, std::span<double> scratch);

/// Sparse set of retained coefficients over a domain of `size` slots.
struct SparseSpectrum {
  std::uint32_t size = 0;
  std::vector<std::uint32_t> indices;  // strictly ascending
  std::vector<double> values;
  double total_energy = 0.0;
  double kept_energy = 0.0;

  [[nodiscard]] std::size_t nnz() const { return indices.size(); }
  [[nodiscard]] std::vector<double> dense() const;
  /// Adds scale * this into a dense vector of length size.
  void accumulate_into(std::span<double> dense, double scale) const;

  void write(BinaryWriter& out) const;
  static SparseSpectrum read(BinaryReader& in);
};

/// Keeps the n largest-magnitude non-zero coefficients; ties go to the lower index.
[[nodiscard]] SparseSpectrum compress_top_n(std::span<const double> coeffs, std::size_t n);

/// Keeps the shortest magnitude-sorted prefix whose energy reaches fraction * total.
[[nodiscard]] SparseSpectrum compress_energy(std::span<const double> coeffs, double fraction);

/// Every non-zero coefficient.
[[nodiscard]] SparseSpectrum to_sparse(std::span<const double> coeffs);

[[nodiscard]] double sparse_dot(const SparseSpectrum& a, const SparseSpectrum& b);
[[nodiscard]] double sparse_dot(const SparseSpectrum& a, std::span<const double> dense);

}  // namespace tprt
