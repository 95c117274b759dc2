// SPDX-License-Identifier: Apache-2.0

#include "tprt/wavelets.hpp"

#include "tprt/binary_io.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace tprt {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Daubechies-Sweldens factorization of the CDF 9/7 pair.
constexpr double kAlpha = -1.586134342059924;
constexpr double kBeta = -0.052980118572961;
constexpr double kGamma = 0.882911075530934;
constexpr double kDelta = 0.443506852043971;
constexpr double kZeta = 1.149604398860241;

void require_side(std::span<const double> values, int side) {
  if (side < 1 || !is_power_of_two(static_cast<std::uint64_t>(side)))
    throw InvalidArgument("wavelet grid side must be a power of two");
  if (values.size() < static_cast<std::size_t>(side) * static_cast<std::size_t>(side))
    throw DimensionMismatch("wavelet grid buffer smaller than side^2");
}

void haar_1d_forward(std::span<double> x, std::span<double> tmp) {
  const std::size_t half = x.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    tmp[i] = (x[2 * i] + x[2 * i + 1]) * kInvSqrt2;
    tmp[half + i] = (x[2 * i] - x[2 * i + 1]) * kInvSqrt2;
  }
  std::copy_n(tmp.begin(), x.size(), x.begin());
}

void haar_1d_inverse(std::span<double> x, std::span<double> tmp) {
  const std::size_t half = x.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    tmp[2 * i] = (x[i] + x[half + i]) * kInvSqrt2;
    tmp[2 * i + 1] = (x[i] - x[half + i]) * kInvSqrt2;
  }
  std::copy_n(tmp.begin(), x.size(), x.begin());
}

using Pass = void (*)(std::span<double>, std::span<double>);

// Applies a 1D pass to every row, then every column, of the top-left s x s block.
void apply_rows_cols(std::span<double> values, int side, int s, Pass pass, bool rows_first) {
  std::vector<double> line(static_cast<std::size_t>(s));
  std::vector<double> tmp(static_cast<std::size_t>(s));
  auto do_rows = [&] {
    for (int r = 0; r < s; ++r) pass(values.subspan(static_cast<std::size_t>(r * side), static_cast<std::size_t>(s)), tmp);
  };
  auto do_cols = [&] {
    for (int c = 0; c < s; ++c) {
      for (int r = 0; r < s; ++r) line[static_cast<std::size_t>(r)] = values[static_cast<std::size_t>(r * side + c)];
      pass(line, tmp);
      for (int r = 0; r < s; ++r) values[static_cast<std::size_t>(r * side + c)] = line[static_cast<std::size_t>(r)];
    }
  };
  if (rows_first) {
    do_rows();
    do_cols();
  } else {
    do_cols();
    do_rows();
  }
}

void pyramid_forward(std::span<double> values, int side, Pass pass) {
  for (int s = side; s >= 2; s /= 2) apply_rows_cols(values, side, s, pass, true);
}

void pyramid_inverse(std::span<double> values, int side, Pass pass) {
  for (int s = 2; s <= side; s *= 2) apply_rows_cols(values, side, s, pass, false);
}

}  // namespace

Grid2D::Grid2D(int side_, double fill)
    : side(side_), values(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_), fill) {}

void cdf97_1d_forward(std::span<double> x, std::span<double> tmp) {
  const std::size_t n = x.size() / 2;
  assert(n >= 1 && x.size() == 2 * n);
  double* s = tmp.data();
  double* d = tmp.data() + n;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = x[2 * i];
    d[i] = x[2 * i + 1];
  }
  // Whole-sample symmetric extension: s[n] mirrors to s[n-1], d[-1] to d[0].
  for (std::size_t i = 0; i < n; ++i) d[i] += kAlpha * (s[i] + s[std::min(i + 1, n - 1)]);
  for (std::size_t i = 0; i < n; ++i) s[i] += kBeta * (d[i == 0 ? 0 : i - 1] + d[i]);
  for (std::size_t i = 0; i < n; ++i) d[i] += kGamma * (s[i] + s[std::min(i + 1, n - 1)]);
  for (std::size_t i = 0; i < n; ++i) s[i] += kDelta * (d[i == 0 ? 0 : i - 1] + d[i]);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = s[i] * kZeta;
    x[n + i] = d[i] / kZeta;
  }
}

void cdf97_1d_inverse(std::span<double> x, std::span<double> tmp) {
  const std::size_t n = x.size() / 2;
  assert(n >= 1 && x.size() == 2 * n);
  double* s = tmp.data();
  double* d = tmp.data() + n;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = x[i] / kZeta;
    d[i] = x[n + i] * kZeta;
  }
  for (std::size_t i = 0; i < n; ++i) s[i] -= kDelta * (d[i == 0 ? 0 : i - 1] + d[i]);
  for (std::size_t i = 0; i < n; ++i) d[i] -= kGamma * (s[i] + s[std::min(i + 1, n - 1)]);
  for (std::size_t i = 0; i < n; ++i) s[i] -= kBeta * (d[i == 0 ? 0 : i - 1] + d[i]);
  for (std::size_t i = 0; i < n; ++i) d[i] -= kAlpha * (s[i] + s[std::min(i + 1, n - 1)]);
  for (std::size_t i = 0; i < n; ++i) {
    x[2 * i] = s[i];
    x[2 * i + 1] = d[i];
  }
}

void haar2d_inplace(std::span<double> values, int side) {
  require_side(values, side);
  pyramid_forward(values, side, haar_1d_forward);
}

void haar2d_inverse_inplace(std::span<double> values, int side) {
  require_side(values, side);
  pyramid_inverse(values, side, haar_1d_inverse);
}

void cdf97_inplace(std::span<double> values, int side) {
  require_side(values, side);
  pyramid_forward(values, side, cdf97_1d_forward);
}

void cdf97_inverse_inplace(std::span<double> values, int side) {
  require_side(values, side);
  pyramid_inverse(values, side, cdf97_1d_inverse);
}

void forward_inplace(Wavelet w, std::span<double> values, int side) {
  w == Wavelet::Haar ? haar2d_inplace(values, side) : cdf97_inplace(values, side);
}

void inverse_inplace(Wavelet w, std::span<double> values, int side) {
  w == Wavelet::Haar ? haar2d_inverse_inplace(values, side) : cdf97_inverse_inplace(values, side);
}

Grid2D haar2d(const Grid2D& grid) {
  Grid2D out = grid;
  haar2d_inplace(out.values, out.side);
  return out;
}

Grid2D haar2d_inverse(const Grid2D& grid) {
  Grid2D out = grid;
  haar2d_inverse_inplace(out.values, out.side);
  return out;
}

Grid2D cdf97(const Grid2D& grid) {
  Grid2D out = grid;
  cdf97_inplace(out.values, out.side);
  return out;
}

Grid2D cdf97_inverse(const Grid2D& grid) {
  Grid2D out = grid;
  cdf97_inverse_inplace(out.values, out.side);
  return out;
}

std::vector<double> SparseSpectrum::dense() const {
  std::vector<double> out(size, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out[indices[i]] = values[i];
  return out;
}

void SparseSpectrum::accumulate_into(std::span<double> dense, double scale) const {
  for (std::size_t i = 0; i < indices.size(); ++i) dense[indices[i]] += scale * values[i];
}

namespace {

// Non-zero coefficient indices ordered by descending magnitude, ties by index.
std::vector<std::uint32_t> magnitude_order(std::span<const double> coeffs, std::size_t limit) {
  std::vector<std::uint32_t> order;
  order.reserve(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    if (coeffs[i] != 0.0) order.push_back(static_cast<std::uint32_t>(i));
  auto by_magnitude = [&](std::uint32_t a, std::uint32_t b) {
    const double ma = std::abs(coeffs[a]);
    const double mb = std::abs(coeffs[b]);
    return ma != mb ? ma > mb : a < b;
  };
  if (limit < order.size()) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit), order.end(), by_magnitude);
    order.resize(limit);
  } else {
    std::sort(order.begin(), order.end(), by_magnitude);
  }
  return order;
}

double energy(std::span<const double> coeffs) {
  double e = 0.0;
  for (double c : coeffs) e += c * c;
  return e;
}

SparseSpectrum gather(std::span<const double> coeffs, std::vector<std::uint32_t> order, double total) {
  SparseSpectrum out;
  out.size = static_cast<std::uint32_t>(coeffs.size());
  out.total_energy = total;
  for (std::uint32_t i : order) out.kept_energy += coeffs[i] * coeffs[i];
  std::sort(order.begin(), order.end());
  out.indices = std::move(order);
  out.values.reserve(out.indices.size());
  for (std::uint32_t i : out.indices) out.values.push_back(coeffs[i]);
  return out;
}

}  // namespace

SparseSpectrum compress_top_n(std::span<const double> coeffs, std::size_t n) {
  return gather(coeffs, magnitude_order(coeffs, n), energy(coeffs));
}

SparseSpectrum compress_energy(std::span<const double> coeffs, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("energy fraction must lie in [0, 1]");
  const double total = energy(coeffs);
  auto order = magnitude_order(coeffs, coeffs.size());
  if (fraction < 1.0) {
    const double target = fraction * total;
    double kept = 0.0;
    std::size_t count = 0;
    while (count < order.size() && kept < target) {
      kept += coeffs[order[count]] * coeffs[order[count]];
      ++count;
    }
    order.resize(count);
  }
  return gather(coeffs, std::move(order), total);
}

SparseSpectrum to_sparse(std::span<const double> coeffs) {
  SparseSpectrum out;
  out.size = static_cast<std::uint32_t>(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0.0) continue;
    out.indices.push_back(static_cast<std::uint32_t>(i));
    out.values.push_back(coeffs[i]);
    out.kept_energy += coeffs[i] * coeffs[i];
  }
  out.total_energy = out.kept_energy;
  return out;
}

double sparse_dot(const SparseSpectrum& a, const SparseSpectrum& b) {
  if (a.size != b.size) throw DimensionMismatch("sparse_dot over spectra of different sizes");
  double acc = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (b.indices[j] < a.indices[i]) {
      ++j;
    } else {
      acc += a.values[i++] * b.values[j++];
    }
  }
  return acc;
}

double sparse_dot(const SparseSpectrum& a, std::span<const double> dense) {
  if (dense.size() != a.size) throw DimensionMismatch("sparse_dot against dense vector of wrong length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.indices.size(); ++i) acc += a.values[i] * dense[a.indices[i]];
  return acc;
}

void SparseSpectrum::write(BinaryWriter& out) const {
  out.put<std::uint32_t>(size);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.put<std::uint32_t>(indices[i]);
    out.put<float>(static_cast<float>(values[i]));
  }
  out.put(total_energy);
  out.put(kept_energy);
}

SparseSpectrum SparseSpectrum::read(BinaryReader& in) {
  SparseSpectrum s;
  s.size = in.get<std::uint32_t>();
  const std::size_t count = in.get_count(8);
  s.indices.resize(count);
  s.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    s.indices[i] = in.get<std::uint32_t>();
    s.values[i] = static_cast<double>(in.get<float>());
    if (s.indices[i] >= s.size || (i > 0 && s.indices[i] <= s.indices[i - 1]))
      throw FormatError("corrupt spectrum: indices out of range or unsorted");
  }
  s.total_energy = in.get<double>();
  s.kept_energy = in.get<double>();
  return s;
}

}  // namespace tprt
