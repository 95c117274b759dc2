// SPDX-License-Identifier: Apache-2.0

#include "tprt/basis.hpp"

#include "tprt/binary_io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace tprt {

namespace {

std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
  out.back() = hi;
  return out;
}

OpticalMaterial node_material(const SigmaNode& node, double eta, double g) {
  OpticalMaterial m;
  m.sigma_s_prime = {node.sigma_s_prime, node.sigma_s_prime, node.sigma_s_prime};
  m.sigma_a = {node.sigma_a, node.sigma_a, node.sigma_a};
  m.eta = eta;
  m.g = g;
  return m;
}

// Index j with nodes[j] <= r < nodes[j+1]; caller guarantees nodes[0] <= r < nodes.back().
std::size_t bracket(std::span<const double> nodes, double r) {
  auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
  return static_cast<std::size_t>(it - nodes.begin()) - 1;
}

}  // namespace

bool SigmaBox::contains(double sigma_s_prime, double sigma_a) const {
  return sigma_s_prime >= sigma_s_prime_min && sigma_s_prime <= sigma_s_prime_max &&
         sigma_a >= sigma_a_min && sigma_a <= sigma_a_max;
}

bool SigmaBox::clamp(OpticalMaterial& material) const {
  bool changed = false;
  for (int c = 0; c < kChannels; ++c) {
    const double sp = std::clamp(material.sigma_s_prime[c], sigma_s_prime_min, sigma_s_prime_max);
    const double sa = std::clamp(material.sigma_a[c], sigma_a_min, sigma_a_max);
    changed |= sp != material.sigma_s_prime[c] || sa != material.sigma_a[c];
    material.sigma_s_prime[c] = sp;
    material.sigma_a[c] = sa;
  }
  return changed;
}

std::vector<double> trapezoid_weights(std::span<const double> nodes) {
  std::vector<double> w(nodes.size(), 0.0);
  if (nodes.size() == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double h = 0.5 * (nodes[j + 1] - nodes[j]);
    w[j] += h;
    w[j + 1] += h;
  }
  return w;
}

double truncation_radius(const OpticalMaterial& material, int channel, double decay) {
  const DipoleDerived d = derive_dipole(material, channel);
  const double threshold = decay * eval_rd(d, 0.0);
  double hi = 1.0;
  while (eval_rd(d, hi) >= threshold) {
    hi *= 2.0;
    if (hi > 1e9) throw InvalidArgument("R_d does not decay below the requested threshold");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eval_rd(d, mid) < threshold ? hi : lo) = mid;
  }
  return hi;
}

SampleGrid build_sample_grid(const BasisGridConfig& config) {
  const auto& c = config;
  if (!(c.sigma_s_prime_min > 0.0) || !(c.sigma_a_min > 0.0))
    throw InvalidArgument("sigma ranges must be strictly positive");
  if (c.sigma_s_prime_min > c.sigma_s_prime_max || c.sigma_a_min > c.sigma_a_max)
    throw InvalidArgument("sigma ranges are inverted");
  if (c.sigma_s_prime_count < 1 || c.sigma_a_count < 1)
    throw InvalidArgument("sigma node counts must be at least 1");
  if (c.r_count < 2) throw InvalidArgument("at least two radial nodes are required");
  if (!(c.decay > 0.0 && c.decay < 1.0)) throw InvalidArgument("decay must lie in (0, 1)");

  SampleGrid grid;
  grid.eta = c.eta;
  grid.g = c.g;
  grid.box = {c.sigma_s_prime_min, c.sigma_s_prime_max, c.sigma_a_min, c.sigma_a_max};

  const OpticalMaterial corner =
      node_material({c.sigma_s_prime_min, c.sigma_a_min}, c.eta, c.g);
  corner.validate();
  const double r_max = truncation_radius(corner, 0, c.decay);
  if (!(c.r_first > 0.0 && c.r_first < r_max))
    throw InvalidArgument("first radial node must lie in (0, r_max)");

  grid.r_nodes.reserve(static_cast<std::size_t>(c.r_count));
  grid.r_nodes.push_back(0.0);
  for (double r : log_space(c.r_first, r_max, c.r_count - 1)) grid.r_nodes.push_back(r);

  const auto sp = log_space(c.sigma_s_prime_min, c.sigma_s_prime_max, c.sigma_s_prime_count);
  const auto sa = log_space(c.sigma_a_min, c.sigma_a_max, c.sigma_a_count);
  for (double s : sp)
    for (double a : sa) grid.sigma_nodes.push_back({s, a});
  return grid;
}

ScatterSampleMatrix assemble_matrix(const SampleGrid& grid) {
  ScatterSampleMatrix m;
  m.row_map = grid.sigma_nodes;
  m.col_map = grid.r_nodes;
  m.weights = trapezoid_weights(grid.r_nodes);
  const auto rows = static_cast<Eigen::Index>(grid.sigma_nodes.size());
  const auto cols = static_cast<Eigen::Index>(grid.r_nodes.size());
  m.values.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const OpticalMaterial mat = node_material(grid.sigma_nodes[static_cast<std::size_t>(i)], grid.eta, grid.g);
    mat.validate();
    const DipoleDerived d = derive_dipole(mat, 0);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      m.values(i, j) = std::sqrt(m.weights[jj]) * eval_rd(d, grid.r_nodes[jj]);
    }
  }
  return m;
}

DiffusionBasis decompose(const ScatterSampleMatrix& m, int k) {
  const auto full = std::min(m.values.rows(), m.values.cols());
  if (k < 1 || k > full) throw InvalidArgument("basis count must lie in [1, min(N_sigma, N_r)]");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(m.values, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error("singular value decomposition did not converge");

  DiffusionBasis basis;
  basis.r_nodes = m.col_map;
  basis.weights = m.weights;
  const auto& sv = svd.singularValues();
  basis.singular_values.assign(sv.data(), sv.data() + sv.size());

  const Eigen::MatrixXd& v = svd.matrixV();
  const auto n_r = v.rows();
  basis.bases.resize(k, n_r);
  for (int col = 0; col < k; ++col) {
    Eigen::VectorXd vk = v.col(col);
    const double peak = vk.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < n_r; ++j) {
      if (std::abs(vk[j]) > 1e-12 * peak) {
        if (vk[j] < 0.0) vk = -vk;
        break;
      }
    }
    for (Eigen::Index j = 0; j < n_r; ++j)
      basis.bases(col, j) = vk[j] / std::sqrt(m.weights[static_cast<std::size_t>(j)]);
  }
  return basis;
}

DiffusionBasis DiffusionBasis::truncated(int k) const {
  if (k < 1 || k > count()) throw InvalidArgument("truncation count out of range");
  DiffusionBasis out = *this;
  out.bases = bases.topRows(k);
  return out;
}

std::vector<double> project_samples(const DiffusionBasis& basis, std::span<const double> profile) {
  if (profile.size() != basis.r_nodes.size()) throw DimensionMismatch("profile length differs from r_nodes");
  std::vector<double> s(static_cast<std::size_t>(basis.count()), 0.0);
  for (int k = 0; k < basis.count(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < profile.size(); ++j)
      acc += basis.weights[j] * profile[j] * basis.bases(k, static_cast<Eigen::Index>(j));
    s[static_cast<std::size_t>(k)] = acc;
  }
  return s;
}

std::vector<double> project_channel(const DiffusionBasis& basis, const OpticalMaterial& material,
                                    int channel) {
  const DipoleDerived d = derive_dipole(material, channel);
  std::vector<double> profile(basis.r_nodes.size());
  for (std::size_t j = 0; j < profile.size(); ++j) profile[j] = eval_rd(d, basis.r_nodes[j]);
  return project_samples(basis, profile);
}

MaterialWeights project_material(const DiffusionBasis& basis, const OpticalMaterial& material) {
  MaterialWeights w;
  for (int c = 0; c < kChannels; ++c) w.s[static_cast<std::size_t>(c)] = project_channel(basis, material, c);
  return w;
}

double eval_basis(const DiffusionBasis& basis, int k, double r) {
  const auto& nodes = basis.r_nodes;
  if (r > nodes.back()) return 0.0;
  if (r == nodes.back()) return basis.bases(k, static_cast<Eigen::Index>(nodes.size() - 1));
  const std::size_t j = bracket(nodes, r);
  const double t = (r - nodes[j]) / (nodes[j + 1] - nodes[j]);
  const double a = basis.bases(k, static_cast<Eigen::Index>(j));
  const double b = basis.bases(k, static_cast<Eigen::Index>(j + 1));
  return (1.0 - t) * a + t * b;
}

BasisSampler::BasisSampler(const DiffusionBasis& basis)
    : r_nodes_(basis.r_nodes), k_(basis.count()) {
  const std::size_t n = r_nodes_.size();
  node_major_.resize(n * static_cast<std::size_t>(k_));
  for (std::size_t j = 0; j < n; ++j)
    for (int k = 0; k < k_; ++k)
      node_major_[j * static_cast<std::size_t>(k_) + static_cast<std::size_t>(k)] =
          basis.bases(k, static_cast<Eigen::Index>(j));
}

void BasisSampler::eval(double r, std::span<double> out) const {
  const auto kk = static_cast<std::size_t>(k_);
  if (r > r_nodes_.back()) {
    std::fill(out.begin(), out.begin() + k_, 0.0);
    return;
  }
  if (r == r_nodes_.back()) {
    const double* last = node_major_.data() + (r_nodes_.size() - 1) * kk;
    std::copy(last, last + kk, out.begin());
    return;
  }
  const std::size_t j = bracket(r_nodes_, r);
  const double t = (r - r_nodes_[j]) / (r_nodes_[j + 1] - r_nodes_[j]);
  const double* a = node_major_.data() + j * kk;
  const double* b = a + kk;
  for (std::size_t k = 0; k < kk; ++k) out[k] = (1.0 - t) * a[k] + t * b[k];
}

namespace {

// Weighted-space reconstruction of m by the leading k bases.
Eigen::MatrixXd reconstruct(const DiffusionBasis& basis, const ScatterSampleMatrix& m, int k) {
  const auto n_r = static_cast<Eigen::Index>(basis.r_nodes.size());
  Eigen::MatrixXd vk(n_r, k);
  for (int c = 0; c < k; ++c)
    for (Eigen::Index j = 0; j < n_r; ++j)
      vk(j, c) = basis.bases(c, j) * std::sqrt(basis.weights[static_cast<std::size_t>(j)]);
  return (m.values * vk) * vk.transpose();
}

}  // namespace

std::vector<BasisErrorRow> error_report(const DiffusionBasis& basis, const ScatterSampleMatrix& m,
                                        std::span<const int> k_list) {
  if (static_cast<std::size_t>(m.values.cols()) != basis.r_nodes.size())
    throw DimensionMismatch("sample matrix and basis use different radial grids");

  Eigen::VectorXd inv_sqrt_w(m.values.cols());
  for (Eigen::Index j = 0; j < inv_sqrt_w.size(); ++j)
    inv_sqrt_w[j] = 1.0 / std::sqrt(m.weights[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXd raw = m.values * inv_sqrt_w.asDiagonal();
  const double norm = m.values.norm();
  const double peak = raw.cwiseAbs().maxCoeff();

  std::vector<BasisErrorRow> rows;
  for (int k : k_list) {
    if (k < 1 || k > basis.count()) throw InvalidArgument("K outside the decomposition size");
    const Eigen::MatrixXd approx = reconstruct(basis, m, k);
    BasisErrorRow row;
    row.k = k;
    row.l2_rel = (m.values - approx).norm() / norm;
    row.linf_abs = (raw - approx * inv_sqrt_w.asDiagonal()).cwiseAbs().maxCoeff();
    row.linf_rel = row.linf_abs / peak;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> row_errors(const DiffusionBasis& basis, const ScatterSampleMatrix& m, int k) {
  const Eigen::MatrixXd approx = reconstruct(basis, m, k);
  std::vector<double> out(static_cast<std::size_t>(m.values.rows()));
  for (Eigen::Index i = 0; i < m.values.rows(); ++i)
    out[static_cast<std::size_t>(i)] = (m.values.row(i) - approx.row(i)).norm() / m.values.row(i).norm();
  return out;
}

void DiffusionBasis::write(BinaryWriter& out) const {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(r_nodes.size()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(count()));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(singular_values.size()));
  out.put(eta);
  out.put(g);
  out.put(box.sigma_s_prime_min);
  out.put(box.sigma_s_prime_max);
  out.put(box.sigma_a_min);
  out.put(box.sigma_a_max);
  out.put_array<double>(r_nodes);
  for (int k = 0; k < count(); ++k)
    for (Eigen::Index j = 0; j < bases.cols(); ++j) out.put(bases(k, j));
  out.put_array<double>(singular_values);
}

DiffusionBasis DiffusionBasis::read(BinaryReader& in) {
  DiffusionBasis b;
  const std::size_t n_r = in.get_count(8);
  const std::size_t k = in.get_count(0);
  const std::size_t n_sv = in.get_count(0);
  if (n_r < 2 || k < 1) throw FormatError("corrupt basis chunk");
  if ((k * n_r + n_sv + n_r) * 8 + 48 > in.remaining()) throw FormatError("corrupt basis chunk: short data");
  b.eta = in.get<double>();
  b.g = in.get<double>();
  b.box.sigma_s_prime_min = in.get<double>();
  b.box.sigma_s_prime_max = in.get<double>();
  b.box.sigma_a_min = in.get<double>();
  b.box.sigma_a_max = in.get<double>();
  b.r_nodes.resize(n_r);
  in.get_array<double>(b.r_nodes);
  if (b.r_nodes[0] != 0.0 || !std::is_sorted(b.r_nodes.begin(), b.r_nodes.end()))
    throw FormatError("corrupt basis chunk: radial nodes not ascending");
  b.weights = trapezoid_weights(b.r_nodes);
  b.bases.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n_r));
  for (std::size_t kk = 0; kk < k; ++kk)
    for (std::size_t j = 0; j < n_r; ++j)
      b.bases(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(j)) = in.get<double>();
  b.singular_values.resize(n_sv);
  in.get_array<double>(b.singular_values);
  return b;
}

}  // namespace tprt
