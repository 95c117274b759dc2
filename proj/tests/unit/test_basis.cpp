// SPDX-License-Identifier: Apache-2.0

#include "tprt/basis.hpp"
#include "tprt/binary_io.hpp"

#include "support/scenes.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tprt;

namespace {

const ScatterSampleMatrix& default_matrix() {
  static const ScatterSampleMatrix m = assemble_matrix(build_sample_grid({}));
  return m;
}

double weighted_dot(const DiffusionBasis& b, int i, int j) {
  double s = 0.0;
  for (std::size_t n = 0; n < b.r_nodes.size(); ++n)
    s += b.weights[n] * b.bases(i, static_cast<Eigen::Index>(n)) * b.bases(j, static_cast<Eigen::Index>(n));
  return s;
}

}  // namespace

TEST(Trapezoid, WeightsIntegratePolynomialsOfDegreeOne) {
  const std::vector<double> x = {0.0, 0.5, 1.5, 4.0};
  const auto w = trapezoid_weights(x);
  double one = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    one += w[i];
    lin += w[i] * x[i];
  }
  EXPECT_NEAR(one, 4.0, 1e-15);
  EXPECT_NEAR(lin, 8.0, 1e-14);
  EXPECT_EQ(trapezoid_weights(std::vector<double>{2.0}), std::vector<double>{1.0});
}

TEST(SampleGrid, DefaultShape) {
  const auto g = build_sample_grid({});
  ASSERT_EQ(g.r_nodes.size(), 512u);
  EXPECT_EQ(g.r_nodes[0], 0.0);
  EXPECT_EQ(g.sigma_nodes.size(), 1024u);
  for (std::size_t i = 1; i < g.r_nodes.size(); ++i) EXPECT_GT(g.r_nodes[i], g.r_nodes[i - 1]);
  // Log spacing after node 0.
  const double q1 = g.r_nodes[3] / g.r_nodes[2];
  const double q2 = g.r_nodes[300] / g.r_nodes[299];
  EXPECT_NEAR(q1, q2, 1e-9 * q1);
}

TEST(SampleGrid, RadiusCoversTheMostTranslucentCorner) {
  BasisGridConfig cfg;
  const auto g = build_sample_grid(cfg);
  OpticalMaterial m;
  m.sigma_s_prime = {cfg.sigma_s_prime_min, cfg.sigma_s_prime_min, cfg.sigma_s_prime_min};
  m.sigma_a = {cfg.sigma_a_min, cfg.sigma_a_min, cfg.sigma_a_min};
  EXPECT_LE(eval_rd(m, 0, g.r_max()), 1.0001 * cfg.decay * eval_rd(m, 0, 0.0));
  EXPECT_GT(truncation_radius(m, 0, cfg.decay), 100.0);
}

TEST(ScatterMatrix, EntriesFinitePositive) {
  const auto& m = default_matrix();
  EXPECT_EQ(m.values.rows(), 1024);
  EXPECT_EQ(m.values.cols(), 512);
  EXPECT_TRUE(m.values.allFinite());
  // The far tail of the most absorbing material may underflow.
  EXPECT_GE(m.values.minCoeff(), 0.0);
  EXPECT_GT(m.values.col(0).minCoeff(), 0.0);
}

TEST(Decompose, RankOneIdentity) {
  ScatterSampleMatrix m;
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(6, 1.0, 2.0);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(5, 0.5, 3.0);
  m.values = u * v.transpose();
  m.col_map = {0.0, 1.0, 2.0, 3.0, 4.0};
  m.weights = {1.0, 1.0, 1.0, 1.0, 1.0};
  for (int i = 0; i < 6; ++i) m.row_map.push_back({1.0, 0.1});
  const auto b = decompose(m, 1);
  for (std::size_t i = 1; i < b.singular_values.size(); ++i) EXPECT_LT(b.singular_values[i], 1e-10 * b.singular_values[0]);
  const Eigen::MatrixXd recon = m.values * b.bases.transpose() * b.bases;
  EXPECT_LT((recon - m.values).norm(), 1e-10 * m.values.norm());
}

TEST(Decompose, FullRankReconstructsExactly) {
  const auto& m = default_matrix();
  const auto b = decompose(m, 512);
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(m.weights.data(), 512).cwiseSqrt();
  const Eigen::MatrixXd v = b.bases * w.asDiagonal();
  const Eigen::MatrixXd recon = m.values * v.transpose() * v;
  EXPECT_LT((recon - m.values).norm(), 1e-8 * m.values.norm());
}

TEST(Decompose, BasesOrthonormalUnderQuadrature) {
  const auto& b = scenes::default_basis(15);
  for (int i = 0; i < b.count(); ++i)
    for (int j = 0; j < b.count(); ++j) EXPECT_NEAR(weighted_dot(b, i, j), i == j ? 1.0 : 0.0, 1e-9);
  EXPECT_THROW((void)decompose(default_matrix(), 0), InvalidArgument);
}

TEST(Decompose, SingularValuesDecay) {
  const auto& b = scenes::default_basis(15);
  for (std::size_t i = 1; i < b.singular_values.size(); ++i)
    EXPECT_LE(b.singular_values[i], b.singular_values[i - 1]);
  EXPECT_LT(b.singular_values[10] / b.singular_values[0], 1e-3);
}

TEST(ErrorReport, MonotoneInK) {
  const auto& b = scenes::default_basis(15);
  const std::vector<int> ks = {1, 2, 4, 8, 12, 15};
  const auto rows = error_report(b, default_matrix(), ks);
  ASSERT_EQ(rows.size(), ks.size());
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].l2_rel, rows[i - 1].l2_rel);
  EXPECT_LT(rows[4].l2_rel, 1e-3);
  EXPECT_LT(rows[5].l2_rel, 1e-4);
}

TEST(Projection, NodeMaterialMatchesMatrixRow) {
  const auto& m = default_matrix();
  const auto& b = scenes::default_basis(15);
  const auto errs = row_errors(b, m, 15);
  const std::size_t row = 517;
  OpticalMaterial mat;
  mat.sigma_s_prime.fill(m.row_map[row].sigma_s_prime);
  mat.sigma_a.fill(m.row_map[row].sigma_a);
  const auto s = project_channel(b, mat, 0);
  double err2 = 0.0, norm2 = 0.0;
  for (std::size_t n = 0; n < b.r_nodes.size(); ++n) {
    double approx = 0.0;
    for (int k = 0; k < b.count(); ++k) approx += s[static_cast<std::size_t>(k)] * b.bases(k, static_cast<Eigen::Index>(n));
    const double exact = eval_rd(mat, 0, b.r_nodes[n]);
    err2 += b.weights[n] * (approx - exact) * (approx - exact);
    norm2 += b.weights[n] * exact * exact;
  }
  EXPECT_NEAR(std::sqrt(err2 / norm2), errs[row], 1e-9);
}

TEST(Projection, MaterialWeightsPerChannel) {
  const auto& b = scenes::default_basis(12);
  const auto m = scenes::marble();
  const auto w = project_material(b, m);
  for (int c = 0; c < kChannels; ++c) EXPECT_EQ(w.s[static_cast<std::size_t>(c)], project_channel(b, m, c));
  std::vector<double> profile(b.r_nodes.size());
  for (std::size_t n = 0; n < profile.size(); ++n) profile[n] = eval_rd(m, 1, b.r_nodes[n]);
  const auto s = project_samples(b, profile);
  for (int k = 0; k < b.count(); ++k) EXPECT_NEAR(s[static_cast<std::size_t>(k)], w.s[1][static_cast<std::size_t>(k)], 1e-12 * std::abs(w.s[1][0]));
}

TEST(BasisSampler, MatchesEvalBasis) {
  const auto& b = scenes::default_basis(12);
  const BasisSampler sampler(b);
  std::vector<double> out(12);
  for (double r : {0.0, 1e-4, 0.37, 5.0, 123.4, b.r_max(), b.r_max() * 1.5}) {
    sampler.eval(r, out);
    for (int k = 0; k < 12; ++k) EXPECT_EQ(out[static_cast<std::size_t>(k)], eval_basis(b, k, r)) << r;
  }
  EXPECT_EQ(eval_basis(b, 0, b.r_max() * 2.0), 0.0);
}

TEST(SigmaBox, ClampReportsChanges) {
  SigmaBox box;
  OpticalMaterial m = scenes::marble();
  EXPECT_FALSE(box.clamp(m));
  m.sigma_a[0] = 5.0;
  m.sigma_s_prime[2] = 0.01;
  EXPECT_TRUE(box.clamp(m));
  EXPECT_EQ(m.sigma_a[0], box.sigma_a_max);
  EXPECT_EQ(m.sigma_s_prime[2], box.sigma_s_prime_min);
  EXPECT_TRUE(box.contains(1.0, 0.1));
  EXPECT_FALSE(box.contains(20.0, 0.1));
}

TEST(BasisIo, RoundTrip) {
  const auto& b = scenes::default_basis(12);
  BinaryWriter w;
  b.write(w);
  BinaryReader r(w.bytes());
  const auto back = DiffusionBasis::read(r);
  EXPECT_TRUE(r.at_end());
  EXPECT_EQ(back.r_nodes, b.r_nodes);
  EXPECT_EQ(back.bases, b.bases);
  EXPECT_EQ(back.singular_values, b.singular_values);
  EXPECT_EQ(back.box, b.box);
  EXPECT_EQ(back.eta, b.eta);

  auto bytes = w.bytes();
  bytes.resize(bytes.size() / 2);
  BinaryReader shortr(bytes);
  EXPECT_THROW((void)DiffusionBasis::read(shortr), FormatError);
}

TEST(BasisIo, TruncatedKeepsLeadingRows) {
  const auto& b = scenes::default_basis(12);
  const auto t = b.truncated(5);
  EXPECT_EQ(t.count(), 5);
  EXPECT_EQ(t.bases, b.bases.topRows(5));
}
