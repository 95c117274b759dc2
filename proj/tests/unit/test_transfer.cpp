// SPDX-License-Identifier: Apache-2.0

#include "tprt/dipole.hpp"
#include "tprt/transfer.hpp"

#include "support/scenes.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace tprt;

namespace {

struct Fixture {
  TriangleMesh mesh;
  SurfaceSamples samples;
  QuadtreeAtlas atlas;
  const DiffusionBasis* basis = nullptr;
};

Fixture small_sphere(int k = 4) {
  Fixture f;
  f.mesh = make_icosphere(2, 3.0);
  f.samples = sample_surface(f.mesh);
  f.atlas = build_quadtree_atlas(f.samples.positions, 4, default_level(f.samples.size(), 4));
  f.basis = &scenes::default_basis(k);
  return f;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// T_k e evaluated straight from the kernel.
std::vector<double> dense_apply(const Fixture& f, int k, const std::vector<double>& e) {
  const BasisSampler sampler(*f.basis);
  std::vector<double> out(f.samples.size());
  for (std::size_t o = 0; o < out.size(); ++o) {
    const Eigen::MatrixXd rows = transfer_rows(f.samples, sampler, o);
    out[o] = rows.row(k).dot(Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size())));
  }
  return out;
}

std::vector<double> compressed_apply(const Fixture& f, const CompressedTransfer& t, int k, const std::vector<double>& e) {
  const auto w0 = project_domain(Wavelet::Haar, f.atlas, e);
  std::vector<double> w1(t.domain_size(), 0.0);
  t.apply(k, w0, w1);
  return unproject_domain(Wavelet::Cdf97, f.atlas, w1);
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

PrecomputeOptions lossless() {
  PrecomputeOptions o;
  o.step1_keep_all = true;
  o.step2_fraction = 1.0;
  return o;
}

}  // namespace

TEST(RetainedCount, RoundsAndClamps) {
  EXPECT_EQ(retained_count(1024, 0.01), 10u);
  EXPECT_EQ(retained_count(16384, 0.01), 164u);
  EXPECT_EQ(retained_count(10, 1e-4), 1u);
  EXPECT_EQ(retained_count(8, 1.0), 8u);
  EXPECT_THROW((void)retained_count(8, 0.0), InvalidArgument);
  EXPECT_THROW((void)retained_count(8, 1.5), InvalidArgument);
}

TEST(TransferRows, KernelTimesArea) {
  const auto f = small_sphere();
  const BasisSampler sampler(*f.basis);
  const Eigen::MatrixXd rows = transfer_rows(f.samples, sampler, 7);
  ASSERT_EQ(rows.rows(), 4);
  ASSERT_EQ(rows.cols(), static_cast<Eigen::Index>(f.samples.size()));
  for (std::size_t i : {0u, 7u, 50u, 161u}) {
    const double r = (f.samples.positions[i] - f.samples.positions[7]).norm();
    EXPECT_DOUBLE_EQ(rows(1, static_cast<Eigen::Index>(i)), eval_basis(*f.basis, 1, r) * f.samples.area[i]);
  }
}

TEST(Transfer, LosslessMatchesDenseKernel) {
  const auto f = small_sphere();
  const auto t = precompute_transfer(f.samples, f.atlas, *f.basis, lossless());
  EXPECT_EQ(t.step1_terms(), t.domain_size());
  const auto stats = t.stats();
  EXPECT_NEAR(stats.step1_energy, 1.0, 1e-12);
  EXPECT_NEAR(stats.step2_energy, 1.0, 1e-12);
  const auto e = random_signal(f.samples.size(), 11);
  for (int k = 0; k < t.count(); ++k) {
    // Stored values are single precision.
    EXPECT_LT(rel_l2(compressed_apply(f, t, k, e), dense_apply(f, k, e)), 1e-6) << "k=" << k;
  }
}

TEST(Transfer, SparseAndDenseApplyAgree) {
  const auto f = small_sphere();
  PrecomputeOptions o;
  o.step1_fraction = 0.1;
  o.step2_fraction = 0.99;
  const auto t = precompute_transfer(f.samples, f.atlas, *f.basis, o);
  const auto w0 = project_domain(Wavelet::Haar, f.atlas, random_signal(f.samples.size(), 5));
  for (int k = 0; k < t.count(); ++k) {
    std::vector<double> a(t.domain_size(), 0.0), b(t.domain_size(), 0.0);
    t.apply(k, w0, a);
    t.apply(k, to_sparse(w0), b);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1.0 + std::abs(a[i])));
  }
  std::vector<double> wrong(3, 0.0);
  EXPECT_THROW(t.apply(0, w0, wrong), DimensionMismatch);
}

TEST(Transfer, SpillPathEqualsInMemoryPath) {
  const auto f = small_sphere();
  scenes::TempDir dir;
  PrecomputeOptions o;
  o.step1_fraction = 0.05;
  o.step2_fraction = 0.95;
  o.rows_per_batch = 7;
  o.spill_dir = dir.path();
  const auto spilled = precompute_transfer(f.samples, f.atlas, *f.basis, o);
  const auto rows = precompute_step1(f.samples, f.atlas, *f.basis, retained_count(f.atlas.domain_size(), 0.05));
  ASSERT_EQ(spilled.count(), static_cast<int>(rows.size()));
  for (int k = 0; k < spilled.count(); ++k) {
    const auto block = compress_step2(rows[static_cast<std::size_t>(k)], f.atlas, 0.95);
    const auto& got = spilled.block(k);
    ASSERT_EQ(got.columns.size(), block.columns.size());
    EXPECT_EQ(got.step1_nnz, block.step1_nnz);
    for (std::size_t c = 0; c < block.columns.size(); ++c) {
      EXPECT_EQ(got.columns[c].source, block.columns[c].source);
      EXPECT_EQ(got.columns[c].spectrum.indices, block.columns[c].spectrum.indices);
      EXPECT_EQ(got.columns[c].spectrum.values, block.columns[c].spectrum.values);
    }
  }
  // Spill files are removed once the transfer is built.
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(Transfer, Step1KeepsExactlyNPerRow) {
  const auto f = small_sphere();
  const auto rows = precompute_step1(f.samples, f.atlas, *f.basis, 9);
  for (const auto& basis_rows : rows)
    for (const auto& r : basis_rows) {
      EXPECT_LE(r.nnz(), 9u);
      EXPECT_LE(r.kept_energy, r.total_energy * (1.0 + 1e-12));
    }
  const auto block = compress_step2(rows[0], f.atlas, 1.0);
  EXPECT_GT(block.columns.size(), 0u);
  EXPECT_TRUE(std::is_sorted(block.columns.begin(), block.columns.end(),
                             [](const auto& a, const auto& b) { return a.source < b.source; }));
  std::vector<SparseSpectrum> short_rows(rows[0].begin(), rows[0].begin() + 3);
  EXPECT_THROW((void)compress_step2(short_rows, f.atlas, 1.0), DimensionMismatch);
}

TEST(Transfer, TruncationErrorShrinksWithRetention) {
  const auto f = small_sphere();
  const auto e = random_signal(f.samples.size(), 2);
  const auto ref = dense_apply(f, 0, e);
  double prev = std::numeric_limits<double>::infinity();
  for (double frac : {0.9, 0.99, 0.9999}) {
    PrecomputeOptions o;
    o.step1_keep_all = true;
    o.step2_fraction = frac;
    const double err = rel_l2(compressed_apply(f, precompute_transfer(f.samples, f.atlas, *f.basis, o), 0, e), ref);
    EXPECT_LT(err, prev + 1e-9);
    prev = err;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(Visibility, ConvexSphereSeesItsHemisphere) {
  const auto mesh = make_icosphere(2, 3.0);
  const auto samples = sample_surface(mesh);
  const auto vis = precompute_visibility(samples, build_accelerator(mesh), 4);
  std::size_t upper = 0, seen = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t d = 0; d < vis.directions.size(); ++d) {
      const double c = samples.normals[i].dot(vis.directions.directions[d]);
      if (c <= 0.0) {
        EXPECT_FALSE(vis.at(i, d));
        continue;
      }
      ++upper;
      seen += vis.at(i, d);
    }
  // Only grazing rays may clip neighbouring facets.
  EXPECT_GT(static_cast<double>(seen), 0.98 * static_cast<double>(upper));
}

TEST(Visibility, ConstantEnvironmentGivesPi) {
  const auto mesh = make_icosphere(2, 3.0);
  const auto samples = sample_surface(mesh);
  const auto vis = precompute_visibility(samples, build_accelerator(mesh), 16);
  const auto e = irradiance_from_visibility(vis, samples, 1.0, Cubemap(16, {1.0, 2.0, 0.0}));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_NEAR(e[0][i], kPi, 0.02 * kPi);
    EXPECT_NEAR(e[1][i], 2.0 * e[0][i], 1e-12);
    EXPECT_EQ(e[2][i], 0.0);
  }
}

TEST(Visibility, ResampleKeepsMeans) {
  Cubemap src(8, {0.0, 0.0, 0.0});
  for (std::size_t t = 0; t < src.texel_count(); ++t) src.radiance[0][t] = static_cast<double>(t % 13);
  const auto down = resample_cubemap(src, 2);
  for (int f = 0; f < 6; ++f) {
    double a = 0.0, b = 0.0;
    for (int t = 0; t < 64; ++t) a += src.radiance[0][static_cast<std::size_t>(f * 64 + t)];
    for (int t = 0; t < 4; ++t) b += down.radiance[0][static_cast<std::size_t>(f * 4 + t)];
    EXPECT_NEAR(a / 64.0, b / 4.0, 1e-12);
  }
  const auto up = resample_cubemap(down, 8);
  EXPECT_EQ(up.radiance[0][0], down.radiance[0][0]);
  EXPECT_THROW((void)resample_cubemap(src, 3), InvalidArgument);
}

class FoldTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    f_ = new Fixture(small_sphere());
    t_ = new CompressedTransfer(precompute_transfer(f_->samples, f_->atlas, *f_->basis, lossless()));
    vis_ = new VisibilityMatrix(precompute_visibility(f_->samples, build_accelerator(f_->mesh), 4));
  }
  static void TearDownTestSuite() {
    delete f_;
    delete t_;
    delete vis_;
  }
  static Fixture* f_;
  static CompressedTransfer* t_;
  static VisibilityMatrix* vis_;
};
Fixture* FoldTest::f_ = nullptr;
CompressedTransfer* FoldTest::t_ = nullptr;
VisibilityMatrix* FoldTest::vis_ = nullptr;

TEST_F(FoldTest, FoldedEqualsUnfoldedAtFullRetention) {
  const auto folded = fold_visibility(*t_, *vis_, f_->samples, f_->atlas, 1.3, 1.0);
  EXPECT_EQ(folded.direction_count(), 96u);
  Cubemap env(4, {0.0, 0.0, 0.0});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (auto& ch : env.radiance)
    for (auto& v : ch) v = u(rng);
  const auto spectrum = project_environment(env, env.texel_count());
  const auto out = irradiance_ambient(folded, spectrum);
  const auto e = irradiance_from_visibility(*vis_, f_->samples, 1.3, env);
  for (int k = 0; k < t_->count(); ++k)
    for (int c = 0; c < kChannels; ++c) {
      const auto w0 = project_domain(Wavelet::Haar, f_->atlas, e[static_cast<std::size_t>(c)]);
      std::vector<double> ref(t_->domain_size(), 0.0);
      t_->apply(k, w0, ref);
      EXPECT_LT(rel_l2(out[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)], ref), 1e-6);
    }
}

TEST_F(FoldTest, ZeroEnvironmentAndLinearity) {
  const auto folded = fold_visibility(*t_, *vis_, f_->samples, f_->atlas, 1.3, 0.999);
  EXPECT_LE(folded.stored_nnz(), static_cast<std::uint64_t>(t_->count()) * 96u * t_->domain_size());
  const auto zero = irradiance_ambient(folded, project_environment(Cubemap(4, {0, 0, 0}), 96));
  for (const auto& k : zero)
    for (const auto& ch : k)
      for (double v : ch) EXPECT_EQ(v, 0.0);
  const auto one = irradiance_ambient(folded, project_environment(Cubemap(4, {1, 1, 1}), 96));
  const auto three = irradiance_ambient(folded, project_environment(Cubemap(4, {3, 3, 3}), 96));
  for (std::size_t a = 0; a < folded.domain_size; ++a) EXPECT_NEAR(three[0][0][a], 3.0 * one[0][0][a], 1e-9 * (1.0 + std::abs(three[0][0][a])));
  EXPECT_THROW((void)irradiance_ambient(folded, project_environment(Cubemap(8, {1, 1, 1}), 10)), DimensionMismatch);
}
