// SPDX-License-Identifier: Apache-2.0

#include "tprt/dipole.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tprt;

namespace {

OpticalMaterial unit_material() {
  OpticalMaterial m;
  m.sigma_s_prime = {1.0, 1.0, 1.0};
  m.sigma_a = {0.1, 0.1, 0.1};
  m.eta = 1.3;
  return m;
}

}  // namespace

TEST(Dipole, WorkedValue) {
  EXPECT_NEAR(eval_rd(unit_material(), 0, 1.0), 0.02301, 1e-4);
}

TEST(Dipole, DerivedConstants) {
  const auto d = derive_dipole(unit_material(), 0);
  EXPECT_DOUBLE_EQ(d.sigma_t_prime, 1.1);
  EXPECT_DOUBLE_EQ(d.alpha_prime, 1.0 / 1.1);
  EXPECT_NEAR(d.sigma_tr, std::sqrt(3.0 * 0.1 * 1.1), 1e-15);
  EXPECT_NEAR(d.z_r, 1.0 / 1.1, 1e-15);
  // z_v = z_r + 4 A D with D = 1 / (3 sigma_t').
  EXPECT_NEAR(d.z_v, d.z_r + 4.0 * d.a_boundary / (3.0 * 1.1), 1e-14);
  EXPECT_GT(d.z_v, d.z_r);
}

TEST(Dipole, DiffuseFresnelFit) {
  // Rational fit evaluated by hand at eta = 1 and eta = 1.3.
  EXPECT_NEAR(fdr(1.0), -1.44 + 0.71 + 0.668 + 0.0636, 1e-15);
  EXPECT_NEAR(fdr(1.3), 0.444763, 1e-6);
}

TEST(Dipole, PositiveAndDecreasingInRadius) {
  const auto d = derive_dipole(unit_material(), 0);
  double prev = eval_rd(d, 0.0);
  EXPECT_GT(prev, 0.0);
  for (double r = 0.05; r < 30.0; r += 0.05) {
    const double v = eval_rd(d, r);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Dipole, ChannelsAreIndependent) {
  OpticalMaterial m = unit_material();
  m.sigma_a[2] = 0.5;
  EXPECT_EQ(eval_rd(m, 0, 2.0), eval_rd(m, 1, 2.0));
  EXPECT_LT(eval_rd(m, 2, 2.0), eval_rd(m, 0, 2.0));
}

TEST(Dipole, TotalDiffuseReflectanceMatchesClosedForm) {
  // 2 pi int_0^inf R_d(r) r dr = (alpha'/2) (1 + exp(-4/3 A sqrt(3(1-alpha')))) exp(-sqrt(3(1-alpha'))).
  const auto d = derive_dipole(unit_material(), 0);
  double integral = 0.0;
  const double h = 1e-3;
  for (double r = 0.5 * h; r < 80.0; r += h) integral += eval_rd(d, r) * r * h;
  integral *= 2.0 * kPi;
  const double s = std::sqrt(3.0 * (1.0 - d.alpha_prime));
  const double closed = 0.5 * d.alpha_prime * (1.0 + std::exp(-4.0 / 3.0 * d.a_boundary * s)) * std::exp(-s);
  EXPECT_NEAR(integral, closed, 1e-6 * closed);
}

TEST(Fresnel, NormalIncidence) {
  const double eta = 1.5;
  const double r0 = (eta - 1.0) * (eta - 1.0) / ((eta + 1.0) * (eta + 1.0));
  EXPECT_NEAR(fresnel_transmittance(eta, 1.0), 1.0 - r0, 1e-14);
  EXPECT_DOUBLE_EQ(fresnel_transmittance(1.0, 0.3), 1.0);
}

TEST(Fresnel, GrazingAndTotalInternalReflection) {
  EXPECT_NEAR(fresnel_transmittance(1.3, 0.0), 0.0, 1e-12);
  // eta < 1 (leaving a denser medium) past the critical angle.
  EXPECT_EQ(fresnel_transmittance(1.0 / 1.5, 0.2), 0.0);
  for (double c = 0.01; c <= 1.0; c += 0.01) {
    const double t = fresnel_transmittance(1.3, c);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
  }
}

TEST(Material, ValidationRejectsBadValues) {
  OpticalMaterial m = unit_material();
  m.sigma_s_prime[1] = -1.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = unit_material();
  m.sigma_a[0] = 0.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = unit_material();
  m.g = 1.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = unit_material();
  m.eta = 0.5;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = unit_material();
  m.sigma_a[2] = std::nan("");
  EXPECT_THROW(m.validate(), InvalidArgument);
  EXPECT_NO_THROW(unit_material().validate());
}
