// SPDX-License-Identifier: Apache-2.0

#include "tprt/dipole.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace tprt {

void OpticalMaterial::validate() const {
  for (int c = 0; c < kChannels; ++c) {
    if (!(sigma_s_prime[c] > 0.0) || !std::isfinite(sigma_s_prime[c]))
      throw InvalidArgument("sigma_s_prime must be positive in every channel");
    if (!(sigma_a[c] > 0.0) || !std::isfinite(sigma_a[c]))
      throw InvalidArgument("sigma_a must be positive in every channel");
  }
  if (!(g > -1.0 && g < 1.0)) throw InvalidArgument("g must lie in (-1, 1)");
  if (!(eta >= 1.0 && eta <= 3.0)) throw InvalidArgument("eta must lie in [1, 3]");
}

double fdr(double eta) {
  return -1.440 / (eta * eta) + 0.710 / eta + 0.668 + 0.0636 * eta;
}

DipoleDerived derive_dipole(const OpticalMaterial& material, int channel) {
  assert(channel >= 0 && channel < kChannels);
  const double sp = material.sigma_s_prime[channel];
  const double sa = material.sigma_a[channel];

  DipoleDerived d;
  d.f_dr = fdr(material.eta);
  if (!(d.f_dr < 1.0)) throw InvalidArgument("diffuse Fresnel reflectance must be < 1");
  d.sigma_t_prime = sp + sa;
  d.alpha_prime = sp / d.sigma_t_prime;
  d.sigma_tr = std::sqrt(3.0 * sa * d.sigma_t_prime);
  d.a_boundary = (1.0 + d.f_dr) / (1.0 - d.f_dr);
  d.z_r = 1.0 / d.sigma_t_prime;
  d.z_v = d.z_r * (1.0 + 4.0 * d.a_boundary / 3.0);
  return d;
}

double eval_rd(const DipoleDerived& d, double r) {
  assert(r >= 0.0);
  const double r2 = r * r;
  const double dr = std::sqrt(r2 + d.z_r * d.z_r);
  const double dv = std::sqrt(r2 + d.z_v * d.z_v);
  const double real = d.z_r * (d.sigma_tr + 1.0 / dr) * std::exp(-d.sigma_tr * dr) / (dr * dr);
  const double virt = d.z_v * (d.sigma_tr + 1.0 / dv) * std::exp(-d.sigma_tr * dv) / (dv * dv);
  return d.alpha_prime / (4.0 * kPi) * (real + virt);
}

double eval_rd(const OpticalMaterial& material, int channel, double r) {
  return eval_rd(derive_dipole(material, channel), r);
}

double fresnel_transmittance(double eta, double cos_theta) {
  cos_theta = std::clamp(cos_theta, 0.0, 1.0);
  const double sin2_t = (1.0 - cos_theta * cos_theta) / (eta * eta);
  if (sin2_t >= 1.0) return 0.0;
  const double cos_t = std::sqrt(1.0 - sin2_t);
  const double rs = (cos_theta - eta * cos_t) / (cos_theta + eta * cos_t);
  const double rp = (eta * cos_theta - cos_t) / (eta * cos_theta + cos_t);
  const double reflect = 0.5 * (rs * rs + rp * rp);
  return std::clamp(1.0 - reflect, 0.0, 1.0);
}

}  // namespace tprt
