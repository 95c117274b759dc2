// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/common.hpp"

namespace tprt {

/// Homogeneous translucent material. Coefficients are in mm^-1, one value
/// per RGB channel; g and eta are shared by all channels.
struct OpticalMaterial {
  Rgb sigma_s_prime{1.0, 1.0, 1.0};
  Rgb sigma_a{0.1, 0.1, 0.1};
  double g = 0.0;
  double eta = 1.3;

  /// Raw scattering coefficient sigma_s = sigma_s' / (1 - g).
  [[nodiscard]] double sigma_s(int channel) const { return sigma_s_prime[channel] / (1.0 - g); }

  /// Throws InvalidArgument if any invariant is broken.
  void validate() const;

  bool operator==(const OpticalMaterial&) const = default;
};

/// Per-channel constants of the dipole diffusion model.
struct DipoleDerived {
  double sigma_t_prime = 0.0;  // reduced extinction, mm^-1
  double alpha_prime = 0.0;    // reduced albedo
  double sigma_tr = 0.0;       // effective transport coefficient, mm^-1
  double z_r = 0.0;            // real source depth, mm
  double z_v = 0.0;            // virtual source height, mm
  double a_boundary = 0.0;     // internal reflection boundary term
  double f_dr = 0.0;           // diffuse Fresnel reflectance
};

/// Rational fit of the diffuse Fresnel reflectance.
[[nodiscard]] double fdr(double eta);

[[nodiscard]] DipoleDerived derive_dipole(const OpticalMaterial& material, int channel);

/// Diffuse reflectance R_d(r) of the dipole, per unit area (mm^-2).
[[nodiscard]] double eval_rd(const DipoleDerived& d, double r);

/// Convenience overload building the derived constants on the fly.
[[nodiscard]] double eval_rd(const OpticalMaterial& material, int channel, double r);

/// 1 - F_r for unpolarized light entering a medium of relative index eta.
/// Returns 0 under total internal reflection.
[[nodiscard]] double fresnel_transmittance(double eta, double cos_theta);

}  // namespace tprt
