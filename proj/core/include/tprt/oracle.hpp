// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tprt/basis.hpp"
#include "tprt/lighting.hpp"
#include "tprt/surface.hpp"

namespace tprt {

/// Radial kernel used by the brute-force reference.
enum class OracleKernel {
  Dipole,  // the analytic R_d
  Basis,   // sum_k s_k b_k(r), the kernel the compressed pipeline represents
};

/// Brute-force double sum: out(x_o) = sum_i E(x_i) kernel(|x_i - x_o|) A_i per channel.
[[nodiscard]] ChannelVectors oracle_scattered(const SurfaceSamples& samples, const ChannelVectors& irradiance,
                                              const OpticalMaterial& material, OracleKernel kernel,
                                              const DiffusionBasis* basis = nullptr);

struct ErrorMetrics {
  double rms_rel = 0.0;   // ||a - b||_2 / ||b||_2 over all samples and channels
  double linf_abs = 0.0;  // max |a - b|
  double linf_rel = 0.0;  // linf_abs / max |b|
};

[[nodiscard]] ErrorMetrics compare(const ChannelVectors& test, const ChannelVectors& reference);

}  // namespace tprt
