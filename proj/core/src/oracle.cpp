// SPDX-License-Identifier: Apache-2.0

#include "tprt/oracle.hpp"

#include "tprt/dipole.hpp"
#include "tprt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace tprt {

ChannelVectors oracle_scattered(const SurfaceSamples& samples, const ChannelVectors& irradiance,
                                const OpticalMaterial& material, OracleKernel kernel, const DiffusionBasis* basis) {
  material.validate();
  const std::size_t n = samples.size();
  for (const auto& ch : irradiance)
    if (ch.size() != n) throw DimensionMismatch("irradiance does not cover the samples");
  if (kernel == OracleKernel::Basis && basis == nullptr) throw InvalidArgument("basis kernel needs a basis");

  std::array<DipoleDerived, kChannels> derived;
  for (int c = 0; c < kChannels; ++c) derived[static_cast<std::size_t>(c)] = derive_dipole(material, c);
  MaterialWeights weights;
  std::optional<BasisSampler> sampler;
  if (kernel == OracleKernel::Basis) {
    weights = project_material(*basis, material);
    sampler.emplace(*basis);
  }

  ChannelVectors out;
  for (auto& ch : out) ch.assign(n, 0.0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> b(sampler ? static_cast<std::size_t>(sampler->count()) : 0);
    for (std::size_t o = begin; o < end; ++o) {
      Rgb acc{0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        const double r = (samples.positions[i] - samples.positions[o]).norm();
        const double a = samples.area[i];
        if (kernel == OracleKernel::Dipole) {
          for (int c = 0; c < kChannels; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            acc[cc] += irradiance[cc][i] * eval_rd(derived[cc], r) * a;
          }
        } else {
          if (r > sampler->r_max()) continue;
          sampler->eval(r, b);
          for (int c = 0; c < kChannels; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            double kr = 0.0;
            for (std::size_t k = 0; k < b.size(); ++k) kr += weights.s[cc][k] * b[k];
            acc[cc] += irradiance[cc][i] * kr * a;
          }
        }
      }
      for (int c = 0; c < kChannels; ++c) out[static_cast<std::size_t>(c)][o] = acc[static_cast<std::size_t>(c)];
    }
  });
  return out;
}

ErrorMetrics compare(const ChannelVectors& test, const ChannelVectors& reference) {
  double diff2 = 0.0, ref2 = 0.0, max_abs = 0.0, max_ref = 0.0;
  for (int c = 0; c < kChannels; ++c) {
    const auto& a = test[static_cast<std::size_t>(c)];
    const auto& b = reference[static_cast<std::size_t>(c)];
    if (a.size() != b.size()) throw DimensionMismatch("compared vectors differ in length");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      diff2 += d * d;
      ref2 += b[i] * b[i];
      max_abs = std::max(max_abs, std::abs(d));
      max_ref = std::max(max_ref, std::abs(b[i]));
    }
  }
  ErrorMetrics m;
  m.rms_rel = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
  m.linf_abs = max_abs;
  m.linf_rel = max_ref > 0.0 ? max_abs / max_ref : max_abs;
  return m;
}

}  // namespace tprt
