// SPDX-License-Identifier: Apache-2.0

#include "tprt/transfer.hpp"

#include "tprt/binary_io.hpp"
#include "tprt/dipole.hpp"
#include "tprt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace tprt {

Eigen::MatrixXd transfer_rows(const SurfaceSamples& samples, const BasisSampler& sampler, std::size_t out_sample) {
  const std::size_t n = samples.size();
  const int k = sampler.count();
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(n));
  std::vector<double> b(static_cast<std::size_t>(k));
  const Vec3& xo = samples.positions[out_sample];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (samples.positions[i] - xo).norm();
    if (r > sampler.r_max()) continue;
    sampler.eval(r, b);
    for (int j = 0; j < k; ++j) rows(j, static_cast<Eigen::Index>(i)) = b[static_cast<std::size_t>(j)] * samples.area[i];
  }
  return rows;
}

std::size_t retained_count(std::size_t domain_size, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("retention fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(domain_size)));
  return std::clamp<std::size_t>(n, 1, domain_size);
}

namespace {

void transform_parts(Wavelet w, const QuadtreeAtlas& atlas, std::span<double> domain, bool inverse) {
  const std::size_t cells = atlas.cells_per_part();
  for (int p = 0; p < atlas.part_count(); ++p) {
    auto part = domain.subspan(static_cast<std::size_t>(p) * cells, cells);
    if (inverse) {
      inverse_inplace(w, part, atlas.side());
    } else {
      forward_inplace(w, part, atlas.side());
    }
  }
}

// Rounds retained values to the f32 precision used on disk so in-memory and
// loaded operators agree exactly.
void quantize(SparseSpectrum& s) {
  for (double& v : s.values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

SparseSpectrum compress_step1(std::span<const double> row, const QuadtreeAtlas& atlas, std::size_t n) {
  auto domain = flatten_all(atlas, row);
  transform_parts(Wavelet::Haar, atlas, domain, false);
  return compress_top_n(domain, n);
}

std::vector<double> project_domain(Wavelet w, const QuadtreeAtlas& atlas, std::span<const double> values) {
  auto domain = flatten_all(atlas, values);
  transform_parts(w, atlas, domain, false);
  return domain;
}

std::vector<double> unproject_domain(Wavelet w, const QuadtreeAtlas& atlas, std::span<const double> coeffs) {
  if (coeffs.size() != atlas.domain_size()) throw DimensionMismatch("coefficient vector does not match the atlas domain");
  std::vector<double> domain(coeffs.begin(), coeffs.end());
  transform_parts(w, atlas, domain, true);
  return unflatten_all(atlas, domain);
}

std::uint64_t TransferBlock::stored_nnz() const {
  std::uint64_t n = 0;
  for (const auto& c : columns) n += c.spectrum.nnz();
  return n;
}

TransferBlock compress_step2(std::span<const SparseSpectrum> rows, const QuadtreeAtlas& atlas, double fraction) {
  if (rows.size() != atlas.sample_count()) throw DimensionMismatch("step-2 input needs one spectrum per sample");
  const std::size_t domain = atlas.domain_size();
  TransferBlock block;

  std::vector<std::int32_t> slot(domain, -1);
  std::vector<std::uint32_t> sources;
  for (const auto& row : rows) {
    if (row.size != domain) throw DimensionMismatch("step-1 spectrum does not match the atlas domain");
    block.step1_total += row.total_energy;
    block.step1_kept += row.kept_energy;
    block.step1_nnz += row.nnz();
    for (auto idx : row.indices) {
      if (slot[idx] < 0) {
        slot[idx] = 0;
        sources.push_back(idx);
      }
    }
  }
  std::sort(sources.begin(), sources.end());
  for (std::size_t c = 0; c < sources.size(); ++c) slot[sources[c]] = static_cast<std::int32_t>(c);

  // Column c holds the coefficient of source c for every out-sample, laid out over the atlas.
  std::vector<double> columns(sources.size() * domain, 0.0);
  for (std::size_t o = 0; o < rows.size(); ++o) {
    const std::size_t cell = atlas.domain_index(o);
    const auto& row = rows[o];
    for (std::size_t e = 0; e < row.nnz(); ++e)
      columns[static_cast<std::size_t>(slot[row.indices[e]]) * domain + cell] = row.values[e];
  }

  block.columns.resize(sources.size());
  parallel_for(sources.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      std::span<double> col(columns.data() + c * domain, domain);
      transform_parts(Wavelet::Cdf97, atlas, col, false);
      auto spectrum = compress_energy(col, fraction);
      quantize(spectrum);
      block.columns[c] = {sources[c], std::move(spectrum)};
    }
  });
  for (const auto& c : block.columns) {
    block.step2_total += c.spectrum.total_energy;
    block.step2_kept += c.spectrum.kept_energy;
  }
  return block;
}

CompressedTransfer::CompressedTransfer(std::uint32_t domain_size, std::uint32_t step1_terms, double step2_fraction,
                                       std::vector<TransferBlock> blocks)
    : domain_size_(domain_size), step1_terms_(step1_terms), step2_fraction_(step2_fraction), blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    std::uint32_t prev = 0;
    bool first = true;
    for (const auto& c : b.columns) {
      if (c.source >= domain_size_ || c.spectrum.size != domain_size_)
        throw FormatError("transfer column lies outside the domain");
      if (!first && c.source <= prev) throw FormatError("transfer columns are not in ascending source order");
      prev = c.source;
      first = false;
    }
  }
  index_columns();
}

void CompressedTransfer::index_columns() {
  column_of_.assign(blocks_.size(), std::vector<std::int32_t>(domain_size_, -1));
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    for (std::size_t c = 0; c < blocks_[k].columns.size(); ++c)
      column_of_[k][blocks_[k].columns[c].source] = static_cast<std::int32_t>(c);
}

const TransferColumn* CompressedTransfer::column(int k, std::uint32_t j) const {
  const auto c = column_of_[static_cast<std::size_t>(k)][j];
  return c < 0 ? nullptr : &blocks_[static_cast<std::size_t>(k)].columns[static_cast<std::size_t>(c)];
}

void CompressedTransfer::apply(int k, const SparseSpectrum& signal_w0, std::span<double> out_w1) const {
  if (signal_w0.size != domain_size_ || out_w1.size() != domain_size_)
    throw DimensionMismatch("transfer apply size mismatch");
  for (std::size_t e = 0; e < signal_w0.nnz(); ++e)
    if (const auto* col = column(k, signal_w0.indices[e])) col->spectrum.accumulate_into(out_w1, signal_w0.values[e]);
}

void CompressedTransfer::apply(int k, std::span<const double> signal_w0, std::span<double> out_w1) const {
  if (signal_w0.size() != domain_size_ || out_w1.size() != domain_size_)
    throw DimensionMismatch("transfer apply size mismatch");
  for (const auto& col : blocks_[static_cast<std::size_t>(k)].columns) {
    const double e = signal_w0[col.source];
    if (e != 0.0) col.spectrum.accumulate_into(out_w1, e);
  }
}

TransferStats CompressedTransfer::stats() const {
  TransferStats s;
  double t1 = 0.0, k1 = 0.0, t2 = 0.0, k2 = 0.0;
  for (const auto& b : blocks_) {
    s.step1_nnz += b.step1_nnz;
    s.stored_nnz += b.stored_nnz();
    t1 += b.step1_total;
    k1 += b.step1_kept;
    t2 += b.step2_total;
    k2 += b.step2_kept;
  }
  s.step1_energy = t1 > 0.0 ? k1 / t1 : 1.0;
  s.step2_energy = t2 > 0.0 ? k2 / t2 : 1.0;
  return s;
}

namespace {

// Runs step 1 over out-samples in atlas order, handing each finished batch to
// `sink` serially so spill files keep that order.
void run_step1(const SurfaceSamples& samples, const QuadtreeAtlas& atlas, const DiffusionBasis& basis, std::size_t n,
               std::size_t batch_size,
               const std::function<void(std::span<const std::uint32_t>, std::vector<std::vector<SparseSpectrum>>&)>& sink,
               const std::function<void(std::string_view, double)>& on_progress) {
  if (atlas.sample_count() != samples.size()) throw DimensionMismatch("atlas and samples disagree on the sample count");
  const BasisSampler sampler(basis);
  const int k_count = basis.count();
  const auto order = atlas.atlas_order();
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, order.size() - start);
    std::span<const std::uint32_t> batch(order.data() + start, count);
    // spectra[b][k]
    std::vector<std::vector<SparseSpectrum>> spectra(count, std::vector<SparseSpectrum>(static_cast<std::size_t>(k_count)));
    parallel_for(count, [&](std::size_t begin, std::size_t end) {
      for (std::size_t b = begin; b < end; ++b) {
        const Eigen::MatrixXd rows = transfer_rows(samples, sampler, batch[b]);
        std::vector<double> row(samples.size());
        for (int k = 0; k < k_count; ++k) {
          for (std::size_t i = 0; i < row.size(); ++i) row[i] = rows(k, static_cast<Eigen::Index>(i));
          spectra[b][static_cast<std::size_t>(k)] = compress_step1(row, atlas, n);
        }
      }
    });
    sink(batch, spectra);
    if (on_progress) on_progress("step1", static_cast<double>(start + count) / static_cast<double>(order.size()));
  }
}

class SpillFiles {
 public:
  SpillFiles(std::filesystem::path dir, int count) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    for (int k = 0; k < count; ++k) {
      paths_.push_back(dir_ / ("step1_k" + std::to_string(k) + ".bin"));
      streams_.emplace_back(paths_.back(), std::ios::binary | std::ios::trunc);
      if (!streams_.back()) throw IoError("cannot create spill file " + paths_.back().string());
    }
  }
  SpillFiles(const SpillFiles&) = delete;
  SpillFiles& operator=(const SpillFiles&) = delete;
  ~SpillFiles() {
    streams_.clear();
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }

  void append(int k, std::uint32_t sample, const SparseSpectrum& s) {
    BinaryWriter w;
    w.put<std::uint32_t>(sample);
    // Full precision: quantization belongs to step 2 only.
    w.put<std::uint32_t>(s.size);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.nnz()));
    w.put_array(std::span<const std::uint32_t>(s.indices));
    w.put_array(std::span<const double>(s.values));
    w.put(s.total_energy);
    w.put(s.kept_energy);
    auto& out = streams_[static_cast<std::size_t>(k)];
    out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.size()));
    if (!out) throw IoError("failed writing spill file " + paths_[static_cast<std::size_t>(k)].string());
  }

  std::vector<SparseSpectrum> read(int k, std::size_t sample_count) {
    auto& out = streams_[static_cast<std::size_t>(k)];
    out.close();
    std::ifstream in(paths_[static_cast<std::size_t>(k)], std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::filesystem::remove(paths_[static_cast<std::size_t>(k)]);
    BinaryReader r(bytes);
    std::vector<SparseSpectrum> rows(sample_count);
    std::size_t seen = 0;
    while (!r.at_end()) {
      const auto sample = r.get<std::uint32_t>();
      if (sample >= sample_count) throw FormatError("spill file names an unknown sample");
      auto& row = rows[sample];
      row.size = r.get<std::uint32_t>();
      const std::size_t count = r.get_count(12);
      row.indices.resize(count);
      row.values.resize(count);
      r.get_array(std::span<std::uint32_t>(row.indices));
      r.get_array(std::span<double>(row.values));
      row.total_energy = r.get<double>();
      row.kept_energy = r.get<double>();
      ++seen;
    }
    if (seen != sample_count) throw FormatError("spill file is incomplete");
    return rows;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> paths_;
  std::vector<std::ofstream> streams_;
};

std::filesystem::path unique_spill_dir(const std::filesystem::path& base) {
  const auto root = base.empty() ? std::filesystem::temp_directory_path() : base;
  std::random_device rd;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const auto dir = root / ("tprt-spill-" + std::to_string(rd()));
    if (!std::filesystem::exists(dir)) return dir;
  }
  throw IoError("cannot find a free spill directory under " + root.string());
}

}  // namespace

std::vector<std::vector<SparseSpectrum>> precompute_step1(const SurfaceSamples& samples, const QuadtreeAtlas& atlas,
                                                          const DiffusionBasis& basis, std::size_t n) {
  std::vector<std::vector<SparseSpectrum>> out(static_cast<std::size_t>(basis.count()),
                                               std::vector<SparseSpectrum>(samples.size()));
  run_step1(samples, atlas, basis, n, 256,
            [&](std::span<const std::uint32_t> batch, std::vector<std::vector<SparseSpectrum>>& spectra) {
              for (std::size_t b = 0; b < batch.size(); ++b)
                for (std::size_t k = 0; k < out.size(); ++k) out[k][batch[b]] = std::move(spectra[b][k]);
            },
            {});
  return out;
}

CompressedTransfer precompute_transfer(const SurfaceSamples& samples, const QuadtreeAtlas& atlas,
                                       const DiffusionBasis& basis, const PrecomputeOptions& options) {
  const std::size_t domain = atlas.domain_size();
  const std::size_t n = options.step1_keep_all ? domain : retained_count(domain, options.step1_fraction);
  if (!(options.step2_fraction >= 0.0 && options.step2_fraction <= 1.0))
    throw InvalidArgument("step-2 energy fraction must lie in [0, 1]");

  SpillFiles spill(unique_spill_dir(options.spill_dir), basis.count());
  run_step1(samples, atlas, basis, n, options.rows_per_batch,
            [&](std::span<const std::uint32_t> batch, std::vector<std::vector<SparseSpectrum>>& spectra) {
              for (std::size_t b = 0; b < batch.size(); ++b)
                for (int k = 0; k < basis.count(); ++k) spill.append(k, batch[b], spectra[b][static_cast<std::size_t>(k)]);
            },
            options.on_progress);

  std::vector<TransferBlock> blocks;
  for (int k = 0; k < basis.count(); ++k) {
    const auto rows = spill.read(k, samples.size());
    blocks.push_back(compress_step2(rows, atlas, options.step2_fraction));
    if (options.on_progress) options.on_progress("step2", static_cast<double>(k + 1) / basis.count());
  }
  return {static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(n), options.step2_fraction, std::move(blocks)};
}

VisibilityMatrix precompute_visibility(const SurfaceSamples& samples, const RayAccelerator& accel, int face_side,
                                       double offset) {
  VisibilityMatrix vis;
  vis.samples = samples.size();
  vis.directions = make_direction_set(face_side);
  const std::size_t d_count = vis.directions.size();
  vis.visible.assign(vis.samples * d_count, 0);
  const double eps = offset >= 0.0 ? offset : 1e-4 * accel.scene_diagonal();
  parallel_for(vis.samples, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3 origin = samples.positions[i] + eps * samples.normals[i];
      for (std::size_t d = 0; d < d_count; ++d) {
        const Vec3& dir = vis.directions.directions[d];
        if (samples.normals[i].dot(dir) <= 0.0) continue;
        vis.visible[i * d_count + d] = accel.occluded({origin, dir}) ? 0 : 1;
      }
    }
  });
  return vis;
}

std::vector<double> ambient_weights(const VisibilityMatrix& vis, const SurfaceSamples& samples, double eta) {
  if (vis.samples != samples.size()) throw DimensionMismatch("visibility and samples disagree on the sample count");
  const std::size_t d_count = vis.directions.size();
  std::vector<double> g(vis.samples * d_count, 0.0);
  parallel_for(vis.samples, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t d = 0; d < d_count; ++d) {
        if (!vis.at(i, d)) continue;
        const double c = samples.normals[i].dot(vis.directions.directions[d]);
        if (c <= 0.0) continue;
        g[i * d_count + d] = c * fresnel_transmittance(eta, std::min(c, 1.0)) * vis.directions.solid_angle[d];
      }
  });
  return g;
}

Cubemap resample_cubemap(const Cubemap& source, int face_side) {
  source.validate();
  if (face_side < 1 || !is_power_of_two(static_cast<std::uint64_t>(face_side)))
    throw InvalidArgument("cubemap face side must be a power of two");
  if (source.side == face_side) return source;
  Cubemap out(face_side, {0.0, 0.0, 0.0});
  const int s = source.side;
  for (int f = 0; f < 6; ++f)
    for (int r = 0; r < face_side; ++r)
      for (int c = 0; c < face_side; ++c) {
        const auto dst = static_cast<std::size_t>(f * face_side * face_side + r * face_side + c);
        if (s > face_side) {
          const int ratio = s / face_side;
          for (int ch = 0; ch < kChannels; ++ch) {
            double sum = 0.0;
            for (int rr = 0; rr < ratio; ++rr)
              for (int cc = 0; cc < ratio; ++cc)
                sum += source.radiance[static_cast<std::size_t>(ch)]
                                      [static_cast<std::size_t>(f * s * s + (r * ratio + rr) * s + c * ratio + cc)];
            out.radiance[static_cast<std::size_t>(ch)][dst] = sum / (ratio * ratio);
          }
        } else {
          const int ratio = face_side / s;
          const auto src = static_cast<std::size_t>(f * s * s + (r / ratio) * s + c / ratio);
          for (int ch = 0; ch < kChannels; ++ch)
            out.radiance[static_cast<std::size_t>(ch)][dst] = source.radiance[static_cast<std::size_t>(ch)][src];
        }
      }
  return out;
}

ChannelVectors irradiance_from_visibility(const VisibilityMatrix& vis, const SurfaceSamples& samples, double eta,
                                          const Cubemap& environment) {
  const Cubemap env = resample_cubemap(environment, vis.directions.face_side);
  const auto g = ambient_weights(vis, samples, eta);
  const std::size_t d_count = vis.directions.size();
  ChannelVectors e;
  for (int c = 0; c < kChannels; ++c) {
    auto& out = e[static_cast<std::size_t>(c)];
    out.assign(vis.samples, 0.0);
    const auto& l = env.radiance[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < vis.samples; ++i) {
      double acc = 0.0;
      for (std::size_t d = 0; d < d_count; ++d) acc += g[i * d_count + d] * l[d];
      out[i] = acc;
    }
  }
  return e;
}

std::uint64_t FoldedAmbientTransfer::stored_nnz() const {
  std::uint64_t n = 0;
  for (const auto& k : columns)
    for (const auto& s : k) n += s.nnz();
  return n;
}

void FoldedAmbientTransfer::apply(int k, const SparseSpectrum& environment, std::span<double> out_w1) const {
  const auto& cols = columns.at(static_cast<std::size_t>(k));
  if (environment.size != cols.size()) throw DimensionMismatch("environment spectrum does not match the folded directions");
  if (out_w1.size() != domain_size) throw DimensionMismatch("folded apply output size mismatch");
  for (std::size_t e = 0; e < environment.nnz(); ++e)
    cols[environment.indices[e]].accumulate_into(out_w1, environment.values[e]);
}

FoldedAmbientTransfer fold_visibility(const CompressedTransfer& transfer, const VisibilityMatrix& vis,
                                      const SurfaceSamples& samples, const QuadtreeAtlas& atlas, double eta,
                                      double fraction) {
  if (vis.samples != samples.size() || atlas.sample_count() != samples.size())
    throw DimensionMismatch("visibility, atlas and samples must share one sample set");
  if (transfer.domain_size() != atlas.domain_size()) throw DimensionMismatch("transfer and atlas domains differ");
  const std::size_t d_count = vis.directions.size();
  const std::size_t domain = atlas.domain_size();
  const int face = vis.directions.face_side;
  const std::size_t face_cells = static_cast<std::size_t>(face * face);

  // Rows of G in the w2 (per-face Haar) direction domain.
  auto g = ambient_weights(vis, samples, eta);
  parallel_for(vis.samples, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (int f = 0; f < 6; ++f)
        haar2d_inplace(std::span<double>(g).subspan(i * d_count + static_cast<std::size_t>(f) * face_cells, face_cells), face);
  });

  // W0 applied to every column: w0vw[j * D + d].
  std::vector<double> w0vw(domain * d_count, 0.0);
  parallel_for(d_count, [&](std::size_t begin, std::size_t end) {
    std::vector<double> column(vis.samples);
    for (std::size_t d = begin; d < end; ++d) {
      for (std::size_t i = 0; i < vis.samples; ++i) column[i] = g[i * d_count + d];
      const auto coeffs = project_domain(Wavelet::Haar, atlas, column);
      for (std::size_t j = 0; j < domain; ++j) w0vw[j * d_count + d] = coeffs[j];
    }
  });
  g.clear();
  g.shrink_to_fit();

  FoldedAmbientTransfer folded;
  folded.face_side = face;
  folded.eta = eta;
  folded.fraction = fraction;
  folded.domain_size = static_cast<std::uint32_t>(domain);
  folded.columns.resize(static_cast<std::size_t>(transfer.count()));

  std::vector<double> acc(domain * d_count);
  for (int k = 0; k < transfer.count(); ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const auto& cols = transfer.block(k).columns;
    // acc[a * D + d] = sum_j col_j[a] * w0vw[j, d]; rows a are independent.
    parallel_for(domain, [&](std::size_t begin, std::size_t end) {
      for (const auto& col : cols) {
        const double* src = w0vw.data() + static_cast<std::size_t>(col.source) * d_count;
        const auto& idx = col.spectrum.indices;
        auto lo = std::lower_bound(idx.begin(), idx.end(), static_cast<std::uint32_t>(begin));
        for (auto it = lo; it != idx.end() && *it < end; ++it) {
          const double c = col.spectrum.values[static_cast<std::size_t>(it - idx.begin())];
          double* dst = acc.data() + static_cast<std::size_t>(*it) * d_count;
          for (std::size_t d = 0; d < d_count; ++d) dst[d] += c * src[d];
        }
      }
    });
    auto& out = folded.columns[static_cast<std::size_t>(k)];
    out.resize(d_count);
    parallel_for(d_count, [&](std::size_t begin, std::size_t end) {
      std::vector<double> column(domain);
      for (std::size_t d = begin; d < end; ++d) {
        for (std::size_t a = 0; a < domain; ++a) column[a] = acc[a * d_count + d];
        out[d] = compress_energy(column, fraction);
        quantize(out[d]);
      }
    });
  }
  return folded;
}

std::vector<ChannelVectors> irradiance_ambient(const FoldedAmbientTransfer& folded, const EnvironmentSpectrum& environment) {
  if (environment.face_side != folded.face_side)
    throw DimensionMismatch("environment spectrum resolution differs from the folded operator");
  std::vector<ChannelVectors> out(folded.columns.size());
  parallel_for(folded.columns.size() * kChannels, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t k = t / kChannels;
      const std::size_t c = t % kChannels;
      out[k][c].assign(folded.domain_size, 0.0);
      folded.apply(static_cast<int>(k), environment.channels[c], out[k][c]);
    }
  });
  return out;
}

}  // namespace tprt
