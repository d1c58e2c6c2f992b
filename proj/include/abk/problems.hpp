#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "abk/blocked_matrix.hpp"
#include "abk/noise.hpp"
#include "abk/types.hpp"

namespace abk {

// A consistent system A xhat = b with a known ground truth and noise model.
struct SyntheticProblem {
  BlockedMatrix matrix;
  Vector xhat;
  Vector b_clean;
  NoiseModel noise;

  NoisyRhs Oracle() const { return NoisyRhs(matrix, b_clean, noise); }
};

// Noise level either absolute or relative to |b|.
struct NoiseLevel {
  double value = 0.0;
  bool relative = false;

  static NoiseLevel Absolute(double sigma) { return {sigma, false}; }
  static NoiseLevel Relative(double fraction) { return {fraction, true}; }
  double Resolve(double rhs_norm) const { return relative ? value * rhs_norm : value; }
};

struct GaussianSpec {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t sparsity = 0;
  std::size_t num_blocks = 1;
  NoiseLevel noise;
};

// A with i.i.d. N(0,1) entries, xhat with `sparsity` N(0,1) values on a
// uniformly drawn support, b = A xhat, equal blocks, sigma_i = sigma/sqrt(M).
SyntheticProblem GaussianProblem(const GaussianSpec& spec, std::uint64_t seed);

// Parallel-beam geometry on an N x N grid of unit pixels centered at the
// origin. Pixel (r, c) has center (c - N/2 + 1/2, N/2 - 1/2 - r) and flattened
// index r * N + c. Angle a is a * pi / n_angles; detector bin d sits at
// offset t = d - N/2 + 1/2 along (cos, sin) and its ray runs along (-sin, cos).
Matrix ParallelBeamMatrix(std::size_t n_pix, std::size_t n_angles);

// Built-in phantom: a few disks of different intensity on a zero background,
// rasterized with 4 x 4 supersampling per pixel.
Vector DisksPhantom(std::size_t n_pix);
// One disk of the given intensity; used for chord-length checks.
Vector DiskPhantom(std::size_t n_pix, double cx, double cy, double radius, double value);

struct TomographySpec {
  std::size_t n_pix = 50;
  std::size_t n_angles = 60;
  double sigma_rel = 0.1;
  // Defaults to DisksPhantom.
  std::optional<Vector> phantom;
};

// One block per angle (M = n_angles, m_i = n_pix), sigma = sigma_rel * |b|,
// sigma_i = sigma / sqrt(M). The seed is accepted for interface symmetry;
// the geometry and the built-in phantom are deterministic.
SyntheticProblem TomographyProblem(const TomographySpec& spec, std::uint64_t seed);

// Binary P5 graymap, 8 or 16 bit. Values are scaled to [0, 1] and returned
// row by row.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  Vector pixels;
};
GrayImage ReadPgm(const std::filesystem::path& path);
// Writes values clamped to [0, max] scaled to 8 bit; max defaults to the
// largest pixel.
void WritePgm(const std::filesystem::path& path, const Vector& pixels, std::size_t width,
              std::size_t height, std::optional<double> max_value = std::nullopt);

}  // namespace abk
