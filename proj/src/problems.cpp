#include "abk/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk {

SyntheticProblem GaussianProblem(const GaussianSpec& spec, std::uint64_t seed) {
  if (spec.m == 0 || spec.n == 0) throw Error(ErrorCode::kInvalidConfig, "m and n must be positive");
  if (spec.sparsity == 0 || spec.sparsity > spec.n) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("sparsity {} must be in [1, n = {}]", spec.sparsity, spec.n));
  }
  if (spec.num_blocks == 0 || spec.m % spec.num_blocks != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("{} blocks do not divide m = {}", spec.num_blocks, spec.m));
  }
  if (!(spec.noise.value >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "noise level must be >= 0");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(spec.m);
  const auto n = static_cast<Eigen::Index>(spec.n);

  Matrix a(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = normal(rng);
  }

  std::vector<Eigen::Index> support(spec.n);
  std::iota(support.begin(), support.end(), Eigen::Index{0});
  std::shuffle(support.begin(), support.end(), rng);
  Vector xhat = Vector::Zero(n);
  for (std::size_t j = 0; j < spec.sparsity; ++j) {
    double v = 0.0;
    while (v == 0.0) v = normal(rng);
    xhat[support[j]] = v;
  }

  Vector b = a * xhat;
  const double sigma = spec.noise.Resolve(b.norm());
  auto matrix = BlockedMatrix::PartitionEqual(std::move(a), spec.num_blocks);
  return SyntheticProblem{std::move(matrix), std::move(xhat), std::move(b),
                          NoiseModel::UniformSplit(sigma, spec.num_blocks)};
}

Matrix ParallelBeamMatrix(std::size_t n_pix, std::size_t n_angles) {
  if (n_pix < 1 || n_angles < 1) throw Error(ErrorCode::kInvalidConfig, "empty tomography geometry");
  const auto n = static_cast<Eigen::Index>(n_pix);
  const double half = 0.5 * static_cast<double>(n_pix);
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n_angles) * n, n * n);

  std::vector<double> crossings;
  crossings.reserve(2 * n_pix + 4);
  for (std::size_t angle = 0; angle < n_angles; ++angle) {
    const double theta = std::numbers::pi * static_cast<double>(angle) / static_cast<double>(n_angles);
    const double nx = std::cos(theta), ny = std::sin(theta);
    const double dx = -ny, dy = nx;
    for (Eigen::Index det = 0; det < n; ++det) {
      const Eigen::Index row = static_cast<Eigen::Index>(angle) * n + det;
      const double t = static_cast<double>(det) - half + 0.5;
      const double px = t * nx, py = t * ny;

      // Parameter interval in which the ray is inside the image square.
      double s_lo = -std::numeric_limits<double>::infinity();
      double s_hi = std::numeric_limits<double>::infinity();
      auto clip = [&](double p, double d) {
        if (std::abs(d) < 1e-15) return std::abs(p) < half;
        double s0 = (-half - p) / d, s1 = (half - p) / d;
        if (s0 > s1) std::swap(s0, s1);
        s_lo = std::max(s_lo, s0);
        s_hi = std::min(s_hi, s1);
        return true;
      };
      if (!clip(px, dx) || !clip(py, dy) || s_hi - s_lo <= 1e-12) continue;

      crossings.clear();
      crossings.push_back(s_lo);
      crossings.push_back(s_hi);
      for (Eigen::Index g = 0; g <= n; ++g) {
        const double line = -half + static_cast<double>(g);
        if (std::abs(dx) >= 1e-15) {
          const double s = (line - px) / dx;
          if (s > s_lo && s < s_hi) crossings.push_back(s);
        }
        if (std::abs(dy) >= 1e-15) {
          const double s = (line - py) / dy;
          if (s > s_lo && s < s_hi) crossings.push_back(s);
        }
      }
      std::sort(crossings.begin(), crossings.end());

      for (std::size_t q = 1; q < crossings.size(); ++q) {
        const double length = crossings[q] - crossings[q - 1];
        if (length <= 1e-12) continue;
        const double mid = 0.5 * (crossings[q] + crossings[q - 1]);
        const double x = px + mid * dx, y = py + mid * dy;
        const auto c = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x + half)), 0, n - 1);
        const auto r = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(half - y)), 0, n - 1);
        a(row, r * n + c) += length;
      }
    }
  }
  return a;
}

namespace {

struct Disk {
  double cx, cy, radius, value;  // in units of the half width
};

Vector Rasterize(std::size_t n_pix, std::span<const Disk> disks) {
  constexpr int kSub = 4;
  const auto n = static_cast<Eigen::Index>(n_pix);
  const double half = 0.5 * static_cast<double>(n_pix);
  Vector img = Vector::Zero(n * n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int sr = 0; sr < kSub; ++sr) {
        for (int sc = 0; sc < kSub; ++sc) {
          const double x = static_cast<double>(c) - half + (sc + 0.5) / kSub;
          const double y = half - static_cast<double>(r) - (sr + 0.5) / kSub;
          for (const Disk& d : disks) {
            const double ex = x - d.cx, ey = y - d.cy;
            if (ex * ex + ey * ey <= d.radius * d.radius) acc += d.value;
          }
        }
      }
      img[r * n + c] = acc / (kSub * kSub);
    }
  }
  return img;
}

}  // namespace

Vector DisksPhantom(std::size_t n_pix) {
  const double h = 0.5 * static_cast<double>(n_pix);
  const std::array<Disk, 4> disks{{
      {-0.35 * h, 0.30 * h, 0.25 * h, 1.0},
      {0.38 * h, 0.38 * h, 0.18 * h, 0.7},
      {0.00 * h, -0.42 * h, 0.28 * h, 0.5},
      {0.45 * h, -0.15 * h, 0.10 * h, 1.0},
  }};
  return Rasterize(n_pix, disks);
}

Vector DiskPhantom(std::size_t n_pix, double cx, double cy, double radius, double value) {
  const std::array<Disk, 1> disk{{{cx, cy, radius, value}}};
  return Rasterize(n_pix, disk);
}

SyntheticProblem TomographyProblem(const TomographySpec& spec, std::uint64_t /*seed*/) {
  if (spec.n_pix < 8 || spec.n_angles < 2) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("tomography needs n_pix >= 8 and n_angles >= 2 (got {}, {})",
                            spec.n_pix, spec.n_angles));
  }
  if (!(spec.sigma_rel >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "sigma_rel must be >= 0");
  Vector xhat = spec.phantom ? *spec.phantom : DisksPhantom(spec.n_pix);
  const auto n2 = static_cast<Eigen::Index>(spec.n_pix * spec.n_pix);
  if (xhat.size() != n2) {
    throw Error(ErrorCode::kInvalidConfig,
                fmt::format("phantom has {} pixels, expected {}", xhat.size(), n2));
  }
  Matrix a = ParallelBeamMatrix(spec.n_pix, spec.n_angles);
  Vector b = a * xhat;
  const double sigma = spec.sigma_rel * b.norm();
  auto matrix = BlockedMatrix::PartitionEqual(std::move(a), spec.n_angles);
  return SyntheticProblem{std::move(matrix), std::move(xhat), std::move(b),
                          NoiseModel::UniformSplit(sigma, spec.n_angles)};
}

GrayImage ReadPgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path.string()));

  auto next_token = [&]() {
    std::string token;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!token.empty()) break;
      } else {
        token.push_back(ch);
      }
    }
    return token;
  };

  if (next_token() != "P5") throw Error(ErrorCode::kIoError, "only binary P5 graymaps are supported");
  GrayImage img;
  unsigned long max_value = 0;
  try {
    img.width = std::stoul(next_token());
    img.height = std::stoul(next_token());
    max_value = std::stoul(next_token());
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kIoError, "malformed PGM header");
  }
  if (max_value == 0 || max_value > 65535) throw Error(ErrorCode::kIoError, "PGM maxval out of range");

  const std::size_t count = img.width * img.height;
  const std::size_t bytes_per = max_value < 256 ? 1 : 2;
  std::vector<unsigned char> raw(count * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorCode::kIoError, "PGM pixel data truncated");
  }
  img.pixels.resize(static_cast<Eigen::Index>(count));
  for (std::size_t p = 0; p < count; ++p) {
    const unsigned value = bytes_per == 1 ? raw[p] : (unsigned(raw[2 * p]) << 8) | raw[2 * p + 1];
    img.pixels[static_cast<Eigen::Index>(p)] = static_cast<double>(value) / static_cast<double>(max_value);
  }
  return img;
}

void WritePgm(const std::filesystem::path& path, const Vector& pixels, std::size_t width,
              std::size_t height, std::optional<double> max_value) {
  if (static_cast<std::size_t>(pixels.size()) != width * height) {
    throw Error(ErrorCode::kSizeMismatch, "pixel count does not match image size");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", path.string()));
  const double top = max_value.value_or(pixels.size() > 0 ? pixels.maxCoeff() : 1.0);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (Eigen::Index p = 0; p < pixels.size(); ++p) {
    const double scaled = top > 0.0 ? std::clamp(pixels[p] / top, 0.0, 1.0) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled * 255.0))));
  }
}

}  // namespace abk
