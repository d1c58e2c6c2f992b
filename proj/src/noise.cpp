#include "abk/noise.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "abk/blocked_matrix.hpp"
#include "abk/error.hpp"

namespace abk {

NoiseModel NoiseModel::Zero(std::size_t num_blocks) {
  NoiseModel model;
  model.sigmas_.assign(num_blocks, 0.0);
  return model;
}

NoiseModel NoiseModel::FromSigmas(std::vector<double> sigmas) {
  NoiseModel model;
  double sum2 = 0.0;
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kDomainError, fmt::format("noise sigma must be >= 0, got {}", s));
    }
    sum2 += s * s;
  }
  model.sigmas_ = std::move(sigmas);
  model.total_sigma_ = std::sqrt(sum2);
  model.distribution_ = sum2 > 0.0 ? NoiseDistribution::kGaussian : NoiseDistribution::kZero;
  return model;
}

NoiseModel NoiseModel::UniformSplit(double sigma_total, std::size_t num_blocks) {
  if (num_blocks == 0) throw Error(ErrorCode::kDomainError, "need at least one block");
  if (!(sigma_total >= 0.0)) {
    throw Error(ErrorCode::kDomainError, fmt::format("sigma must be >= 0, got {}", sigma_total));
  }
  const double each = sigma_total / std::sqrt(static_cast<double>(num_blocks));
  return FromSigmas(std::vector<double>(num_blocks, each));
}

Vector NoiseModel::Draw(std::size_t block, std::size_t rows, Rng& rng) const {
  if (block >= sigmas_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("block index {} out of range [0, {})", block, sigmas_.size()));
  }
  Vector eps = Vector::Zero(static_cast<Eigen::Index>(rows));
  if (distribution_ == NoiseDistribution::kZero || sigmas_[block] == 0.0) return eps;
  const double stddev = sigmas_[block] / std::sqrt(static_cast<double>(rows));
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index j = 0; j < eps.size(); ++j) eps[j] = normal(rng);
  return eps;
}

NoisyRhs::NoisyRhs(const BlockedMatrix& matrix, Vector clean, NoiseModel noise)
    : clean_(std::move(clean)), noise_(std::move(noise)), offsets_(matrix.offsets()) {
  if (static_cast<std::size_t>(clean_.size()) != matrix.rows()) {
    throw Error(ErrorCode::kSizeMismatch,
                fmt::format("right-hand side has length {}, matrix has {} rows", clean_.size(),
                            matrix.rows()));
  }
  if (noise_.num_blocks() != matrix.num_blocks()) {
    throw Error(ErrorCode::kSizeMismatch,
                fmt::format("noise model has {} blocks, matrix has {}", noise_.num_blocks(),
                            matrix.num_blocks()));
  }
}

Vector NoisyRhs::DrawNoise(std::size_t i, Rng& rng) const {
  if (i + 1 >= offsets_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("block index {} out of range [0, {})", i, offsets_.size() - 1));
  }
  return noise_.Draw(i, offsets_[i + 1] - offsets_[i], rng);
}

Vector NoisyRhs::QueryBlock(std::size_t i, Rng& rng) const {
  Vector eps = DrawNoise(i, rng);
  return clean_block(i) + eps;
}

}  // namespace abk
