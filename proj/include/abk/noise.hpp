#pragma once

#include <cstddef>
#include <vector>

#include "abk/types.hpp"

namespace abk {

class BlockedMatrix;

enum class NoiseDistribution { kZero, kGaussian };

// Per-block noise levels: each query of block i adds a fresh vector eps with
// E[eps] = 0 and E|eps|^2 = sigma_i^2.
class NoiseModel {
 public:
  // All-zero model for M blocks.
  static NoiseModel Zero(std::size_t num_blocks);
  // Gaussian model with the given per-block sigmas; all-zero input yields
  // the Zero model.
  static NoiseModel FromSigmas(std::vector<double> sigmas);
  // sigma_i = sigma_total / sqrt(M) for every block.
  static NoiseModel UniformSplit(double sigma_total, std::size_t num_blocks);

  NoiseDistribution distribution() const { return distribution_; }
  const std::vector<double>& sigmas() const { return sigmas_; }
  double total_sigma() const { return total_sigma_; }
  std::size_t num_blocks() const { return sigmas_.size(); }

  // Components are i.i.d. N(0, sigma_i^2 / rows) so that E|eps|^2 = sigma_i^2.
  // Draws come from a fresh std::normal_distribution, one value per row.
  Vector Draw(std::size_t block, std::size_t rows, Rng& rng) const;

 private:
  NoiseModel() = default;

  std::vector<double> sigmas_;
  double total_sigma_ = 0.0;
  NoiseDistribution distribution_ = NoiseDistribution::kZero;
};

// The measurement oracle: clean data b plus independent noise on every query.
class NoisyRhs {
 public:
  NoisyRhs(const BlockedMatrix& matrix, Vector clean, NoiseModel noise);

  const Vector& clean() const { return clean_; }
  const NoiseModel& noise() const { return noise_; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  auto clean_block(std::size_t i) const {
    return clean_.segment(static_cast<Eigen::Index>(offsets_.at(i)),
                          static_cast<Eigen::Index>(offsets_.at(i + 1) - offsets_[i]));
  }

  // The realized noise of one query; the caller adds it to clean_block(i).
  Vector DrawNoise(std::size_t i, Rng& rng) const;

  // b_i + eps with a fresh eps.
  Vector QueryBlock(std::size_t i, Rng& rng) const;

 private:
  Vector clean_;
  NoiseModel noise_;
  std::vector<std::size_t> offsets_;
};

}  // namespace abk
