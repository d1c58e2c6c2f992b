#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abk/types.hpp"

namespace abk {

struct PowerIterationOptions {
  int max_iterations = 1000;
  double relative_tolerance = 1e-10;
};

// Spectral norm of a dense matrix via power iteration on the smaller of the
// two Gram matrices.
double SpectralNorm(const Eigen::Ref<const Matrix>& a,
                    const PowerIterationOptions& options = {});

// A dense matrix split into M contiguous row blocks. Immutable once built.
//
// Block i spans rows [offsets()[i], offsets()[i + 1]). The block spectral
// norms, the block square norm (sum of squared block norms, square-rooted)
// and the sampling probabilities p_i = |A_i|^2 / |A|_sq^2 are computed once.
class BlockedMatrix {
 public:
  // Throws kSizeMismatch when the sizes do not add up to the row count and
  // kDegenerateBlock when a block has (numerically) zero spectral norm.
  static BlockedMatrix Partition(Matrix data, std::span<const std::size_t> block_sizes,
                                 const PowerIterationOptions& options = {});
  static BlockedMatrix PartitionEqual(Matrix data, std::size_t num_blocks,
                                      const PowerIterationOptions& options = {});

  std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }
  std::size_t num_blocks() const { return block_norms_.size(); }

  const Matrix& data() const { return data_; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  std::size_t block_rows(std::size_t i) const;
  std::vector<std::size_t> block_sizes() const;

  const std::vector<double>& block_spec_norms() const { return block_norms_; }
  double square_norm() const { return square_norm_; }
  double square_norm2() const { return square_norm2_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  auto block(std::size_t i) const {
    CheckIndex(i);
    return data_.middleRows(static_cast<Eigen::Index>(offsets_[i]),
                            static_cast<Eigen::Index>(block_rows(i)));
  }

  // Draws i with probability p_i by inverting the cumulative distribution.
  std::size_t SampleBlock(Rng& rng) const;

  Vector BlockApply(std::size_t i, const Vector& x) const;
  Vector BlockApplyTranspose(std::size_t i, const Vector& r) const;

 private:
  BlockedMatrix() = default;
  void CheckIndex(std::size_t i) const;

  Matrix data_;
  std::vector<std::size_t> offsets_;
  std::vector<double> block_norms_;
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  double square_norm_ = 0.0;
  double square_norm2_ = 0.0;
};

}  // namespace abk
