#include "abk/blocked_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "abk/error.hpp"

namespace abk {
namespace {

constexpr double kDegenerateNorm = 1e-14;

}  // namespace

double SpectralNorm(const Eigen::Ref<const Matrix>& a,
                    const PowerIterationOptions& options) {
  if (a.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = a.rows() <= a.cols()
                                   ? Eigen::MatrixXd(a * a.transpose())
                                   : Eigen::MatrixXd(a.transpose() * a);
  const Eigen::Index k = gram.rows();
  if (k == 1) return std::sqrt(std::max(gram(0, 0), 0.0));

  // Fixed-seed start vector keeps construction deterministic while avoiding
  // starts orthogonal to the dominant eigenvector.
  std::mt19937_64 start_rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  Eigen::VectorXd v(k);
  for (Eigen::Index j = 0; j < k; ++j) v(j) = unit(start_rng);
  v.normalize();

  double lambda = v.dot(gram * v);
  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXd w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(gram * v);
    const bool converged = std::abs(next - lambda) <= options.relative_tolerance * next;
    lambda = next;
    if (converged) break;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

BlockedMatrix BlockedMatrix::Partition(Matrix data, std::span<const std::size_t> block_sizes,
                                       const PowerIterationOptions& options) {
  if (block_sizes.empty()) {
    throw Error(ErrorCode::kSizeMismatch, "at least one block is required");
  }
  const std::size_t total = std::accumulate(block_sizes.begin(), block_sizes.end(), std::size_t{0});
  if (total != static_cast<std::size_t>(data.rows())) {
    throw Error(ErrorCode::kSizeMismatch,
                fmt::format("block sizes sum to {} but the matrix has {} rows", total,
                            data.rows()));
  }
  if (std::find(block_sizes.begin(), block_sizes.end(), std::size_t{0}) != block_sizes.end()) {
    throw Error(ErrorCode::kSizeMismatch, "every block needs at least one row");
  }

  BlockedMatrix out;
  out.data_ = std::move(data);
  out.offsets_.reserve(block_sizes.size() + 1);
  out.offsets_.push_back(0);
  for (std::size_t size : block_sizes) out.offsets_.push_back(out.offsets_.back() + size);

  const std::size_t num_blocks = block_sizes.size();
  out.block_norms_.resize(num_blocks);
  for (std::size_t i = 0; i < num_blocks; ++i) {
    const double norm = SpectralNorm(out.block(i), options);
    if (!(norm >= kDegenerateNorm)) {
      throw Error(ErrorCode::kDegenerateBlock,
                  fmt::format("block {} (rows {}..{}) has spectral norm {:.3g}", i,
                              out.offsets_[i], out.offsets_[i + 1], norm));
    }
    out.block_norms_[i] = norm;
  }

  out.square_norm2_ = 0.0;
  for (double norm : out.block_norms_) out.square_norm2_ += norm * norm;
  out.square_norm_ = std::sqrt(out.square_norm2_);

  out.probabilities_.resize(num_blocks);
  out.cumulative_.resize(num_blocks);
  double running = 0.0;
  for (std::size_t i = 0; i < num_blocks; ++i) {
    out.probabilities_[i] = out.block_norms_[i] * out.block_norms_[i] / out.square_norm2_;
    running += out.probabilities_[i];
    out.cumulative_[i] = running;
  }
  return out;
}

BlockedMatrix BlockedMatrix::PartitionEqual(Matrix data, std::size_t num_blocks,
                                            const PowerIterationOptions& options) {
  const auto rows = static_cast<std::size_t>(data.rows());
  if (num_blocks == 0 || rows % num_blocks != 0) {
    throw Error(ErrorCode::kSizeMismatch,
                fmt::format("{} rows cannot be split into {} equal blocks", rows, num_blocks));
  }
  std::vector<std::size_t> sizes(num_blocks, rows / num_blocks);
  return Partition(std::move(data), sizes, options);
}

std::size_t BlockedMatrix::block_rows(std::size_t i) const {
  CheckIndex(i);
  return offsets_[i + 1] - offsets_[i];
}

std::vector<std::size_t> BlockedMatrix::block_sizes() const {
  std::vector<std::size_t> sizes(num_blocks());
  for (std::size_t i = 0; i < sizes.size(); ++i) sizes[i] = offsets_[i + 1] - offsets_[i];
  return sizes;
}

std::size_t BlockedMatrix::SampleBlock(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Scale by the last prefix sum so rounding in the sum cannot leave a gap.
  const double u = unit(rng) * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto index = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(index, num_blocks() - 1);
}

Vector BlockedMatrix::BlockApply(std::size_t i, const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != cols()) {
    throw Error(ErrorCode::kSizeMismatch,
                fmt::format("vector has length {}, expected {}", x.size(), cols()));
  }
  return block(i) * x;
}

Vector BlockedMatrix::BlockApplyTranspose(std::size_t i, const Vector& r) const {
  if (static_cast<std::size_t>(r.size()) != block_rows(i)) {
    throw Error(ErrorCode::kSizeMismatch,
                fmt::format("vector has length {}, block {} has {} rows", r.size(), i,
                            block_rows(i)));
  }
  return block(i).transpose() * r;
}

void BlockedMatrix::CheckIndex(std::size_t i) const {
  if (i >= block_norms_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                fmt::format("block index {} out of range [0, {})", i, block_norms_.size()));
  }
}

}  // namespace abk
