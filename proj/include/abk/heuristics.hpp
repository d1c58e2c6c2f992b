#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "abk/blocked_matrix.hpp"
#include "abk/noise.hpp"
#include "abk/objective.hpp"

namespace abk {

// D_j = D^{x*_j}(x_j, x_N) for j = 0..N-1 from an eta = 1 pilot run of N
// iterations, measured against the pilot's own final iterate x_N.
struct PilotTrace {
  std::vector<double> bregman_to_final;
  Vector x_final;

  std::size_t size() const { return bregman_to_final.size(); }
};

// Runs the pilot twice from the same seed: the first pass finds x_N, the
// second replays the identical trajectory and evaluates every D_j against
// it. Memory stays O(N + n).
PilotTrace CollectPilot(const BlockedMatrix& matrix, const NoisyRhs& rhs,
                        const SparseObjective& objective, std::int64_t iterations,
                        std::uint64_t seed);

struct GammaEstimate {
  double gamma = 0.0;      // clamped value handed to the schedule
  double raw = 0.0;        // before clamping
  bool clamped = false;
  std::size_t valid_ratios = 0;
  std::size_t skipped_ratios = 0;
};

// gamma~ = 2 * (1 - mean_{j=1..N0} D_j / D_{j-1}). Ratios with a zero
// denominator are skipped; fewer than N0/2 valid ratios is kDegenerateTrace.
// The result is clamped to [1e-8, 2 - 1e-8].
GammaEstimate EstimateGamma(const PilotTrace& trace, std::size_t n0);

// beta0~ = [ (gamma~ / N1) * sum_{j=N-N1}^{N-1} D_j / D_0 ]^{-1}.
double EstimateBeta0(const PilotTrace& trace, double gamma_tilde, std::size_t n1);

// CSV with header "j,bregman_to_final".
void WritePilotCsv(std::ostream& out, const PilotTrace& trace);
PilotTrace ReadPilotCsv(std::istream& in);
PilotTrace ReadPilotCsvFile(const std::filesystem::path& path);

}  // namespace abk
