// Koopman autocorrelations and the two continuity tests: Wiener means of the
// Fourier coefficients, and decay of pair correlations along orbits.

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/fixed.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/system.hpp"

namespace ergolab {

enum class Continuity { continuous, atomic, inconclusive };
std::string_view to_string(Continuity c);

struct WienerVerdict {
  Continuity verdict = Continuity::inconclusive;
  double threshold = 1e-2;
  std::uint64_t last_m = 0;
  double last_value = 0.0;
  /// Least-squares slope of log W_M against log M over the tail points.
  double tail_slope = 0.0;
};

struct SpectralEstimate {
  std::int64_t maxlag = 0;
  /// gamma[n + maxlag] estimates <T^n f, f> for n = -maxlag..maxlag.
  std::vector<Complex> gamma;
  /// Exact phases n * k * alpha when the estimate is the closed form of a
  /// rotation character; indexed like gamma.
  std::optional<std::vector<Fixed>> phases;
  std::vector<std::uint64_t> wiener_grid;
  std::vector<double> wiener_means;
  std::uint64_t length = 0;
  std::size_t samples = 0;
  double sup_bound = 0.0;
  double band = 0.0;  // 5 L^{-1/2} sup^2
  WienerVerdict wiener;

  Complex at(std::int64_t n) const { return gamma.at(static_cast<std::size_t>(n + maxlag)); }
};

/// W_M = (1/(2M+1)) sum_{|n| <= M} |gamma(n)|^2 on M = 1, 2, 4, ..., maxlag.
void compute_wiener_means(SpectralEstimate& est);

/// Builds an estimate from one-sided values gamma(0..maxlag); negative lags
/// are filled by conjugation.
SpectralEstimate spectral_from_gamma(const std::vector<Complex>& one_sided, double sup_bound = 1.0,
                                     std::uint64_t length = 0);

/// gamma(n) = (1/L) sum_{m=1}^L f(T^{n+m} x) conj f(T^m x), averaged over the
/// start points. Rotation characters use the exact eigenfunction relation.
SpectralEstimate autocorrelation(const System& sys, const Observable& f, std::int64_t maxlag, std::uint64_t length,
                                 const std::vector<Point>& xs, double threshold = 1e-2);

WienerVerdict wiener_test(const SpectralEstimate& est, double threshold = 1e-2);

struct PairCorrelationResult {
  std::vector<ConvergenceReport> reports;
  double tolerance = 0.0;
  double max_final = 0.0;
  /// Every pair average ends within tolerance of 0.
  bool orthocomplement_consistent = false;
};

/// Default tolerance is 5 N^{-1/2} sup^2 at the last checkpoint.
PairCorrelationResult pair_correlation_test(const System& sys, const Observable& f,
                                            const std::vector<std::pair<Point, Point>>& pairs,
                                            const Checkpoints& checkpoints,
                                            std::optional<double> tolerance = std::nullopt);

/// Continuous spectrum and orthocomplement consistency must coincide.
inline bool verdicts_agree(const WienerVerdict& w, const PairCorrelationResult& p) {
  return (w.verdict == Continuity::continuous) == p.orthocomplement_consistent;
}

}  // namespace ergolab
