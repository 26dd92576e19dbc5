#include "ergolab/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"

namespace ergolab {

std::string_view to_string(Continuity c) {
  switch (c) {
    case Continuity::continuous: return "continuous";
    case Continuity::atomic: return "atomic";
    case Continuity::inconclusive: return "inconclusive";
  }
  return "unknown";
}

void compute_wiener_means(SpectralEstimate& est) {
  est.wiener_grid.clear();
  est.wiener_means.clear();
  const auto n = static_cast<std::uint64_t>(est.maxlag);
  for (std::uint64_t m = 1; m <= n; m *= 2) {
    est.wiener_grid.push_back(m);
    if (m > n / 2) break;
  }
  if (n > 0 && est.wiener_grid.back() != n) est.wiener_grid.push_back(n);
  for (std::uint64_t m : est.wiener_grid) {
    double s = std::norm(est.at(0));
    for (std::uint64_t j = 1; j <= m; ++j) {
      s += std::norm(est.at(static_cast<std::int64_t>(j)));
      s += std::norm(est.at(-static_cast<std::int64_t>(j)));
    }
    est.wiener_means.push_back(s / static_cast<double>(2 * m + 1));
  }
}

SpectralEstimate spectral_from_gamma(const std::vector<Complex>& one_sided, double sup_bound, std::uint64_t length) {
  if (one_sided.empty()) throw Error(ErrorCode::invalid_argument, "spectral: need gamma(0)");
  SpectralEstimate est;
  est.maxlag = static_cast<std::int64_t>(one_sided.size()) - 1;
  est.gamma.assign(2 * one_sided.size() - 1, Complex{});
  for (std::int64_t n = 0; n <= est.maxlag; ++n) {
    est.gamma[static_cast<std::size_t>(est.maxlag + n)] = one_sided[static_cast<std::size_t>(n)];
    est.gamma[static_cast<std::size_t>(est.maxlag - n)] = std::conj(one_sided[static_cast<std::size_t>(n)]);
  }
  // gamma(0) is real for a genuine autocorrelation.
  est.gamma[static_cast<std::size_t>(est.maxlag)] = {one_sided[0].real(), 0.0};
  est.sup_bound = sup_bound;
  est.length = length;
  est.band = length > 0 ? 5.0 * sup_bound * sup_bound / std::sqrt(static_cast<double>(length)) : 0.0;
  compute_wiener_means(est);
  return est;
}

WienerVerdict wiener_test(const SpectralEstimate& est, double threshold) {
  WienerVerdict v;
  v.threshold = threshold;
  const std::size_t g = est.wiener_means.size();
  if (g == 0) return v;
  v.last_m = est.wiener_grid.back();
  v.last_value = est.wiener_means.back();
  if (g < 3) return v;

  const std::size_t tail = 3;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  bool positive = true;
  for (std::size_t i = g - tail; i < g; ++i) {
    if (!(est.wiener_means[i] > 0)) {
      positive = false;
      break;
    }
    const double x = std::log(static_cast<double>(est.wiener_grid[i]));
    const double y = std::log(est.wiener_means[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (positive) {
    const double n = static_cast<double>(tail);
    const double den = n * sxx - sx * sx;
    v.tail_slope = den != 0 ? (n * sxy - sx * sy) / den : 0.0;
  }

  bool decreasing = true;
  double lo = est.wiener_means[g - tail], hi = lo;
  for (std::size_t i = g - tail + 1; i < g; ++i) {
    if (!(est.wiener_means[i] < est.wiener_means[i - 1])) decreasing = false;
    lo = std::min(lo, est.wiener_means[i]);
    hi = std::max(hi, est.wiener_means[i]);
  }
  if (v.last_value < threshold && decreasing) {
    v.verdict = Continuity::continuous;
  } else if (lo >= threshold && hi <= 1.5 * lo) {
    v.verdict = Continuity::atomic;
  }
  return v;
}

namespace {

bool rotation_character(const System& sys, const Observable& f) {
  return sys.kind() == SystemKind::rotation && f.kind() == ObservableKind::character;
}

}  // namespace

SpectralEstimate autocorrelation(const System& sys, const Observable& f, std::int64_t maxlag, std::uint64_t length,
                                 const std::vector<Point>& xs, double threshold) {
  if (maxlag < 0) throw Error(ErrorCode::invalid_argument, "autocorrelation: maxlag must be nonnegative");
  if (length < 10 * static_cast<std::uint64_t>(std::max<std::int64_t>(maxlag, 1))) {
    throw Error(ErrorCode::invalid_argument, "autocorrelation: orbit length must be at least 10 maxlag");
  }
  if (length + static_cast<std::uint64_t>(maxlag) > kCheckpointBudget) {
    throw Error(ErrorCode::resource, "autocorrelation: orbit beyond the step budget");
  }
  if (!sys.ergodic()) throw Error(ErrorCode::precondition_violation, "autocorrelation: system must be ergodic");
  if (!f.bounded()) throw Error(ErrorCode::invalid_argument, "autocorrelation: observable must be bounded");
  if (xs.empty()) throw Error(ErrorCode::invalid_argument, "autocorrelation: need at least one start point");
  for (const auto& x : xs) check_compatible(sys, x, f);

  const auto lags = static_cast<std::size_t>(maxlag) + 1;
  std::vector<Complex> one(lags);

  if (rotation_character(sys, f)) {
    // T f = e^{2 pi i k alpha} f, so <T^n f, f> = e^{2 pi i n k alpha}.
    const Fixed step = sys.angle().value.times(f.node().k);
    std::vector<Fixed> ph(2 * lags - 1);
    Fixed t;
    for (std::size_t n = 0; n < lags; ++n) {
      one[n] = unit_phase(t);
      ph[static_cast<std::size_t>(maxlag) + n] = t;
      ph[static_cast<std::size_t>(maxlag) - n] = Fixed() - t;
      t += step;
    }
    auto est = spectral_from_gamma(one, f.sup_norm(), length);
    est.phases = std::move(ph);
    est.samples = xs.size();
    est.wiener = wiener_test(est, threshold);
    return est;
  }

  std::vector<std::vector<Complex>> per_sample(xs.size(), std::vector<Complex>(lags));
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const auto values = orbit(sys, xs[s], f, length + static_cast<std::uint64_t>(maxlag));
    parallel_for(lags, [&](std::size_t n) {
      CompensatedSum acc;
      for (std::uint64_t m = 0; m < length; ++m) acc.add(values[m + n] * std::conj(values[m]));
      per_sample[s][n] = acc.value() / static_cast<double>(length);
    });
  }
  for (std::size_t n = 0; n < lags; ++n) {
    CompensatedSum acc;
    for (const auto& ps : per_sample) acc.add(ps[n]);
    one[n] = acc.value() / static_cast<double>(xs.size());
  }
  auto est = spectral_from_gamma(one, f.sup_norm(), length);
  est.samples = xs.size();
  est.wiener = wiener_test(est, threshold);
  return est;
}

PairCorrelationResult pair_correlation_test(const System& sys, const Observable& f,
                                            const std::vector<std::pair<Point, Point>>& pairs,
                                            const Checkpoints& checkpoints, std::optional<double> tolerance) {
  if (checkpoints.empty()) throw Error(ErrorCode::invalid_argument, "pair_correlation_test: empty grid");
  PairCorrelationResult r;
  const double sup2 = f.sup_norm() * f.sup_norm();
  r.tolerance = tolerance.value_or(5.0 * sup2 / std::sqrt(static_cast<double>(checkpoints.back())));
  r.reports.resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    auto avgs = pair_correlation_averages(sys, f, pairs[i].first, pairs[i].second, checkpoints);
    std::vector<Complex> sums;
    for (std::size_t j = 0; j < avgs.size(); ++j) sums.push_back(avgs[j] * static_cast<double>(checkpoints[j]));
    ReportOptions opts;
    opts.reference = Complex{};
    opts.tolerance = r.tolerance;
    r.reports[i] = report_from_sums(checkpoints, std::move(sums), sup2, opts);
  });
  r.orthocomplement_consistent = !pairs.empty();
  for (const auto& rep : r.reports) {
    const double last = std::abs(rep.averages.back());
    r.max_final = std::max(r.max_final, last);
    if (!(last <= r.tolerance)) r.orthocomplement_consistent = false;
  }
  return r;
}

}  // namespace ergolab
