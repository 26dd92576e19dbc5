// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numerics.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

using C = std::complex<double>;

inline long double frac(long double v) { return v - std::floor(v); }

inline long double golden() { return (std::sqrt(5.0L) - 1.0L) / 2.0L; }

/// (1/N) sum_{n=1}^N 1_{[lo,hi)}(x + n alpha), in long double.
inline double rotation_indicator_average(long double alpha, long double x, long double lo, long double hi,
                                         std::uint64_t n) {
  std::uint64_t hits = 0;
  for (std::uint64_t k = 1; k <= n; ++k) {
    const long double y = frac(x + static_cast<long double>(k) * alpha);
    hits += (y >= lo && y < hi) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

/// Lebesgue measure of the union of arcs [lo + j a, hi + j a) mod 1, j = 1..k.
inline long double rotated_union_measure(long double alpha, long double lo, long double hi, std::uint64_t k) {
  std::vector<std::pair<long double, long double>> arcs;
  for (std::uint64_t j = 1; j <= k; ++j) {
    const long double s = frac(lo + static_cast<long double>(j) * alpha);
    const long double len = hi - lo;
    if (s + len <= 1) {
      arcs.emplace_back(s, s + len);
    } else {
      arcs.emplace_back(s, 1);
      arcs.emplace_back(0, s + len - 1);
    }
  }
  std::sort(arcs.begin(), arcs.end());
  long double total = 0, cur_lo = -1, cur_hi = -1;
  for (const auto& [a, b] : arcs) {
    if (a > cur_hi) {
      if (cur_hi > cur_lo) total += cur_hi - cur_lo;
      cur_lo = a;
      cur_hi = b;
    } else {
      cur_hi = std::max(cur_hi, b);
    }
  }
  if (cur_hi > cur_lo) total += cur_hi - cur_lo;
  return total;
}

/// Composite Gauss-Legendre (5 nodes) on [a, b] with `panels` panels.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640, -0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  const double h = (b - a) / panels;
  double sum = 0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < 5; ++i) sum += w[i] * f(mid + 0.5 * h * x[i]);
  }
  return sum * 0.5 * h;
}

/// Naive autocorrelation (1/L) sum_{m=1}^L v[n+m] conj v[m] for n = 0..maxlag;
/// v[t] holds the value at time t (v[0] unused).
inline std::vector<C> autocorrelation(const std::vector<C>& v, std::size_t maxlag, std::size_t length) {
  std::vector<C> out;
  for (std::size_t n = 0; n <= maxlag; ++n) {
    C acc = 0;
    for (std::size_t m = 1; m <= length; ++m) acc += v[n + m] * std::conj(v[m]);
    out.push_back(acc / static_cast<double>(length));
  }
  return out;
}

/// Is `word` a prefix of series[s..] for some start s.
inline bool occurs_at_some_start(const std::vector<std::int32_t>& series, const std::vector<std::uint64_t>& starts,
                                 const std::vector<std::int32_t>& word, std::size_t max_len) {
  if (word.size() > max_len) return false;
  for (auto s : starts) {
    if (s + word.size() > series.size()) continue;
    if (std::equal(word.begin(), word.end(), series.begin() + static_cast<std::ptrdiff_t>(s))) return true;
  }
  return false;
}

}  // namespace oracle
