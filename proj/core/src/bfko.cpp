#include "ergolab/bfko.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/random.hpp"

namespace ergolab {

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::re: return "re";
    case Branch::im: return "im";
    case Branch::neg_re: return "-re";
    case Branch::neg_im: return "-im";
  }
  return "re";
}

Branch branch_from_string(std::string_view s) {
  if (s == "re") return Branch::re;
  if (s == "im") return Branch::im;
  if (s == "-re") return Branch::neg_re;
  if (s == "-im") return Branch::neg_im;
  throw Error(ErrorCode::schema, "unknown branch '" + std::string(s) + "'");
}

double apply_branch(Branch b, Complex z) {
  switch (b) {
    case Branch::re: return z.real();
    case Branch::im: return z.imag();
    case Branch::neg_re: return -z.real();
    case Branch::neg_im: return -z.imag();
  }
  return z.real();
}

// ---------------------------------------------------------------------------
// certificate

namespace {

constexpr Branch kBranches[] = {Branch::re, Branch::im, Branch::neg_re, Branch::neg_im};

// min over the trailing dyadic windows [2^i, 2^{i+1}) of the window maximum.
double limsup_proxy(const std::vector<Complex>& f, Branch b, std::size_t tail) {
  std::vector<double> window_max;
  const std::uint64_t n_max = f.size();
  for (std::uint64_t lo = 1; lo <= n_max; lo *= 2) {
    const std::uint64_t hi = std::min<std::uint64_t>(2 * lo - 1, n_max);
    double m = -std::numeric_limits<double>::infinity();
    for (std::uint64_t n = lo; n <= hi; ++n) m = std::max(m, apply_branch(b, f[n - 1]));
    window_max.push_back(m);
  }
  const std::size_t start = window_max.size() > tail ? window_max.size() - tail : 0;
  return *std::min_element(window_max.begin() + static_cast<std::ptrdiff_t>(start), window_max.end());
}

}  // namespace

BadIntervalCertificate find_bad_intervals(const std::vector<std::vector<Complex>>& f_series, std::size_t j_count,
                                          const std::vector<std::uint64_t>& thresholds, const CertifyOptions& options) {
  if (j_count == 0) throw Error(ErrorCode::invalid_argument, "find_bad_intervals: J must be positive");
  if (thresholds.size() != j_count) throw Error(ErrorCode::invalid_argument, "find_bad_intervals: need J thresholds");
  for (std::size_t j = 1; j < thresholds.size(); ++j)
    if (thresholds[j] < thresholds[j - 1])
      throw Error(ErrorCode::invalid_argument, "find_bad_intervals: thresholds must be nondecreasing");
  if (f_series.empty()) throw Error(ErrorCode::invalid_argument, "find_bad_intervals: no samples");
  const std::uint64_t n_max = f_series.front().size();
  for (const auto& s : f_series)
    if (s.size() != n_max || n_max == 0)
      throw Error(ErrorCode::invalid_argument, "find_bad_intervals: series lengths differ");
  if (!(options.target > 0 && options.target <= 1))
    throw Error(ErrorCode::invalid_argument, "find_bad_intervals: target must lie in (0,1]");

  const std::size_t ns = f_series.size();
  std::vector<std::array<double, 4>> proxy(ns);
  parallel_for(ns, [&](std::size_t y) {
    for (int b = 0; b < 4; ++b) proxy[y][static_cast<std::size_t>(b)] = limsup_proxy(f_series[y], kBranches[b], options.tail_windows);
  });

  int best = -1;
  std::size_t best_count = 0;
  for (int b = 0; b < 4; ++b) {
    std::size_t cnt = 0;
    for (std::size_t y = 0; y < ns; ++y)
      if (proxy[y][static_cast<std::size_t>(b)] > options.limsup_threshold) ++cnt;
    if (cnt > best_count) {
      best_count = cnt;
      best = b;
    }
  }
  if (best < 0) {
    throw Error(ErrorCode::no_divergence, "find_bad_intervals: no sample stays above the limsup threshold " +
                                              std::to_string(options.limsup_threshold));
  }

  BadIntervalCertificate cert;
  cert.branch = kBranches[best];
  cert.samples = ns;
  cert.thresholds = thresholds;
  cert.limsup_threshold = options.limsup_threshold;
  const auto bi = static_cast<std::size_t>(best);

  std::vector<double> levels;
  for (std::size_t y = 0; y < ns; ++y)
    if (proxy[y][bi] > options.limsup_threshold) levels.push_back(proxy[y][bi]);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  auto idx = static_cast<std::size_t>(std::ceil(options.target * static_cast<double>(levels.size())));
  idx = std::clamp<std::size_t>(idx, 1, levels.size()) - 1;
  const double q = levels[idx];
  cert.a = std::nextafter(q, 0.0);
  for (std::size_t y = 0; y < ns; ++y)
    if (proxy[y][bi] > options.limsup_threshold && proxy[y][bi] >= q) cert.divergent.push_back(y);
  const std::size_t d = cert.divergent.size();
  cert.c = static_cast<double>(d) / (2.0 * static_cast<double>(ns));

  std::vector<std::size_t> current = cert.divergent;
  std::vector<std::vector<std::uint64_t>> wit(current.size());
  std::uint64_t prev_m = 0;
  const auto jj = static_cast<std::uint64_t>(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    const std::uint64_t l = std::max(thresholds[j], prev_m) + 1;
    std::vector<std::uint64_t> first(current.size(), 0);
    parallel_for(current.size(), [&](std::size_t i) {
      const auto& s = f_series[current[i]];
      for (std::uint64_t n = l + 1; n <= n_max; ++n) {
        if (apply_branch(cert.branch, s[n - 1]) > cert.a) {
          first[i] = n;
          return;
        }
      }
    });
    // smallest count with 2J count > 2J |current| - |B'|
    const std::uint64_t lhs = 2 * jj * current.size();
    const std::uint64_t need = lhs >= d ? (lhs - d) / (2 * jj) + 1 : 1;
    std::vector<std::uint64_t> sorted;
    for (auto w : first)
      if (w > 0) sorted.push_back(w);
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() < need) {
      throw Error(ErrorCode::construction_failure,
                  "find_bad_intervals: horizon too short for interval " + std::to_string(j + 1));
    }
    const std::uint64_t m = sorted[need - 1] + 1;
    std::vector<std::size_t> next;
    std::vector<std::vector<std::uint64_t>> next_wit;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (first[i] > 0 && first[i] < m) {
        next.push_back(current[i]);
        auto w = wit[i];
        w.push_back(first[i]);
        next_wit.push_back(std::move(w));
      }
    }
    current = std::move(next);
    wit = std::move(next_wit);
    cert.intervals.emplace_back(l, m);
    cert.retained_counts.push_back(current.size());
    prev_m = m;
  }
  cert.retained = std::move(current);
  cert.witnesses = std::move(wit);
  return cert;
}

std::vector<std::vector<Complex>> oscillating_series(std::size_t samples, std::uint64_t horizon, double amplitude,
                                                     double dip, std::uint64_t seed) {
  if (!(dip >= 0 && dip < 1)) throw Error(ErrorCode::invalid_argument, "oscillating_series: dip outside [0, 1)");
  std::vector<std::vector<Complex>> out(samples, std::vector<Complex>(horizon));
  for (std::size_t y = 0; y < samples; ++y) {
    const double phi = uniform01(seed, static_cast<std::int64_t>(y));
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      double t = std::log2(static_cast<double>(n)) + phi;
      t -= std::floor(t);
      out[y][n - 1] = t < dip ? -amplitude : amplitude;
    }
  }
  return out;
}

std::vector<std::string> verify_certificate(const BadIntervalCertificate& cert,
                                            const std::vector<std::vector<Complex>>& f_series) {
  std::vector<std::string> bad;
  for (std::size_t j = 0; j < cert.intervals.size(); ++j) {
    const auto [l, m] = cert.intervals[j];
    if (!(l < m)) bad.push_back("interval " + std::to_string(j + 1) + " is empty");
    if (j > 0 && !(cert.intervals[j - 1].second < l)) bad.push_back("interval " + std::to_string(j + 1) + " overlaps");
  }
  for (std::size_t r = 0; r < cert.retained.size(); ++r) {
    const std::size_t y = cert.retained[r];
    if (y >= f_series.size()) {
      bad.push_back("sample " + std::to_string(y) + " missing");
      continue;
    }
    for (std::size_t j = 0; j < cert.intervals.size(); ++j) {
      const std::uint64_t n = cert.witnesses[r][j];
      const auto [l, m] = cert.intervals[j];
      const bool inside = l < n && n < m && n <= f_series[y].size();
      if (!inside || !(apply_branch(cert.branch, f_series[y][n - 1]) > cert.a)) {
        bad.push_back("sample " + std::to_string(y) + " witness " + std::to_string(j + 1) + " at n=" +
                      std::to_string(n));
      }
    }
  }
  return bad;
}

// ---------------------------------------------------------------------------
// good blocks

GoodBlockFamily::GoodBlockFamily(std::vector<Complex> alphabet, std::uint64_t lo, std::uint64_t hi)
    : alphabet_(std::move(alphabet)), lo_(lo), hi_(hi) {
  if (alphabet_.empty()) throw Error(ErrorCode::requires_simple, "good blocks need a finite alphabet");
  if (hi_ <= lo_ + 1) throw Error(ErrorCode::invalid_argument, "good blocks: window (L, M) is empty");
  children_.assign(alphabet_.size(), -1);
}

GoodBlockFamily GoodBlockFamily::from_trie(std::vector<Complex> alphabet, std::uint64_t lo, std::uint64_t hi,
                                           std::vector<std::int32_t> trie, std::size_t references) {
  GoodBlockFamily f(std::move(alphabet), lo, hi);
  if (trie.empty() || trie.size() % f.alphabet_.size() != 0)
    throw Error(ErrorCode::schema, "good blocks: malformed trie");
  const auto nodes = static_cast<std::int64_t>(trie.size() / f.alphabet_.size());
  for (auto c : trie)
    if (c < -1 || c >= nodes || c == 0) throw Error(ErrorCode::schema, "good blocks: trie child out of range");
  f.children_ = std::move(trie);
  f.references_ = references;
  return f;
}

GoodBlockFamily GoodBlockFamily::from_windows(std::vector<Complex> alphabet, std::uint64_t lo, std::uint64_t hi,
                                              std::vector<std::int32_t> series, std::vector<std::uint64_t> starts) {
  GoodBlockFamily f(std::move(alphabet), lo, hi);
  const std::uint64_t w = f.word_length();
  if (w == 0) throw Error(ErrorCode::invalid_argument, "good blocks: empty words");
  const auto a = static_cast<std::int32_t>(f.alphabet_.size());
  for (auto s : series)
    if (s < 0 || s >= a) throw Error(ErrorCode::invalid_argument, "good blocks: bad symbol");
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  for (auto m : starts)
    if (m + w > series.size()) throw Error(ErrorCode::invalid_argument, "good blocks: window beyond the series");
  f.children_.clear();
  f.series_ = std::move(series);
  f.references_ = starts.size();
  const auto* base = f.series_.data();
  std::stable_sort(starts.begin(), starts.end(), [base, w](std::uint64_t x, std::uint64_t y) {
    return std::lexicographical_compare(base + x, base + x + w, base + y, base + y + w);
  });
  f.sorted_starts_ = std::move(starts);
  return f;
}

std::vector<std::uint64_t> GoodBlockFamily::starts() const {
  auto out = sorted_starts_;
  std::sort(out.begin(), out.end());
  return out;
}

int GoodBlockFamily::compare_prefix(std::uint64_t start, const std::int32_t* word, std::size_t n) const {
  const auto* p = series_.data() + start;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] != word[i]) return p[i] < word[i] ? -1 : 1;
  }
  return 0;
}

int GoodBlockFamily::symbol_of(Complex v) const {
  for (std::size_t i = 0; i < alphabet_.size(); ++i)
    if (alphabet_[i] == v) return static_cast<int>(i);
  for (std::size_t i = 0; i < alphabet_.size(); ++i)
    if (std::abs(alphabet_[i] - v) <= 1e-12 * (1.0 + std::abs(v))) return static_cast<int>(i);
  return -1;
}

void GoodBlockFamily::insert(const std::int32_t* word, std::size_t n) {
  if (windowed()) throw Error(ErrorCode::invalid_argument, "good blocks: windowed family is read-only");
  const std::size_t a = alphabet_.size();
  std::size_t node = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = word[i];
    if (s < 0 || static_cast<std::size_t>(s) >= a) throw Error(ErrorCode::invalid_argument, "good blocks: bad symbol");
    auto& child = children_[node * a + static_cast<std::size_t>(s)];
    if (child < 0) {
      child = static_cast<std::int32_t>(children_.size() / a);
      children_.resize(children_.size() + a, -1);
    }
    node = static_cast<std::size_t>(children_[node * a + static_cast<std::size_t>(s)]);
  }
  ++references_;
}

bool GoodBlockFamily::contains(const std::int32_t* word, std::size_t n) const {
  if (windowed()) {
    if (n > word_length()) return false;
    const auto it = std::lower_bound(sorted_starts_.begin(), sorted_starts_.end(), word,
                                     [&](std::uint64_t s, const std::int32_t* w) { return compare_prefix(s, w, n) < 0; });
    return it != sorted_starts_.end() && compare_prefix(*it, word, n) == 0;
  }
  const std::size_t a = alphabet_.size();
  std::size_t node = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = word[i];
    if (s < 0 || static_cast<std::size_t>(s) >= a) return false;
    const auto child = children_[node * a + static_cast<std::size_t>(s)];
    if (child < 0) return false;
    node = static_cast<std::size_t>(child);
  }
  return true;
}

std::size_t GoodBlockFamily::count(std::size_t n) const {
  if (windowed()) {
    if (n > word_length() || sorted_starts_.empty()) return 0;
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < sorted_starts_.size(); ++i)
      if (compare_prefix(sorted_starts_[i], series_.data() + sorted_starts_[i - 1], n) != 0) ++distinct;
    return distinct;
  }
  const std::size_t a = alphabet_.size();
  std::vector<std::size_t> level{0};
  for (std::size_t d = 0; d < n && !level.empty(); ++d) {
    std::vector<std::size_t> next;
    for (auto node : level)
      for (std::size_t s = 0; s < a; ++s)
        if (children_[node * a + s] >= 0) next.push_back(static_cast<std::size_t>(children_[node * a + s]));
    level = std::move(next);
  }
  return level.size();
}

std::vector<std::int32_t> symbol_series(const System& sys, const Point& x, const Observable& f, std::uint64_t len) {
  if (!f.simple()) throw Error(ErrorCode::requires_simple, "symbol series need a simple observable");
  const auto& alpha = *f.alphabet();
  GoodBlockFamily lookup(alpha, 0, 2);
  const auto values = orbit(sys, x, f, len);
  std::vector<std::int32_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = lookup.symbol_of(values[i]);
    if (out[i] < 0) throw Error(ErrorCode::invalid_argument, "observable value outside its alphabet");
  }
  return out;
}

GoodBlockFamily collect_good_blocks(const System& sys, const Observable& f, const std::vector<Point>& references,
                                    std::uint64_t lo, std::uint64_t hi, std::size_t budget) {
  if (!f.simple()) throw Error(ErrorCode::requires_simple, "collect_good_blocks: observable has no alphabet");
  GoodBlockFamily fam(*f.alphabet(), lo, hi);
  const std::size_t count = std::min(budget, references.size());
  std::vector<std::vector<std::int32_t>> words(count);
  parallel_for(count, [&](std::size_t i) { words[i] = symbol_series(sys, references[i], f, fam.word_length()); });
  for (const auto& w : words) fam.insert(w.data(), w.size());
  return fam;
}

GoodBlockFamily collect_shift_blocks(const std::vector<Complex>& alphabet, const std::vector<std::int32_t>& series,
                                     const std::vector<std::uint64_t>& lags, std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo + 1) throw Error(ErrorCode::invalid_argument, "good blocks: window (L, M) is empty");
  const std::uint64_t w = hi - 1;
  for (auto m : lags)
    if (m + w > series.size()) throw Error(ErrorCode::invalid_argument, "collect_shift_blocks: series too short");
  return GoodBlockFamily::from_windows(alphabet, lo, hi, series, lags);
}

EgorovResult select_shift_references(const std::vector<Complex>& values, std::uint64_t max_lag,
                                     const Checkpoints& grid, double bound, double delta) {
  if (grid.empty() || max_lag == 0) throw Error(ErrorCode::invalid_argument, "select_shift_references: empty input");
  if (values.size() < grid.back() + max_lag)
    throw Error(ErrorCode::invalid_argument, "select_shift_references: series too short");
  std::vector<std::vector<Complex>> series(max_lag);
  parallel_for(max_lag, [&](std::size_t i) {
    const std::size_t m = i + 1;
    CompensatedSum acc;
    std::size_t next = 0;
    for (std::uint64_t n = 1; n <= grid.back(); ++n) {
      acc.add(values[n - 1] * std::conj(values[n - 1 + m]));
      if (n == grid[next]) {
        series[i].push_back(acc.value() / static_cast<double>(n));
        ++next;
      }
    }
  });
  return egorov_set(series, std::vector<Complex>(max_lag, Complex{}), grid, bound, delta);
}

DensityResult good_density(const std::vector<std::int32_t>& words, const GoodBlockFamily& family,
                           const Checkpoints& grid, double delta2) {
  if (family.window_hi() <= family.window_lo() + 1)
    throw Error(ErrorCode::invalid_argument, "good_density: window is empty");
  if (grid.empty()) throw Error(ErrorCode::invalid_argument, "good_density: empty grid");
  const std::uint64_t w = family.word_length();
  if (words.size() < grid.back() + w - 1)
    throw Error(ErrorCode::invalid_argument, "good_density: main orbit shorter than N + M");
  DensityResult r;
  r.grid = grid;
  r.delta2 = delta2;
  std::uint64_t hits = 0;
  std::size_t next = 0;
  for (std::uint64_t k = 1; k <= grid.back(); ++k) {
    // Prefix closure: membership at length M-1 covers every shorter length.
    if (family.contains(words.data() + (k - 1), w)) ++hits;
    if (k == grid[next]) {
      const double d = static_cast<double>(hits) / static_cast<double>(k);
      r.density.push_back(d);
      if (!r.threshold_n && d > 1.0 - delta2) r.threshold_n = k;
      ++next;
    }
  }
  return r;
}

}  // namespace ergolab
