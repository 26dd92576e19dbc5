// Finite model of the layered-interval argument: bad-interval certificates,
// good block families, nested base-interval layers and their audits.
//
// Index conventions: orbit index n runs over 1..N. Vectors indexed by n have
// size N + 1 and ignore slot 0. A base interval (l, m] covers l+1..m.

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/averaging.hpp"
#include "ergolab/observable.hpp"
#include "ergolab/rational.hpp"
#include "ergolab/system.hpp"

namespace ergolab {

// ---------------------------------------------------------------------------
// bad intervals

/// Real-part selector: Re, Im, -Re, -Im.
enum class Branch { re, im, neg_re, neg_im };
std::string_view to_string(Branch b);
Branch branch_from_string(std::string_view s);
double apply_branch(Branch b, Complex z);

struct BadIntervalCertificate {
  double a = 0.0;
  double c = 0.0;
  Branch branch = Branch::re;
  /// (L_j, M_j), j = 1..J.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> intervals;
  std::vector<std::uint64_t> thresholds;
  std::size_t samples = 0;
  /// Samples whose tail stays above the limsup threshold, for the chosen branch.
  std::vector<std::size_t> divergent;
  /// Samples kept through every refinement step.
  std::vector<std::size_t> retained;
  /// witnesses[r][j] = n_j for sample retained[r].
  std::vector<std::vector<std::uint64_t>> witnesses;
  /// Retained count after each step.
  std::vector<std::size_t> retained_counts;
  double limsup_threshold = 0.0;
};

struct CertifyOptions {
  double limsup_threshold = 1e-2;
  /// Fraction of the divergent samples that must reach level a.
  double target = 1.0;
  /// Number of trailing dyadic windows in the limsup proxy.
  std::size_t tail_windows = 3;
};

/// F[y][N-1] = F_N(y) = (1/N) sum_{n<=N} a_n g(S^n y).
BadIntervalCertificate find_bad_intervals(const std::vector<std::vector<Complex>>& f_series, std::size_t j_count,
                                          const std::vector<std::uint64_t>& thresholds,
                                          const CertifyOptions& options = {});

/// Synthetic divergent averages: F_N(y) = A, except -A while the fractional
/// part of log2 N + phi_y lies below `dip`; phi_y is uniform per sample.
std::vector<std::vector<Complex>> oscillating_series(std::size_t samples, std::uint64_t horizon, double amplitude,
                                                     double dip, std::uint64_t seed);

/// Recomputes every stored witness from the series; returns the failures.
std::vector<std::string> verify_certificate(const BadIntervalCertificate& cert,
                                            const std::vector<std::vector<Complex>>& f_series);

// ---------------------------------------------------------------------------
// good blocks

/// Words over a finite alphabet, closed under prefixes. Independent references
/// go into a trie. Windows of one series are kept as (series, start positions)
/// with the starts sorted by their windows, so lookups are binary searches.
class GoodBlockFamily {
 public:
  GoodBlockFamily() = default;
  GoodBlockFamily(std::vector<Complex> alphabet, std::uint64_t lo, std::uint64_t hi);

  const std::vector<Complex>& alphabet() const { return alphabet_; }
  std::uint64_t window_lo() const { return lo_; }
  std::uint64_t window_hi() const { return hi_; }
  /// Longest stored word length: hi - 1.
  std::uint64_t word_length() const { return hi_ > 0 ? hi_ - 1 : 0; }
  std::size_t references() const { return references_; }
  std::size_t node_count() const { return children_.size() / std::max<std::size_t>(1, alphabet_.size()); }
  bool windowed() const { return !series_.empty(); }

  /// Index into the alphabet, or -1.
  int symbol_of(Complex v) const;
  void insert(const std::int32_t* word, std::size_t n);
  bool contains(const std::int32_t* word, std::size_t n) const;
  /// Number of distinct stored words of length n.
  std::size_t count(std::size_t n) const;

  /// Flat trie: children_[node * A + s], -1 when absent; node 0 is the root.
  const std::vector<std::int32_t>& trie() const { return children_; }
  static GoodBlockFamily from_trie(std::vector<Complex> alphabet, std::uint64_t lo, std::uint64_t hi,
                                   std::vector<std::int32_t> trie, std::size_t references);

  /// Words series[m .. m + hi - 2] for each m in starts.
  static GoodBlockFamily from_windows(std::vector<Complex> alphabet, std::uint64_t lo, std::uint64_t hi,
                                      std::vector<std::int32_t> series, std::vector<std::uint64_t> starts);
  const std::vector<std::int32_t>& series() const { return series_; }
  /// Window starts in increasing order.
  std::vector<std::uint64_t> starts() const;

 private:
  int compare_prefix(std::uint64_t start, const std::int32_t* word, std::size_t n) const;


  std::vector<Complex> alphabet_;
  std::uint64_t lo_ = 0, hi_ = 0;
  std::vector<std::int32_t> children_;
  std::size_t references_ = 0;
  std::vector<std::int32_t> series_;
  std::vector<std::uint64_t> sorted_starts_;  // ordered by window content
};

/// Symbol ids of f(T^n x), n = 1..len; throws requires_simple without an alphabet.
std::vector<std::int32_t> symbol_series(const System& sys, const Point& x, const Observable& f, std::uint64_t len);

/// Family built from the words f(T xi) .. f(T^{M-1} xi) of each reference point.
GoodBlockFamily collect_good_blocks(const System& sys, const Observable& f, const std::vector<Point>& references,
                                    std::uint64_t lo, std::uint64_t hi, std::size_t budget);

/// Family built from windows of one symbol series: the reference point for
/// lag m is T^m x, whose word is series[m .. m + M - 2] (0-based, series[0] = f(T x)).
GoodBlockFamily collect_shift_blocks(const std::vector<Complex>& alphabet, const std::vector<std::int32_t>& series,
                                     const std::vector<std::uint64_t>& lags, std::uint64_t lo, std::uint64_t hi);

/// Egorov selection of lags m by the pair correlation of x with T^m x:
/// (1/N) sum_{n<=N} f_n conj f_{n+m}.
EgorovResult select_shift_references(const std::vector<Complex>& values, std::uint64_t max_lag,
                                     const Checkpoints& grid, double bound, double delta);

struct DensityResult {
  Checkpoints grid;
  std::vector<double> density;
  std::optional<std::uint64_t> threshold_n;
  double delta2 = 0.0;
};

/// density(N) = (1/N) #{k <= N : word of length M-1 at k is in the family};
/// words[k-1] is the symbol at orbit index k.
DensityResult good_density(const std::vector<std::int32_t>& words, const GoodBlockFamily& family,
                           const Checkpoints& grid, double delta2);

// ---------------------------------------------------------------------------
// layers

struct LayerConstants {
  std::size_t j_count = 0;
  double a = 0.0;
  double c = 0.0;
  double delta = 0.0;
  double delta1 = 0.0;  // delta'
  double delta2 = 0.0;  // delta''
  std::uint64_t k = 0;  // cover size K
  std::uint64_t m0 = 0;
  std::uint64_t n_delta = 0;
  /// (L_j, M_j), j = 1..J.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> windows;
  std::uint64_t n = 0;
  Branch branch = Branch::re;
};

struct ConstraintViolation {
  std::string name;
  std::string detail;
};

/// Every parameter inequality, compared in exact rational arithmetic on the
/// binary values of the doubles.
std::vector<ConstraintViolation> check_constraints(const LayerConstants& k);

/// Smallest N for which the interval chain can satisfy the constraints with
/// the given J, delta', K, M0 and N_delta; intervals as short as allowed.
BigInt minimal_feasible_n(std::size_t j_count, double delta1, std::uint64_t k, std::uint64_t m0 = 0,
                          std::uint64_t n_delta = 0);

struct VisitPattern {
  std::vector<std::uint8_t> in_b;  // size N + 1
  std::vector<std::uint8_t> in_e;  // size N + 1
  /// n_j(S^l y) for layer j (1-based) and visit index l.
  std::function<std::uint64_t(std::size_t, std::uint64_t)> witness;

  /// E = visits to the union of S^i B, i = 1..K: n in E iff n - i in B for some i.
  static std::vector<std::uint8_t> cover_flags(const std::vector<std::uint8_t>& in_b, std::uint64_t k);
  /// i.i.d. visits with the given density; witnesses hashed uniformly inside the windows.
  static VisitPattern synthetic(std::uint64_t n, const std::vector<std::pair<std::uint64_t, std::uint64_t>>& windows,
                                std::uint64_t k, double density, std::uint64_t seed);
  /// Witnesses borrowed from a certificate, visit l uses retained sample l mod |retained|.
  static VisitPattern from_certificate(const BadIntervalCertificate& cert, std::vector<std::uint8_t> in_b,
                                       std::uint64_t k);
};

struct BaseInterval {
  std::uint64_t l = 0;
  std::uint64_t m = 0;
  std::uint64_t length() const { return m - l; }
  bool operator==(const BaseInterval&) const = default;
};

struct Layer {
  std::vector<BaseInterval> intervals;
  /// c^j_n as a symbol id, n = 0..N; the zero value outside the intervals.
  std::vector<std::int32_t> c;
  std::uint64_t covered = 0;
  /// Visits inside a parent interval skipped by the orthogonality test.
  std::vector<std::uint64_t> rejected;
};

struct LayerStack {
  LayerConstants constants;
  std::vector<Complex> alphabet;
  /// Symbol id used outside intervals: the id of 0 if 0 is a letter, else -1.
  std::int32_t zero_id = -1;
  /// reference[t] = id of f(T^t x), t = 1..M_J (slot 0 unused).
  std::vector<std::int32_t> reference;
  std::vector<std::uint8_t> in_b;
  std::vector<std::uint8_t> in_e;
  /// layers[j-1] is layer j.
  std::vector<Layer> layers;
  bool relaxed = false;
  std::vector<ConstraintViolation> violations;

  Complex value(std::size_t j, std::uint64_t n) const;
  /// c^j as complex values, n = 1..N (0-based vector of length N).
  std::vector<Complex> sequence(std::size_t j) const;
  double density(std::size_t j) const;
  Rational exact_density(std::size_t j) const;
};

struct BuildOptions {
  /// Record constraint violations instead of rejecting them.
  bool relaxed = false;
};

LayerStack build_layers(const LayerConstants& constants, const VisitPattern& visits,
                        const std::vector<Complex>& alphabet, const std::vector<std::int32_t>& reference,
                        const GoodBlockFamily& family, const BuildOptions& options = {});

struct AuditIssue {
  std::size_t layer = 0;
  std::string kind;
  std::uint64_t at = 0;
  std::string detail;
};

struct DensityAudit {
  std::vector<std::uint64_t> covered;
  std::vector<double> density;
  std::vector<std::string> checked;
  std::vector<AuditIssue> issues;
  bool pass() const { return issues.empty(); }
};

/// Recounts and checks everything; never throws.
DensityAudit audit_layers(const LayerStack& stack);
/// audit_layers, throwing audit_failure when any check fails.
DensityAudit density_audit(const LayerStack& stack);

struct AlphaBeta {
  std::vector<std::vector<double>> alpha;
  std::vector<double> beta;
  double delta = 0.0;
  double a = 0.0;
  bool alpha_pass = false;
  bool beta_pass = false;
  bool pass() const { return alpha_pass && beta_pass; }
};

/// alpha[j1][j2] = |(1/N) sum c^{j1} conj c^{j2}| (j1 != j2, diagonal 0),
/// beta[j] = RI((1/N) sum c^j g); g[n-1] = g(S^n y).
AlphaBeta alpha_beta_check(const std::vector<std::vector<Complex>>& layers, const std::vector<Complex>& g, double a,
                           double delta, Branch branch = Branch::re);
AlphaBeta alpha_beta_check(const LayerStack& stack, const std::vector<Complex>& g, double a, double delta);

enum class ChainVerdict { contradiction, no_contradiction, inapplicable };
std::string_view to_string(ChainVerdict v);

struct ChainConstants {
  std::size_t j_count = 0;
  double a = 0.0;
  double delta = 0.0;
  double f_sup = 1.0;
  double g_sup = 1.0;
};

struct ChainResult {
  double lower = 0.0;     // J (a - delta)
  double observed = 0.0;  // |(1/N) sum c_n g_n|
  double upper = 0.0;     // (sqrt(J) |f| + J sqrt(delta)) |g|
  double threshold = 0.0; // 4 |f|^2 |g|^2 / a^2
  bool chain_holds = false;
  /// |sum c g|^2 <= sum |c|^2 sum |g|^2 in exact integer arithmetic.
  bool cauchy_schwarz_exact = false;
  ChainVerdict verdict = ChainVerdict::inapplicable;
};

ChainResult contradiction_chain(const AlphaBeta& ab, const std::vector<std::vector<Complex>>& layers,
                                const std::vector<Complex>& g, const ChainConstants& k);

/// True iff J a^2 > 4 |f|^2 |g|^2, exactly.
bool beyond_threshold(std::size_t j_count, double a, double f_sup, double g_sup);

}  // namespace ergolab
