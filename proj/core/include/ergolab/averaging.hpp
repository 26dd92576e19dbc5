// Birkhoff and weighted averages with convergence diagnostics.
//
// Averages start at n = 1: A_N = (1/N) sum_{n=1}^N a_n g(S^n y).

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ergolab/observable.hpp"
#include "ergolab/rational.hpp"
#include "ergolab/sets.hpp"
#include "ergolab/system.hpp"

namespace ergolab {

using Checkpoints = std::vector<std::uint64_t>;

/// first, 2 first, 4 first, ... up to last (inclusive when last is on the grid).
Checkpoints geometric_checkpoints(std::uint64_t first, std::uint64_t last);
/// 2^10 ... 2^20.
Checkpoints default_checkpoints();
/// Powers of two from 2^10 below n, then n itself.
Checkpoints checkpoints_up_to(std::uint64_t n);

constexpr std::uint64_t kCheckpointBudget = 100'000'000;

enum class Verdict { converged, diverged, inconclusive };
std::string_view to_string(Verdict v);

/// Neumaier-compensated complex sum; the addition order is the caller's.
class CompensatedSum {
 public:
  void add(Complex v);
  Complex value() const { return {re_ + cre_, im_ + cim_}; }

 private:
  static void add_part(double& sum, double& comp, double v);
  double re_ = 0.0, cre_ = 0.0, im_ = 0.0, cim_ = 0.0;
};

struct ReportOptions {
  /// Tail-oscillation tolerance; default 1e-2 times the sup bound.
  std::optional<double> tolerance;
  /// First checkpoint of the tail; default is max checkpoint / 16.
  std::optional<std::uint64_t> tail_start;
  /// Expected limit, reported next to the estimate.
  std::optional<Complex> reference;
};

struct ConvergenceReport {
  Checkpoints checkpoints;
  std::vector<Complex> averages;
  std::vector<Complex> partial_sums;
  std::uint64_t tail_start = 0;
  double tail_oscillation = 0.0;
  Complex limit_estimate{};
  double tolerance = 0.0;
  double sup_bound = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::optional<Complex> reference;
};

/// Builds a report from partial sums S_N at each checkpoint.
ConvergenceReport report_from_sums(Checkpoints checkpoints, std::vector<Complex> partial_sums, double sup_bound,
                                   const ReportOptions& options = {});

/// Builds a report from the term series t_1, ..., t_N (N >= max checkpoint).
ConvergenceReport summarize(const std::vector<Complex>& terms, const Checkpoints& checkpoints, double sup_bound,
                            const ReportOptions& options = {});

ConvergenceReport birkhoff_average(const System& sys, const Point& x, const Observable& f,
                                   const Checkpoints& checkpoints, const ReportOptions& options = {});

/// One report per start point, computed in parallel.
std::vector<ConvergenceReport> birkhoff_batch(const System& sys, const std::vector<Point>& xs, const Observable& f,
                                              const Checkpoints& checkpoints, const ReportOptions& options = {});

struct WeightSequence {
  enum class Source { return_time, observable_orbit, eigen, explicit_list };

  Source source = Source::explicit_list;
  std::vector<Complex> values;
  double sup_bound = 0.0;

  std::optional<System> system;
  std::optional<Point> start;
  std::optional<Observable> observable;
  std::optional<MeasurableSet> set;
  Angle angle;

  /// 1_A(T^n x), n = 1..N.
  static WeightSequence return_times(const System& sys, const Point& x, const MeasurableSet& a, std::uint64_t n);
  /// f(T^n x), n = 1..N.
  static WeightSequence observable_orbit(const System& sys, const Point& x, const Observable& f, std::uint64_t n);
  /// e^{2 pi i n beta}, n = 1..N; exact phases.
  static WeightSequence eigen(const Angle& beta, std::uint64_t n);
  static WeightSequence explicit_list(std::vector<Complex> values);

  /// Rebuilds the values from the provenance descriptor.
  WeightSequence regenerate() const;
};

ConvergenceReport weighted_average(const WeightSequence& weights, const System& sys, const Point& y,
                                   const Observable& g, const Checkpoints& checkpoints,
                                   const ReportOptions& options = {});

/// Term series a_n g(S^n y), n = 1..N.
std::vector<Complex> weighted_terms(const WeightSequence& weights, const System& sys, const Point& y,
                                    const Observable& g, std::uint64_t n);

/// A_N(x, xi) = (1/N) sum f(T^n x) conj f(T^n xi) at each checkpoint.
std::vector<Complex> pair_correlation_averages(const System& sys, const Observable& f, const Point& x,
                                               const Point& xi, const Checkpoints& checkpoints);

// ---------------------------------------------------------------------------
// three-term Cauchy diagnostic

/// Averages of f_k g (or f g_k) for a ladder of approximation levels.
///   error_terms[l][n]  pointwise bound on |exact term - approximated term|
///   approx_terms[l][n] approximated product term
struct ApproximationFamily {
  std::vector<double> levels;
  std::vector<std::vector<double>> error_terms;
  std::vector<std::vector<Complex>> approx_terms;
  std::vector<Complex> exact_terms;
};

/// f replaced by simple_approx(f, k); errors ||g||_inf |f - f_k|(T^n x).
ApproximationFamily approximate_first(const System& sys_x, const Point& x, const Observable& f, const System& sys_y,
                                      const Point& y, const Observable& g, const std::vector<std::uint64_t>& ks,
                                      std::uint64_t n);
/// g replaced by truncate(g, k); errors ||f||_inf |g - g_k|(S^n y).
ApproximationFamily approximate_second(const System& sys_x, const Point& x, const Observable& f, const System& sys_y,
                                       const Point& y, const Observable& g, const std::vector<double>& ks,
                                       std::uint64_t n, TruncationRule rule = TruncationRule::clip);

struct CauchyLevel {
  double level = 0.0;
  std::vector<double> term_one;    // (1/N) sum error_terms, per checkpoint (term II is the same at M)
  std::vector<Complex> averages;   // approximated averages per checkpoint
  double worst_slack = 0.0;        // min over pairs of (I + II + III) - |A_N - A_M|
  bool certified = true;
};

struct CauchyReport {
  double epsilon = 0.0;
  Checkpoints checkpoints;
  std::vector<Complex> exact_averages;
  std::vector<CauchyLevel> levels;
  std::optional<std::size_t> chosen_level;
  std::optional<std::uint64_t> n0;
  double term_one_at_n0 = 0.0;
  double term_three_at_n0 = 0.0;
  double exact_oscillation_at_n0 = 0.0;
  bool certified = true;
  Verdict verdict = Verdict::inconclusive;
};

/// Certifies |A_N - A_M| <= I + II + III at every checkpoint pair and picks the
/// first level k0 and smallest N0 with I, II, III < epsilon / 3 beyond N0.
CauchyReport cauchy_diagnostic(const ApproximationFamily& family, const Checkpoints& checkpoints, double epsilon);

// ---------------------------------------------------------------------------
// Egorov, cover and psi lemmas

struct EgorovResult {
  std::vector<std::size_t> selected;
  std::uint64_t n_delta = 0;
  std::size_t grid_index = 0;
  double fraction = 0.0;
  double bound = 0.0;
  double delta = 0.0;
  /// Per candidate: last grid index with |series - limit| >= bound, or -1.
  std::vector<int> last_bad;
  Verdict verdict = Verdict::inconclusive;
};

/// series[i][g] is candidate i's value at grid point g. A candidate is kept
/// for N_delta = grid[g] when it meets the bound at every later grid point.
EgorovResult egorov_set(const std::vector<std::vector<Complex>>& series, const std::vector<Complex>& limits,
                        const Checkpoints& grid, double bound, double delta);

/// Union of S^j B for j = 1..k.
MeasurableSet image_union(const System& sys, const MeasurableSet& b, std::uint64_t k);
Rational image_union_measure(const System& sys, const MeasurableSet& b, std::uint64_t k);

struct CoverResult {
  std::uint64_t k = 0;
  Rational measure;
  Rational previous_measure;  // measure with k - 1 images (0 when k == 1)
  MeasurableSet cover;
};

/// Minimal K with measure(union S^j B, j <= K) > 1 - delta; doubling search
/// then bisection, all measures exact.
CoverResult union_cover(const System& sys, const MeasurableSet& b, const Rational& delta,
                        std::uint64_t max_k = 1u << 20);

struct PsiResult {
  double g_fraction = 0.0;
  std::uint64_t m0 = 0;
  double bound = 0.0;
  std::vector<bool> good;
  std::vector<int> last_bad;
  std::vector<std::vector<double>> deviations;  // per sample, per grid point
};

/// psi = indicator of the union of S^j B, j <= K. A sample is good when it
/// meets |avg psi - 1| < delta1 / 4 at the last grid point; M0 is the
/// smallest grid point beyond which every good sample meets the bound.
PsiResult psi_average_check(const System& sys, const MeasurableSet& b, std::uint64_t k, const std::vector<Point>& ys,
                            double delta1, const Checkpoints& grid);

}  // namespace ergolab
