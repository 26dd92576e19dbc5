#include "ergolab/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"

namespace ergolab {

Checkpoints geometric_checkpoints(std::uint64_t first, std::uint64_t last) {
  if (first == 0 || first > last) throw Error(ErrorCode::invalid_argument, "checkpoints: need 0 < first <= last");
  Checkpoints out;
  for (std::uint64_t n = first; n <= last; n *= 2) {
    out.push_back(n);
    if (n > last / 2) break;
  }
  return out;
}

Checkpoints default_checkpoints() { return geometric_checkpoints(1u << 10, 1u << 20); }

Checkpoints checkpoints_up_to(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "checkpoints: n must be positive");
  Checkpoints out;
  for (std::uint64_t c = 1u << 10; c < n; c *= 2) out.push_back(c);
  out.push_back(n);
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::diverged: return "diverged";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

void CompensatedSum::add_part(double& sum, double& comp, double v) {
  const double t = sum + v;
  if (std::fabs(sum) >= std::fabs(v)) {
    comp += (sum - t) + v;
  } else {
    comp += (v - t) + sum;
  }
  sum = t;
}

void CompensatedSum::add(Complex v) {
  add_part(re_, cre_, v.real());
  add_part(im_, cim_, v.imag());
}

namespace {

void validate_checkpoints(const Checkpoints& c) {
  if (c.empty()) throw Error(ErrorCode::invalid_argument, "checkpoints: empty grid");
  if (c.front() == 0) throw Error(ErrorCode::invalid_argument, "checkpoints: N must be positive");
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] <= c[i - 1]) throw Error(ErrorCode::invalid_argument, "checkpoints: grid must be increasing");
  if (c.back() > kCheckpointBudget) throw Error(ErrorCode::resource, "checkpoints: beyond the 1e8 step budget");
}

}  // namespace

ConvergenceReport report_from_sums(Checkpoints checkpoints, std::vector<Complex> partial_sums, double sup_bound,
                                const ReportOptions& options) {
  ConvergenceReport r;
  r.checkpoints = std::move(checkpoints);
  r.partial_sums = std::move(partial_sums);
  r.sup_bound = sup_bound;
  r.averages.reserve(r.checkpoints.size());
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i)
    r.averages.push_back(r.partial_sums[i] / static_cast<double>(r.checkpoints[i]));
  r.tail_start = options.tail_start.value_or(std::max<std::uint64_t>(1, r.checkpoints.back() / 16));
  r.tolerance = options.tolerance.value_or(1e-2 * sup_bound);
  r.reference = options.reference;
  double osc = 0.0;
  for (std::size_t i = 0; i < r.checkpoints.size(); ++i) {
    if (r.checkpoints[i] < r.tail_start) continue;
    for (std::size_t j = i + 1; j < r.checkpoints.size(); ++j) osc = std::max(osc, std::abs(r.averages[i] - r.averages[j]));
  }
  r.tail_oscillation = osc;
  r.limit_estimate = r.averages.back();
  // Divergence is never claimed at finite N.
  r.verdict = osc <= r.tolerance ? Verdict::converged : Verdict::inconclusive;
  return r;
}

ConvergenceReport summarize(const std::vector<Complex>& terms, const Checkpoints& checkpoints, double sup_bound,
                            const ReportOptions& options) {
  validate_checkpoints(checkpoints);
  if (terms.size() < checkpoints.back()) throw Error(ErrorCode::invalid_argument, "summarize: series shorter than grid");
  std::vector<Complex> sums;
  CompensatedSum acc;
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= checkpoints.back(); ++n) {
    acc.add(terms[n - 1]);
    if (n == checkpoints[next]) {
      sums.push_back(acc.value());
      ++next;
    }
  }
  return report_from_sums(checkpoints, std::move(sums), sup_bound, options);
}

ConvergenceReport birkhoff_average(const System& sys, const Point& x, const Observable& f,
                                   const Checkpoints& checkpoints, const ReportOptions& options) {
  validate_checkpoints(checkpoints);
  check_compatible(sys, x, f);
  ReportOptions opts = options;
  if (!opts.reference && sys.ergodic()) opts.reference = integrate(f, sys);
  std::vector<Complex> sums;
  CompensatedSum acc;
  Point p = x;
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= checkpoints.back(); ++n) {
    sys.step(p);
    acc.add(f(p));
    if (n == checkpoints[next]) {
      sums.push_back(acc.value());
      ++next;
    }
  }
  return report_from_sums(checkpoints, std::move(sums), f.sup_norm(), opts);
}

std::vector<ConvergenceReport> birkhoff_batch(const System& sys, const std::vector<Point>& xs, const Observable& f,
                                              const Checkpoints& checkpoints, const ReportOptions& options) {
  std::vector<ConvergenceReport> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = birkhoff_average(sys, xs[i], f, checkpoints, options); });
  return out;
}

// ---------------------------------------------------------------------------
// weights

WeightSequence WeightSequence::return_times(const System& sys, const Point& x, const MeasurableSet& a, std::uint64_t n) {
  WeightSequence w;
  w.source = Source::return_time;
  w.values = orbit(sys, x, Observable::indicator(a), n);
  w.sup_bound = 1.0;
  w.system = sys;
  w.start = x;
  w.set = a;
  return w;
}

WeightSequence WeightSequence::observable_orbit(const System& sys, const Point& x, const Observable& f, std::uint64_t n) {
  if (!f.bounded()) throw Error(ErrorCode::invalid_argument, "weights must be bounded");
  WeightSequence w;
  w.source = Source::observable_orbit;
  w.values = orbit(sys, x, f, n);
  w.sup_bound = f.sup_norm();
  w.system = sys;
  w.start = x;
  w.observable = f;
  return w;
}

WeightSequence WeightSequence::eigen(const Angle& beta, std::uint64_t n) {
  WeightSequence w;
  w.source = Source::eigen;
  w.angle = beta;
  w.sup_bound = 1.0;
  w.values.reserve(n);
  Fixed t;
  for (std::uint64_t i = 1; i <= n; ++i) {
    t += beta.value;
    w.values.push_back(unit_phase(t));
  }
  return w;
}

WeightSequence WeightSequence::explicit_list(std::vector<Complex> values) {
  WeightSequence w;
  w.source = Source::explicit_list;
  double sup = 0.0;
  for (const auto& v : values) sup = std::max(sup, std::abs(v));
  w.sup_bound = sup;
  w.values = std::move(values);
  return w;
}

WeightSequence WeightSequence::regenerate() const {
  const std::uint64_t n = values.size();
  switch (source) {
    case Source::return_time: return return_times(*system, *start, *set, n);
    case Source::observable_orbit: return observable_orbit(*system, *start, *observable, n);
    case Source::eigen: return eigen(angle, n);
    case Source::explicit_list: return *this;
  }
  return *this;
}

std::vector<Complex> weighted_terms(const WeightSequence& weights, const System& sys, const Point& y,
                                    const Observable& g, std::uint64_t n) {
  if (weights.values.size() < n) throw Error(ErrorCode::invalid_argument, "weights shorter than the requested length");
  check_compatible(sys, y, g);
  std::vector<Complex> terms;
  terms.reserve(n);
  Point p = y;
  for (std::uint64_t i = 0; i < n; ++i) {
    sys.step(p);
    terms.push_back(weights.values[i] * g(p));
  }
  return terms;
}

ConvergenceReport weighted_average(const WeightSequence& weights, const System& sys, const Point& y,
                                   const Observable& g, const Checkpoints& checkpoints, const ReportOptions& options) {
  validate_checkpoints(checkpoints);
  if (weights.values.size() < checkpoints.back()) {
    throw Error(ErrorCode::invalid_argument, "weights shorter than the largest checkpoint");
  }
  check_compatible(sys, y, g);
  std::vector<Complex> sums;
  CompensatedSum acc;
  Point p = y;
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= checkpoints.back(); ++n) {
    sys.step(p);
    acc.add(weights.values[n - 1] * g(p));
    if (n == checkpoints[next]) {
      sums.push_back(acc.value());
      ++next;
    }
  }
  return report_from_sums(checkpoints, std::move(sums), weights.sup_bound * g.sup_norm(), options);
}

std::vector<Complex> pair_correlation_averages(const System& sys, const Observable& f, const Point& x,
                                               const Point& xi, const Checkpoints& checkpoints) {
  validate_checkpoints(checkpoints);
  check_compatible(sys, x, f);
  check_compatible(sys, xi, f);
  std::vector<Complex> out;
  CompensatedSum acc;
  Point p = x, q = xi;
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= checkpoints.back(); ++n) {
    sys.step(p);
    sys.step(q);
    acc.add(f(p) * std::conj(f(q)));
    if (n == checkpoints[next]) {
      out.push_back(acc.value() / static_cast<double>(n));
      ++next;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cauchy diagnostic

ApproximationFamily approximate_first(const System& sys_x, const Point& x, const Observable& f, const System& sys_y,
                                      const Point& y, const Observable& g, const std::vector<std::uint64_t>& ks,
                                      std::uint64_t n) {
  const auto fx = orbit(sys_x, x, f, n);
  const auto gy = orbit(sys_y, y, g, n);
  ApproximationFamily fam;
  for (std::uint64_t i = 0; i < n; ++i) fam.exact_terms.push_back(fx[i] * gy[i]);
  std::vector<std::vector<Complex>> fks(ks.size());
  parallel_for(ks.size(), [&](std::size_t l) { fks[l] = orbit(sys_x, x, simple_approx(f, ks[l]), n); });
  for (std::size_t l = 0; l < ks.size(); ++l) {
    fam.levels.push_back(static_cast<double>(ks[l]));
    std::vector<double> err(n);
    std::vector<Complex> approx(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      err[i] = g.sup_norm() * std::abs(fx[i] - fks[l][i]);
      approx[i] = fks[l][i] * gy[i];
    }
    fam.error_terms.push_back(std::move(err));
    fam.approx_terms.push_back(std::move(approx));
  }
  return fam;
}

ApproximationFamily approximate_second(const System& sys_x, const Point& x, const Observable& f, const System& sys_y,
                                       const Point& y, const Observable& g, const std::vector<double>& ks,
                                       std::uint64_t n, TruncationRule rule) {
  const auto fx = orbit(sys_x, x, f, n);
  const auto gy = orbit(sys_y, y, g, n);
  ApproximationFamily fam;
  for (std::uint64_t i = 0; i < n; ++i) fam.exact_terms.push_back(fx[i] * gy[i]);
  for (double k : ks) {
    const auto gk = orbit(sys_y, y, truncate(g, k, rule), n);
    fam.levels.push_back(k);
    std::vector<double> err(n);
    std::vector<Complex> approx(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      err[i] = f.sup_norm() * std::abs(gy[i] - gk[i]);
      approx[i] = fx[i] * gk[i];
    }
    fam.error_terms.push_back(std::move(err));
    fam.approx_terms.push_back(std::move(approx));
  }
  return fam;
}

namespace {

std::vector<Complex> averages_on_grid(const std::vector<Complex>& terms, const Checkpoints& grid) {
  std::vector<Complex> out;
  CompensatedSum acc;
  std::size_t next = 0;
  for (std::uint64_t n = 1; n <= grid.back(); ++n) {
    acc.add(terms[n - 1]);
    if (n == grid[next]) {
      out.push_back(acc.value() / static_cast<double>(n));
      ++next;
    }
  }
  return out;
}

}  // namespace

CauchyReport cauchy_diagnostic(const ApproximationFamily& family, const Checkpoints& checkpoints, double epsilon) {
  validate_checkpoints(checkpoints);
  if (!(epsilon > 0)) throw Error(ErrorCode::invalid_argument, "cauchy_diagnostic: epsilon must be positive");
  if (family.exact_terms.size() < checkpoints.back()) {
    throw Error(ErrorCode::invalid_argument, "cauchy_diagnostic: series shorter than grid");
  }
  CauchyReport rep;
  rep.epsilon = epsilon;
  rep.checkpoints = checkpoints;
  rep.exact_averages = averages_on_grid(family.exact_terms, checkpoints);
  const std::size_t g = checkpoints.size();
  const double third = epsilon / 3.0;

  for (std::size_t l = 0; l < family.levels.size(); ++l) {
    CauchyLevel lv;
    lv.level = family.levels[l];
    std::vector<Complex> err_c(family.error_terms[l].begin(), family.error_terms[l].end());
    for (const auto& c : averages_on_grid(err_c, checkpoints)) lv.term_one.push_back(c.real());
    lv.averages = averages_on_grid(family.approx_terms[l], checkpoints);
    double slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g; ++i) {
      for (std::size_t j = 0; j < g; ++j) {
        const double lhs = std::abs(rep.exact_averages[i] - rep.exact_averages[j]);
        const double rhs = lv.term_one[i] + lv.term_one[j] + std::abs(lv.averages[i] - lv.averages[j]);
        // rounding allowance relative to the magnitudes involved
        const double tol = 1e-12 * (1.0 + std::abs(rep.exact_averages[i]) + std::abs(rep.exact_averages[j]) + rhs);
        slack = std::min(slack, rhs - lhs);
        if (lhs > rhs + tol) lv.certified = false;
      }
    }
    lv.worst_slack = slack;
    rep.certified = rep.certified && lv.certified;
    if (!rep.chosen_level) {
      for (std::size_t s = 0; s < g; ++s) {
        bool ok = true;
        double t1 = 0.0, t3 = 0.0, ex = 0.0;
        for (std::size_t i = s; i < g && ok; ++i) {
          t1 = std::max(t1, lv.term_one[i]);
          if (lv.term_one[i] >= third) ok = false;
          for (std::size_t j = i + 1; j < g && ok; ++j) {
            const double d = std::abs(lv.averages[i] - lv.averages[j]);
            t3 = std::max(t3, d);
            ex = std::max(ex, std::abs(rep.exact_averages[i] - rep.exact_averages[j]));
            if (d >= third) ok = false;
          }
        }
        if (ok) {
          rep.chosen_level = l;
          rep.n0 = checkpoints[s];
          rep.term_one_at_n0 = t1;
          rep.term_three_at_n0 = t3;
          rep.exact_oscillation_at_n0 = ex;
          break;
        }
      }
    }
    rep.levels.push_back(std::move(lv));
  }
  rep.verdict = rep.chosen_level && rep.certified ? Verdict::converged : Verdict::inconclusive;
  return rep;
}

// ---------------------------------------------------------------------------
// Egorov

EgorovResult egorov_set(const std::vector<std::vector<Complex>>& series, const std::vector<Complex>& limits,
                        const Checkpoints& grid, double bound, double delta) {
  if (!(delta > 0 && delta < 1)) throw Error(ErrorCode::invalid_argument, "egorov_set: delta must lie in (0,1)");
  if (series.size() != limits.size()) throw Error(ErrorCode::invalid_argument, "egorov_set: limits/series mismatch");
  if (series.empty()) throw Error(ErrorCode::invalid_argument, "egorov_set: no candidates");
  EgorovResult r;
  r.bound = bound;
  r.delta = delta;
  const std::size_t g = grid.size();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].size() != g) throw Error(ErrorCode::invalid_argument, "egorov_set: series/grid mismatch");
    int last = -1;
    for (std::size_t j = 0; j < g; ++j)
      if (!(std::abs(series[i][j] - limits[i]) < bound)) last = static_cast<int>(j);
    r.last_bad.push_back(last);
  }
  const double need = (1.0 - delta) * static_cast<double>(series.size());
  for (std::size_t j = 0; j < g; ++j) {
    std::size_t count = 0;
    for (int lb : r.last_bad)
      if (lb <= static_cast<int>(j)) ++count;
    if (static_cast<double>(count) > need) {
      r.grid_index = j;
      r.n_delta = grid[j];
      for (std::size_t i = 0; i < series.size(); ++i)
        if (r.last_bad[i] <= static_cast<int>(j)) r.selected.push_back(i);
      r.fraction = static_cast<double>(count) / static_cast<double>(series.size());
      r.verdict = Verdict::converged;
      return r;
    }
  }
  std::size_t good = 0;
  for (int lb : r.last_bad)
    if (lb < static_cast<int>(g) - 1) ++good;
  r.fraction = static_cast<double>(good) / static_cast<double>(series.size());
  r.verdict = Verdict::inconclusive;
  return r;
}

// ---------------------------------------------------------------------------
// covers

MeasurableSet image_union(const System& sys, const MeasurableSet& b, std::uint64_t k) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "image_union: k must be positive");
  if (const auto* iv = std::get_if<IntervalUnion>(&b.v)) {
    if (sys.kind() != SystemKind::rotation) throw Error(ErrorCode::unsupported_set, "interval covers need a rotation");
    IntervalUnion acc;
    for (std::uint64_t j = 1; j <= k; ++j) {
      acc = acc.unite(std::get<IntervalUnion>(sys.image(b, static_cast<std::int64_t>(j)).v));
      if (acc == IntervalUnion::full()) break;
    }
    (void)iv;
    return {acc};
  }
  if (std::holds_alternative<Cylinder>(b.v) || std::holds_alternative<CylinderUnion>(b.v)) {
    CylinderUnion acc;
    for (std::uint64_t j = 1; j <= k; ++j) {
      const MeasurableSet img = sys.image(b, static_cast<std::int64_t>(j));
      if (const auto* c = std::get_if<Cylinder>(&img.v)) {
        acc.parts.push_back(*c);
      } else {
        const auto& u = std::get<CylinderUnion>(img.v);
        acc.parts.insert(acc.parts.end(), u.parts.begin(), u.parts.end());
      }
    }
    return {acc};
  }
  throw Error(ErrorCode::unsupported_set, "covers are computed exactly only for interval and cylinder sets");
}

Rational image_union_measure(const System& sys, const MeasurableSet& b, std::uint64_t k) {
  return sys.measure(image_union(sys, b, k));
}

CoverResult union_cover(const System& sys, const MeasurableSet& b, const Rational& delta, std::uint64_t max_k) {
  if (!sys.invertible()) throw Error(ErrorCode::precondition_violation, "union_cover: system must be invertible");
  if (!sys.ergodic()) throw Error(ErrorCode::precondition_violation, "union_cover: system must be ergodic");
  if (!(delta > 0 && delta < 1)) throw Error(ErrorCode::invalid_argument, "union_cover: delta must lie in (0,1)");
  if (!std::holds_alternative<IntervalUnion>(b.v) && !std::holds_alternative<Cylinder>(b.v) &&
      !std::holds_alternative<CylinderUnion>(b.v)) {
    throw Error(ErrorCode::unsupported_set, "union_cover: set is not exactly representable");
  }
  if (sys.measure(b) == 0) throw Error(ErrorCode::invalid_argument, "union_cover: set has measure zero");
  const Rational target = 1 - delta;
  std::uint64_t hi = 1;
  Rational m_hi = image_union_measure(sys, b, hi);
  while (!(m_hi > target)) {
    if (hi >= max_k) throw Error(ErrorCode::resource, "union_cover: no cover within the search budget");
    hi = std::min(hi * 2, max_k);
    m_hi = image_union_measure(sys, b, hi);
  }
  std::uint64_t lo = hi / 2;  // fails (or 0)
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    const Rational m = image_union_measure(sys, b, mid);
    if (m > target) {
      hi = mid;
      m_hi = m;
    } else {
      lo = mid;
    }
  }
  CoverResult out;
  out.k = hi;
  out.measure = m_hi;
  out.previous_measure = hi > 1 ? image_union_measure(sys, b, hi - 1) : Rational(0);
  out.cover = image_union(sys, b, hi);
  return out;
}

PsiResult psi_average_check(const System& sys, const MeasurableSet& b, std::uint64_t k, const std::vector<Point>& ys,
                            double delta1, const Checkpoints& grid) {
  validate_checkpoints(grid);
  const MeasurableSet cover = image_union(sys, b, k);
  const Observable psi = Observable::indicator(cover);
  PsiResult r;
  r.bound = delta1 / 4.0;
  r.deviations.resize(ys.size());
  parallel_for(ys.size(), [&](std::size_t i) {
    const auto rep = birkhoff_average(sys, ys[i], psi, grid);
    for (const auto& a : rep.averages) r.deviations[i].push_back(std::abs(a - 1.0));
  });
  std::size_t good = 0;
  int worst = -1;
  for (const auto& dev : r.deviations) {
    int last = -1;
    for (std::size_t j = 0; j < dev.size(); ++j)
      if (!(dev[j] < r.bound)) last = static_cast<int>(j);
    const bool ok = last < static_cast<int>(dev.size()) - 1;
    r.last_bad.push_back(last);
    r.good.push_back(ok);
    if (ok) {
      ++good;
      worst = std::max(worst, last);
    }
  }
  r.g_fraction = ys.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(ys.size());
  r.m0 = grid[static_cast<std::size_t>(std::max(0, worst))];
  return r;
}

}  // namespace ergolab
