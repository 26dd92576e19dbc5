// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance              run all criteria, exit 0 iff all pass
//   acceptance --criterion N

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "ergolab/averaging.hpp"
#include "ergolab/bfko.hpp"
#include "ergolab/error.hpp"
#include "ergolab/experiment.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/random.hpp"
#include "ergolab/spectral.hpp"
#include "oracles.hpp"

using namespace ergolab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Observable half_indicator() { return Observable::indicator(MeasurableSet::arc(0, 0.5)); }

// 1 -----------------------------------------------------------------------
Outcome birkhoff_weyl() {
  const auto t0 = Clock::now();
  const System rot = System::rotation(Angle::golden(), 1);
  std::vector<Point> xs;
  for (std::uint64_t s = 0; s < 32; ++s) xs.push_back(rot.sample(derive_seed(1001, s)));
  const auto reports = birkhoff_batch(rot, xs, half_indicator(), checkpoints_up_to(1000000));
  const double secs = seconds_since(t0);
  double worst = 0;
  for (const auto& r : reports) worst = std::max(worst, std::abs(r.limit_estimate - 0.5));
  // independent long-double orbit for the first start point
  const long double x0 = std::get<CircleCoord>(xs[0].v).value.to_long_double();
  const double naive = oracle::rotation_indicator_average(oracle::golden(), x0, 0, 0.5, 1000000);
  const double gap = std::abs(naive - reports[0].limit_estimate.real());
  const bool pass = worst <= 1e-3 && secs < 5.0 && gap <= 1e-5;
  return {pass, "max |A_N - 1/2| = " + fmt(worst) + " (<= 1e-3) over 32 seeds, N = 1e6, " + fmt(secs) +
                    " s (< 5 s); long-double oracle gap " + fmt(gap)};
}

// 2 -----------------------------------------------------------------------
Outcome return_times() {
  const System rot = System::rotation(Angle::golden(), 21);
  const System dbl = System::doubling(22);
  const auto g = Observable::first_bit();
  const auto b = MeasurableSet::arc(0, 0.5);
  const Checkpoints cps = checkpoints_up_to(1000000);
  std::vector<ConvergenceReport> reports(32);
  parallel_for(32, [&](std::size_t i) {
    const auto w = WeightSequence::return_times(rot, rot.sample(derive_seed(2001, i)), b, cps.back());
    reports[i] = weighted_average(w, dbl, dbl.sample(derive_seed(2002, i)), g, cps);
  });
  // oracle: one 1e7-step reference run
  const auto wref = WeightSequence::return_times(rot, rot.sample(derive_seed(2003, 0)), b, 10000000);
  const auto ref = weighted_average(wref, dbl, dbl.sample(derive_seed(2004, 0)), g, {10000000});
  const double oracle_value = ref.averages.back().real();
  double osc = 0, err = 0;
  for (const auto& r : reports) {
    osc = std::max(osc, r.tail_oscillation);
    err = std::max(err, std::abs(r.limit_estimate - 0.25));
  }
  const bool pass = osc <= 1e-2 && err <= 5e-3 && std::abs(oracle_value - 0.25) <= 1e-3;
  return {pass, "max tail oscillation " + fmt(osc) + " (<= 1e-2), max |limit - 0.25| " + fmt(err) +
                    " (<= 5e-3) over 32 pairs; 1e7-step oracle " + fmt(oracle_value)};
}

// 3 -----------------------------------------------------------------------
Outcome wiener_dichotomy() {
  // (a) atomic
  const System rot = System::rotation(Angle::golden(), 31);
  const auto chi = Observable::character(1);
  std::vector<Point> rx;
  for (std::uint64_t i = 0; i < 8; ++i) rx.push_back(rot.sample(derive_seed(3001, i)));
  const auto ea = autocorrelation(rot, chi, 64, 100000, rx);
  double dev = 0;
  for (double w : ea.wiener_means) dev = std::max(dev, std::abs(w - 1.0));
  std::vector<std::pair<Point, Point>> rpairs;
  for (std::size_t i = 0; i + 1 < rx.size(); i += 2) rpairs.emplace_back(rx[i], rx[i + 1]);
  const auto pa = pair_correlation_test(rot, chi, rpairs, checkpoints_up_to(100000));
  // (b) continuous
  const System dbl = System::doubling(41);
  const auto f = simple_approx(Observable::centered_first_bit(), 4);
  std::vector<Point> dx;
  for (std::uint64_t i = 0; i < 8; ++i) dx.push_back(dbl.sample(derive_seed(3002, i)));
  const auto eb = autocorrelation(dbl, f, 64, 1000000, {dx[0], dx[1]});
  std::vector<std::pair<Point, Point>> dpairs;
  for (std::size_t i = 0; i + 1 < dx.size(); i += 2) dpairs.emplace_back(dx[i], dx[i + 1]);
  const auto pb = pair_correlation_test(dbl, f, dpairs, checkpoints_up_to(1000000));
  const double wb = eb.wiener_means.back();
  const bool pass = dev <= 1e-9 && ea.wiener.verdict == Continuity::atomic && wb <= 1e-2 &&
                    eb.wiener_grid.back() == 64 && eb.wiener.verdict == Continuity::continuous &&
                    verdicts_agree(ea.wiener, pa) && verdicts_agree(eb.wiener, pb);
  return {pass, "(a) max |W_M - 1| = " + fmt(dev) + " (<= 1e-9), " + std::string(to_string(ea.wiener.verdict)) +
                    "; (b) W_64 = " + fmt(wb) + " (<= 1e-2) at L = 1e6, " +
                    std::string(to_string(eb.wiener.verdict)) + "; pair tests agree: " +
                    (verdicts_agree(ea.wiener, pa) && verdicts_agree(eb.wiener, pb) ? "yes" : "no")};
}

// 4 -----------------------------------------------------------------------
Outcome pair_correlation() {
  const System dbl = System::doubling(51);
  const auto f = Observable::centered_first_bit();
  std::vector<std::pair<Point, Point>> pairs;
  for (std::uint64_t i = 0; i < 32; ++i)
    pairs.emplace_back(dbl.sample(derive_seed(4001, i)), dbl.sample(derive_seed(4002, i)));
  const std::uint64_t n = 1000000;
  const double bound = 5.0 / std::sqrt(static_cast<double>(n));
  const auto r = pair_correlation_test(dbl, f, pairs, {n}, bound);
  int within = 0;
  double worst = 0;
  for (const auto& rep : r.reports) {
    const double v = std::abs(rep.averages.back());
    worst = std::max(worst, v);
    within += v <= bound ? 1 : 0;
  }
  return {within >= 31, std::to_string(within) + "/32 pairs with |A_N| <= 5 N^-1/2 = " + fmt(bound) +
                            " at N = 1e6 (need 31); max |A_N| = " + fmt(worst)};
}

// 5 -----------------------------------------------------------------------
Outcome natural_extension_check() {
  int squares = 0, bad_squares = 0, cylinders = 0, bad_cylinders = 0;
  for (const System& base : {System::doubling(61), System::bernoulli(Rational(1, 3), 62)}) {
    const auto ext = natural_extension(base);
    for (std::uint64_t i = 0; i < 1000; ++i) {
      Point x = ext.system.sample(derive_seed(5001, i));
      Point y = ext.project(x);
      ext.system.step(x);
      base.step(y);
      ++squares;
      bad_squares += ext.project(x) == y ? 0 : 1;
    }
    for (std::uint64_t i = 0; i < 200; ++i) {
      Cylinder c;
      c.offset = static_cast<std::int64_t>(hash64(5002, i) % 11) - 5;
      const auto len = 1 + hash64(5003, i) % 6;
      for (std::uint64_t k = 0; k < len; ++k) c.word.push_back(static_cast<int>(hash64(5004, i * 16 + k) % 2));
      const MeasurableSet s{c};
      const Rational m = ext.system.measure(s);
      ++cylinders;
      for (std::int64_t j : {1, 3, -2}) bad_cylinders += ext.system.measure(ext.system.preimage(s, j)) == m ? 0 : 1;
    }
  }
  const bool pass = bad_squares == 0 && bad_cylinders == 0;
  return {pass, std::to_string(squares - bad_squares) + "/" + std::to_string(squares) +
                    " commuting squares exact; " + std::to_string(cylinders) +
                    " cylinders with T^-j measure equal in rational arithmetic (" + std::to_string(bad_cylinders) +
                    " mismatches)"};
}

// 6 -----------------------------------------------------------------------
Outcome decomposition() {
  const System c0 = System::rotation(Angle::golden(), 62);
  const System c1 = System::rotation(Angle::silver(), 63);
  const System u = System::disjoint_union({{Rational(3, 10), c0}, {Rational(7, 10), c1}}, 61);
  const std::vector<MeasurableSet> sets = {MeasurableSet::tagged(0, MeasurableSet::arc(0, 0.25)),
                                           MeasurableSet::tagged(1, MeasurableSet::arc(0.2, 0.7)),
                                           {ComponentSet::of({0})}};
  const std::vector<std::vector<double>> means = {{0.25, 0.0}, {0.0, 0.5}, {1.0, 0.0}};
  double worst = 0;
  bool exact = true;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto h = Observable::indicator(sets[s]);
    for (int comp = 0; comp < 2; ++comp) {
      const System& part = comp == 0 ? c0 : c1;
      std::vector<Point> xs;
      for (std::uint64_t i = 0; i < 8; ++i)
        xs.push_back(Point::tagged(comp, part.sample(derive_seed(6001 + comp, i))));
      for (const auto& r : birkhoff_batch(u, xs, h, checkpoints_up_to(1000000)))
        worst = std::max(worst, std::abs(r.limit_estimate - means[s][static_cast<std::size_t>(comp)]));
    }
    const Rational whole = u.measure(sets[s]);
    Rational parts = 0;
    if (const auto* t = std::get_if<TaggedSet>(&sets[s].v)) {
      parts = (t->component == 0 ? Rational(3, 10) * c0.measure(*t->inner) : Rational(7, 10) * c1.measure(*t->inner));
    } else {
      parts = Rational(3, 10);
    }
    exact = exact && whole == parts;
  }
  return {worst <= 1e-3 && exact, "max |A_N - component mean| = " + fmt(worst) +
                                      " (<= 1e-3) over 2 components x 8 points x 3 indicators; formula exact: " +
                                      (exact ? "yes" : "no")};
}

// 7 -----------------------------------------------------------------------
Outcome cover() {
  const System rot = System::rotation(Angle::golden(), 71);
  const auto b = MeasurableSet::arc(0, 0.5);
  const Rational delta(1, 10);
  const auto r = union_cover(rot, b, delta);
  const Rational m2 = image_union_measure(rot, b, 2);
  const Rational m3 = image_union_measure(rot, b, 3);
  const bool pass = r.k == 3 && m3 > 1 - delta && !(m2 > 1 - delta);
  return {pass, "K = " + std::to_string(r.k) + "; measure with 2 images = " + to_string(m2) + " (~" +
                    fmt(to_double(m2)) + ", not > 9/10), with 3 = ~" + fmt(to_double(m3)) + " (> 9/10)"};
}

// 8 -----------------------------------------------------------------------
struct StackCase {
  std::size_t j;
  double delta1;
};

Outcome layer_suite() {
  const std::vector<Complex> pm = {-1.0, 1.0};
  const std::uint64_t n = 100000;
  const std::uint64_t k = 1;
  bool all = true;
  std::string detail;
  for (const auto& sc : {StackCase{2, 0.02}, StackCase{3, 0.01}, StackCase{5, 0.005}}) {
    const auto t0 = Clock::now();
    LayerConstants c;
    c.j_count = sc.j;
    c.a = 0.9;
    c.c = 0.5;
    c.delta = 0.45;
    c.delta1 = sc.delta1;
    c.delta2 = sc.delta1 / (2.0 * (k + 1)) / 1.25;
    c.k = k;
    c.n = n;
    // windows that fit N: each parent holds two children plus one spare slot
    std::uint64_t w = 60;
    for (std::size_t j = 0; j < sc.j; ++j) {
      c.windows.push_back({w - 1, w + 1});
      w = 2 * (w + 1) + 1;
    }
    const auto series = [&] {
      std::vector<std::int32_t> s(2 * c.windows.back().second + 8);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = uniform01(8001, static_cast<std::int64_t>(i)) < 0.5 ? 0 : 1;
      return s;
    }();
    std::vector<std::uint64_t> lags;
    for (std::uint64_t m = 1; m <= c.windows.back().second; ++m) lags.push_back(m);
    const std::uint64_t hi = sc.j >= 2 ? c.windows[sc.j - 2].second : c.windows[0].second;
    const auto family = collect_shift_blocks(pm, series, lags, c.windows[0].first, hi);
    const std::vector<std::int32_t> reference(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(c.windows.back().second));
    const auto visits = VisitPattern::synthetic(n, c.windows, k, 0.99, 8002 + sc.j);

    std::string strict = "strict build ok";
    bool strict_ok = true;
    try {
      build_layers(c, visits, pm, reference, family);
    } catch (const Error& e) {
      strict_ok = false;
      std::string names;
      for (const auto& v : check_constraints(c)) names += (names.empty() ? "" : ",") + v.name;
      strict = "strict build rejected [" + names + "]; minimal feasible N = " +
               minimal_feasible_n(sc.j, sc.delta1, k).str();
    }
    const auto st = build_layers(c, visits, pm, reference, family, {true});
    const auto au = audit_layers(st);
    const double floor_p1 = 1.0 - static_cast<double>(sc.j * (sc.j + 1) / 2) * sc.delta1;
    const double p1 = st.density(1);

    // planted violations: a displaced interval and a corrupted c-value
    bool located = true;
    {
      auto bad = st;
      auto& iv = bad.layers[0].intervals[bad.layers[0].intervals.size() / 2];
      std::uint64_t parent_end = 0;
      for (const auto& p : bad.layers[std::min<std::size_t>(1, sc.j - 1)].intervals)
        if (p.l <= iv.l && iv.m <= p.m) parent_end = p.m;
      const std::uint64_t shift = sc.j >= 2 ? parent_end - iv.m + 1 : n;
      if (sc.j >= 2) {
        iv.l += shift;
        iv.m += shift;
        const auto a = audit_layers(bad);
        bool hit = false;
        for (const auto& i : a.issues) hit = hit || (i.kind == "nesting" && i.at == iv.l);
        located = located && hit;
      }
      auto bad2 = st;
      const auto pos = bad2.layers[sc.j - 1].intervals.front().l + 3;
      bad2.layers[sc.j - 1].c[pos] = 1 - bad2.layers[sc.j - 1].c[pos];
      const auto a2 = audit_layers(bad2);
      located = located && !a2.pass() && a2.issues.front().kind == "sequence" && a2.issues.front().at == pos;
    }
    const double secs = seconds_since(t0);
    const bool ok = strict_ok && au.pass() && p1 > floor_p1 && located && secs < 10.0;
    all = all && ok;
    detail += (detail.empty() ? "" : " | ") + std::string("J=") + std::to_string(sc.j) + ", delta'=" +
              fmt(sc.delta1) + ": " + strict + "; relaxed audit " + (au.pass() ? "pass" : "fail") + ", p1 = " +
              fmt(p1) + " (floor " + fmt(floor_p1) + "), planted violations " + (located ? "located" : "missed") +
              ", " + fmt(secs) + " s";
  }
  return {all, detail};
}

// 9 -----------------------------------------------------------------------
Outcome contradiction_mechanics() {
  const std::vector<double> as = {0.5, 0.8, 0.9};
  const std::vector<std::pair<double, double>> norms = {{1.0, 1.0}, {1.5, 1.0}, {1.0, 2.0}};
  const std::size_t n = 1 << 16;
  int cases = 0, right = 0, verified = 0;
  std::string misses;
  for (double a : as) {
    for (auto [fs_, gs] : norms) {
      const double threshold = 4 * fs_ * fs_ * gs * gs / (a * a);
      const auto ceil_t = static_cast<std::size_t>(std::ceil(threshold));
      // g = |g| s_n; c^j = s_n (u + v r^j_n) with beta ~ |g| u = a and alpha ~ u^2
      const double u = a / gs, v = fs_ - u;
      const double delta = (u * u + a) / 2;
      std::vector<Complex> g(n);
      for (std::size_t t = 0; t < n; ++t) g[t] = gs * (hash64(9001, t) % 2 ? 1.0 : -1.0);
      for (std::size_t j : {ceil_t - 1, ceil_t, ceil_t + 1}) {
        std::vector<std::vector<Complex>> layers(j, std::vector<Complex>(n));
        for (std::size_t l = 0; l < j; ++l)
          for (std::size_t t = 0; t < n; ++t) {
            const double r = hash64(derive_seed(9002, l), t) % 2 ? 1.0 : -1.0;
            layers[l][t] = (g[t].real() / gs) * (u + v * r);
          }
        const auto ab = alpha_beta_check(layers, g, a, delta);
        const auto res = contradiction_chain(ab, layers, g, {j, a, delta, fs_, gs});
        const bool want = static_cast<double>(j) > threshold;
        ++cases;
        verified += ab.pass() ? 1 : 0;
        const bool ok = ab.pass() && (res.verdict == ChainVerdict::contradiction) == want;
        right += ok ? 1 : 0;
        if (!ok) misses += " (a=" + fmt(a) + ",|f|=" + fmt(fs_) + ",|g|=" + fmt(gs) + ",J=" + std::to_string(j) + ")";
      }
    }
  }
  return {right == cases, std::to_string(right) + "/" + std::to_string(cases) +
                              " verdicts match J > 4|f|^2|g|^2/a^2 on the 3x3 grid with J = ceil(T)-1, ceil(T), "
                              "ceil(T)+1; alpha/beta verified in " +
                              std::to_string(verified) + misses};
}

// 10 ----------------------------------------------------------------------
Outcome approximation() {
  const System rot = System::rotation(Angle::golden(), 101);
  const System dbl = System::doubling(102);
  const auto f_rot = Observable::character_sum({{1, Complex(0.6, 0.2)}, {-3, Complex(-0.1, 0.3)}});
  const auto f_dbl = Observable::bit_window(0, 3, {-0.9, -0.4, 0.1, 0.33, 0.5, 0.71, 0.8, 0.95});
  double worst_ratio = 0;
  std::uint64_t checked = 0;
  for (std::uint64_t k : {4u, 10u, 100u}) {
    for (const auto& [sys, f] : {std::pair{rot, f_rot}, std::pair{dbl, f_dbl}}) {
      const auto fk = simple_approx(f, k);
      for (std::uint64_t i = 0; i < 100000; ++i) {
        const Point x = sys.sample(derive_seed(10001 + k, i));
        worst_ratio = std::max(worst_ratio, std::abs(f(x) - fk(x)) * static_cast<double>(k) / 2.0);
        ++checked;
      }
    }
  }
  const auto g = Observable::power(-0.5);
  double worst_l1 = 0;
  for (double k : {4.0, 10.0, 100.0}) {
    const auto gk = truncate(g, k);
    // y = t^2, dy = 2t dt; the integrand is smooth in t
    const auto integrand = [&](double t) {
      if (t <= 0) return 0.0;
      const Point y = Point::circle(Fixed::from_double(t * t));
      return 2 * t * std::abs(g(y) - gk(y));
    };
    const double kink = 1.0 / k;
    const double q = oracle::gauss_legendre(integrand, 0, kink, 2000) + oracle::gauss_legendre(integrand, kink, 1, 2000);
    worst_l1 = std::max(worst_l1, std::abs(q - 1.0 / k));
  }
  const bool pass = worst_ratio <= 1.0 && worst_l1 <= 1e-6;
  return {pass, "max |f - f_k| / (2/k) = " + fmt(worst_ratio) + " over " + std::to_string(checked) +
                    " samples (k = 4, 10, 100); max |quadrature of |g - g_k| - 1/k| = " + fmt(worst_l1) +
                    " (<= 1e-6)"};
}

// 11 ----------------------------------------------------------------------
Outcome reproducibility() {
  const fs::path configs = ERGOLAB_CONFIG_DIR;
  const fs::path scratch = fs::temp_directory_path() / "ergolab_acceptance_repro";
  bool all = true;
  std::string detail;
  for (const char* name : {"birkhoff_rotation", "return_times", "cover", "spectral_doubling", "bfko_pipeline"}) {
    auto j = read_json(configs / (std::string(name) + ".json"));
    j["output_dir"] = scratch.string();
    const auto cfg = parse_config(j);
    fs::remove_all(scratch);
    std::vector<std::vector<std::uint8_t>> first;
    std::vector<fs::path> files;
    ::setenv("ERGOLAB_THREADS", "1", 1);
    for (const auto& f : run(cfg).files) {
      files.push_back(f);
      first.push_back(read_bytes(f));
    }
    ::setenv("ERGOLAB_THREADS", "4", 1);
    const auto second = run(cfg);
    ::unsetenv("ERGOLAB_THREADS");
    bool same = second.files == files;
    for (std::size_t i = 0; same && i < files.size(); ++i) same = read_bytes(files[i]) == first[i];
    all = all && same;
    detail += (detail.empty() ? "" : ", ") + std::string(name) + " " + std::to_string(files.size()) + " files " +
              (same ? "identical" : "DIFFER");
  }
  fs::remove_all(scratch);
  return {all, detail + " (threads 1 vs 4)"};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"birkhoff-weyl", birkhoff_weyl},
    {"return-time-weights", return_times},
    {"wiener-dichotomy", wiener_dichotomy},
    {"pair-correlation", pair_correlation},
    {"natural-extension", natural_extension_check},
    {"ergodic-decomposition", decomposition},
    {"union-cover", cover},
    {"layer-suite", layer_suite},
    {"contradiction-mechanics", contradiction_mechanics},
    {"approximation", approximation},
    {"reproducibility", reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> which;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      which.push_back(static_cast<std::size_t>(std::atoi(argv[++i])));
    } else {
      std::cerr << "usage: acceptance [--criterion N]...\n";
      return 64;
    }
  }
  if (which.empty())
    for (std::size_t i = 1; i <= kCriteria.size(); ++i) which.push_back(i);
  bool all = true;
  for (auto idx : which) {
    if (idx < 1 || idx > kCriteria.size()) {
      std::cerr << "no criterion " << idx << "\n";
      return 64;
    }
    const auto& [name, fn] = kCriteria[idx - 1];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << idx << " " << name << ": " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
