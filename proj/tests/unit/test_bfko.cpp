#include <gtest/gtest.h>

#include "ergolab/bfko.hpp"
#include "ergolab/error.hpp"
#include "ergolab/random.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

std::vector<std::int32_t> random_bits(std::size_t n, std::uint64_t seed, double p_one = 0.5) {
  std::vector<std::int32_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = uniform01(seed, static_cast<std::int64_t>(i)) < p_one ? 1 : 0;
  return out;
}

const std::vector<Complex> kPm = {-1.0, 1.0};

// A small relaxed stack: two layers over random +-1 symbols.
struct SmallStack {
  LayerConstants k;
  LayerStack stack;
};

SmallStack small_stack(std::uint64_t n = 20000) {
  SmallStack s;
  s.k.j_count = 2;
  s.k.a = 0.9;
  s.k.c = 0.5;
  s.k.delta = 0.45;
  s.k.delta1 = 0.03;
  s.k.delta2 = 0.004;
  s.k.k = 2;
  s.k.windows = {{30, 33}, {200, 203}};
  s.k.n = n;
  const auto series = random_bits(4000, 5);
  std::vector<std::uint64_t> lags;
  for (std::uint64_t m = 1; m <= 203; ++m) lags.push_back(m);
  const auto family = collect_shift_blocks(kPm, series, lags, 31, 33);
  const auto visits = VisitPattern::synthetic(n, s.k.windows, s.k.k, 0.9, 17);
  const std::vector<std::int32_t> reference(series.begin(), series.begin() + 203);
  s.stack = build_layers(s.k, visits, kPm, reference, family, {true});
  return s;
}

}  // namespace

TEST(Certificate, FindsPlateauWindows) {
  const auto f = oscillating_series(8, 1 << 14, 0.9, 0.05, 3);
  const auto cert = find_bad_intervals(f, 3, {10, 100, 1000});
  EXPECT_NEAR(cert.a, 0.9, 1e-12);
  EXPECT_LT(cert.a, 0.9);
  ASSERT_EQ(cert.intervals.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_GT(cert.intervals[j].first, cert.thresholds[j]);
    if (j > 0) {
      EXPECT_GT(cert.intervals[j].first, cert.intervals[j - 1].second);
    }
  }
  EXPECT_TRUE(verify_certificate(cert, f).empty());
}

TEST(Certificate, TamperedWitnessIsReported) {
  const auto f = oscillating_series(8, 1 << 14, 0.9, 0.05, 3);
  auto cert = find_bad_intervals(f, 2, {10, 100});
  cert.witnesses[0][1] = cert.intervals[1].second + 5;
  EXPECT_FALSE(verify_certificate(cert, f).empty());
}

TEST(Certificate, ConvergentSeriesHasNoDivergence) {
  std::vector<std::vector<Complex>> f(4, std::vector<Complex>(4096, 0.0));
  try {
    find_bad_intervals(f, 2, {10, 100});
    FAIL() << "expected no_divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_divergence);
  }
}

TEST(Family, TrieAndWindowsAgreeWithNaiveSearch) {
  const auto series = random_bits(3000, 9);
  const std::vector<std::uint64_t> lags = {1, 5, 17, 200, 999};
  const auto fam = collect_shift_blocks(kPm, series, lags, 10, 41);
  ASSERT_TRUE(fam.windowed());
  EXPECT_EQ(fam.word_length(), 40u);
  GoodBlockFamily trie(kPm, 10, 41);
  for (auto m : lags) trie.insert(series.data() + m, 40);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t len = 1 + hash64(1, t) % 45;
    std::vector<std::int32_t> word;
    if (t % 2) {
      const auto m = lags[hash64(2, t) % lags.size()];
      word.assign(series.begin() + static_cast<std::ptrdiff_t>(m), series.begin() + static_cast<std::ptrdiff_t>(m + len));
    } else {
      word = random_bits(len, 100 + t);
    }
    const bool want = oracle::occurs_at_some_start(series, lags, word, 40);
    ASSERT_EQ(fam.contains(word.data(), word.size()), want);
    ASSERT_EQ(trie.contains(word.data(), word.size()), want);
  }
  for (std::size_t n : {1u, 3u, 10u, 40u}) EXPECT_EQ(fam.count(n), trie.count(n));
  EXPECT_THROW(const_cast<GoodBlockFamily&>(fam).insert(series.data(), 5), Error);
}

TEST(Family, SymbolSeriesNeedsSimpleObservable) {
  const System d = System::doubling(1);
  EXPECT_THROW(symbol_series(d, d.sample(0), Observable::coordinate(), 10), Error);
  const auto ids = symbol_series(d, d.sample(0), Observable::bit_window(0, 1, {-1, 1}), 10);
  EXPECT_EQ(ids.size(), 10u);
}

TEST(Family, ShiftSelectionAndDensity) {
  const System b = System::bernoulli(Rational(1, 2), 1);
  const auto f = Observable::bit_window(0, 1, {-1, 1});
  const auto ids = symbol_series(b, b.sample(0), f, 20000);
  std::vector<Complex> v;
  for (auto id : ids) v.push_back(kPm[static_cast<std::size_t>(id)]);
  const auto sel = select_shift_references(v, 100, geometric_checkpoints(1024, 8192), 0.2, 0.05);
  EXPECT_EQ(sel.verdict, Verdict::converged);
  EXPECT_GE(sel.selected.size(), 95u);
  std::vector<std::uint64_t> lags;
  for (auto i : sel.selected) lags.push_back(i + 1);
  const auto fam = collect_shift_blocks(kPm, ids, lags, 5, 9);
  const auto dens = good_density(ids, fam, geometric_checkpoints(64, 8192), 0.01);
  // 256 words of length 8 against ~100 references: roughly a third are good
  EXPECT_GT(dens.density.back(), 0.1);
  EXPECT_LT(dens.density.back(), 0.7);
}

TEST(Constraints, MinimalFeasibleN) {
  // L_1 > 4(K+1)/delta' = 400, M_1 = L_1 + 2, L_2 > M_1 / delta'' with
  // delta'' just under delta'/(2(K+1)), N > 4 M_2 / delta'
  const auto n2 = minimal_feasible_n(2, 0.02, 1);
  EXPECT_GT(n2, BigInt(16000000));
  EXPECT_LT(n2, BigInt(16500000));
  EXPECT_GT(minimal_feasible_n(3, 0.01, 1), n2);
  EXPECT_GT(minimal_feasible_n(2, 0.02, 1, 5000), n2);
}

TEST(Constraints, FeasibleChainPassesAndShortHorizonFails) {
  LayerConstants c;
  c.j_count = 2;
  c.a = 0.9;
  c.c = 0.5;
  c.delta = 0.4;
  c.delta1 = 0.02;
  c.delta2 = 0.004;
  c.k = 1;
  c.windows = {{500, 503}, {130000, 130003}};
  c.n = 40000000;
  for (const auto& v : check_constraints(c)) ADD_FAILURE() << v.name << ": " << v.detail;
  c.n = 100000;
  const auto v = check_constraints(c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].name, "horizon");
  c.delta = 0.6;
  EXPECT_GE(check_constraints(c).size(), 2u);
}

TEST(Layers, StrictModeRejectsInfeasibleConstants) {
  auto s = small_stack();
  EXPECT_FALSE(s.stack.violations.empty());
  EXPECT_TRUE(s.stack.relaxed);
  const auto visits = VisitPattern::synthetic(s.k.n, s.k.windows, s.k.k, 0.9, 17);
  try {
    build_layers(s.k, visits, kPm, std::vector<std::int32_t>(203, 0), GoodBlockFamily(kPm, 31, 33));
    FAIL() << "expected precondition_violation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::precondition_violation);
  }
}

TEST(Layers, RelaxedStackPassesAudit) {
  const auto s = small_stack();
  const auto& st = s.stack;
  const auto au = audit_layers(st);
  for (const auto& i : au.issues) ADD_FAILURE() << i.kind << " layer " << i.layer << " at " << i.at << ": " << i.detail;
  EXPECT_GT(st.density(1), 0.8);
  EXPECT_EQ(st.exact_density(2), Rational(BigInt(st.layers[1].covered), BigInt(st.constants.n)));
  // each interval starts at a visit
  for (const auto& layer : st.layers)
    for (const auto& iv : layer.intervals) ASSERT_TRUE(st.in_b[iv.l]);
}

TEST(Layers, PlantedViolationsAreLocated) {
  {
    auto s = small_stack();
    auto& iv = s.stack.layers[0].intervals[10];
    const auto parent_end = [&] {
      for (const auto& p : s.stack.layers[1].intervals)
        if (p.l <= iv.l && iv.m <= p.m) return p.m;
      return std::uint64_t{0};
    }();
    const auto shift = parent_end - iv.m + 1;
    iv.l += shift;
    iv.m += shift;
    const auto au = audit_layers(s.stack);
    ASSERT_FALSE(au.pass());
    bool found = false;
    for (const auto& i : au.issues) found = found || (i.kind == "nesting" && i.at == iv.l && i.layer == 1);
    EXPECT_TRUE(found);
    EXPECT_THROW(density_audit(s.stack), Error);
  }
  {
    auto s = small_stack();
    const auto n = s.stack.layers[1].intervals[3].l + 7;
    s.stack.layers[1].c[n] = 1 - s.stack.layers[1].c[n];
    const auto au = audit_layers(s.stack);
    ASSERT_EQ(au.issues.size(), 1u);
    EXPECT_EQ(au.issues[0].kind, "sequence");
    EXPECT_EQ(au.issues[0].at, n);
  }
}

TEST(AlphaBeta, OrthogonalBlocksAndPositiveCorrelation) {
  const std::size_t n = 4096;
  std::vector<std::vector<Complex>> layers(2, std::vector<Complex>(n));
  std::vector<Complex> g(n, 1.0);
  for (std::size_t t = 0; t < n; ++t) {
    layers[0][t] = 1.0;
    layers[1][t] = (t % 2) ? 1.0 : 0.6;
  }
  const auto ab = alpha_beta_check(layers, g, 0.9, 0.25);
  EXPECT_NEAR(ab.alpha[0][1], 0.8, 1e-12);
  EXPECT_FALSE(ab.alpha_pass);
  EXPECT_TRUE(ab.beta_pass);
}

TEST(Chain, ThresholdIsExact) {
  EXPECT_TRUE(beyond_threshold(5, 0.9, 1.0, 1.0));   // 4.05 > 4
  EXPECT_FALSE(beyond_threshold(4, 0.9, 1.0, 1.0));  // 3.24 < 4
  EXPECT_FALSE(beyond_threshold(16, 0.5, 1.0, 1.0));  // 4 = 4
  EXPECT_TRUE(beyond_threshold(17, 0.5, 1.0, 1.0));
}
