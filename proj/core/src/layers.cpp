#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergolab/bfko.hpp"
#include "ergolab/error.hpp"
#include "ergolab/random.hpp"

namespace ergolab {

namespace {

Rational q(double v) { return exact_rational(v); }
Rational q(std::uint64_t v) { return Rational(BigInt(v)); }

BigInt floor_of(const Rational& r) {
  return boost::multiprecision::numerator(r) / boost::multiprecision::denominator(r);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<ConstraintViolation> check_constraints(const LayerConstants& k) {
  std::vector<ConstraintViolation> out;
  auto fail = [&](std::string name, std::string detail) { out.push_back({std::move(name), std::move(detail)}); };
  const std::size_t j_count = k.j_count;
  if (j_count == 0) {
    fail("layer-count", "J must be positive");
    return out;
  }
  if (k.windows.size() != j_count) {
    fail("window-count", "need one window (L_j, M_j) per layer");
    return out;
  }
  if (!(k.delta1 > 0) || !(k.delta2 > 0) || !(k.a > 0) || !(k.delta > 0)) {
    fail("positivity", "a, delta, delta' and delta'' must be positive");
    return out;
  }
  const Rational jj(static_cast<long long>(j_count));
  const Rational tri = jj * (jj + 1) / 2;
  if (!(tri * q(k.delta1) * q(k.a) < q(k.delta))) {
    fail("triangular-sum", "J(J+1)/2 delta' < delta / a fails: " + to_string(tri * q(k.delta1)) + " vs " +
                               num(k.delta / k.a));
  }
  if (!(q(k.delta) < q(k.c) && q(k.delta) < q(k.a))) {
    fail("delta-range", "0 < delta < min(c, a) fails: delta=" + num(k.delta) + " c=" + num(k.c) + " a=" + num(k.a));
  }
  const Rational kk = q(k.k) + 1;
  if (!(q(k.delta2) * 2 * kk < q(k.delta1))) {
    fail("census-threshold", "delta'' < delta' / (2(K+1)) fails: delta''=" + num(k.delta2));
  }
  const auto l1 = k.windows.front().first;
  if (!(kk * 4 < q(k.delta1) * q(l1))) {
    fail("first-window", "(K+1)/L_1 < delta'/4 fails: L_1=" + std::to_string(l1) + " needs L_1 > " +
                             to_string(kk * 4 / q(k.delta1)));
  }
  if (!(l1 > k.m0)) fail("psi-start", "L_1 > M_0 fails: L_1=" + std::to_string(l1) + " M_0=" + std::to_string(k.m0));
  if (!(l1 > k.n_delta)) {
    fail("egorov-start", "L_1 > N_delta fails: L_1=" + std::to_string(l1) + " N_delta=" + std::to_string(k.n_delta));
  }
  for (std::size_t j = 0; j < j_count; ++j) {
    const auto [l, m] = k.windows[j];
    if (!(l + 1 < m)) fail("window-" + std::to_string(j + 1), "(L_j, M_j) contains no integer");
    if (j + 1 < j_count) {
      const auto lnext = k.windows[j + 1].first;
      if (!(m < lnext)) fail("window-order-" + std::to_string(j + 1), "M_j < L_{j+1} fails");
      if (!(q(m) < q(k.delta2) * q(lnext))) {
        fail("window-ratio-" + std::to_string(j + 1), "M_j / L_{j+1} < delta'' fails: M=" + std::to_string(m) +
                                                           " L=" + std::to_string(lnext) + " needs L > " +
                                                           to_string(q(m) / q(k.delta2)));
      }
    }
  }
  const auto mj = k.windows.back().second;
  if (!(q(mj) * 4 < q(k.delta1) * q(k.n))) {
    fail("horizon", "M_J / N < delta'/4 fails: M_J=" + std::to_string(mj) + " N=" + std::to_string(k.n) +
                        " needs N > " + to_string(q(mj) * 4 / q(k.delta1)));
  }
  return out;
}

BigInt minimal_feasible_n(std::size_t j_count, double delta1, std::uint64_t k, std::uint64_t m0,
                          std::uint64_t n_delta) {
  if (j_count == 0 || !(delta1 > 0)) throw Error(ErrorCode::invalid_argument, "minimal_feasible_n: bad input");
  const Rational d1 = q(delta1);
  const Rational kk = q(k) + 1;
  BigInt l = floor_of(kk * 4 / d1) + 1;
  l = std::max({l, BigInt(m0) + 1, BigInt(n_delta) + 1});
  BigInt m = l + 2;
  const Rational ratio = kk * 2 / d1;
  for (std::size_t j = 1; j < j_count; ++j) {
    l = floor_of(Rational(m) * ratio) + 1;
    m = l + 2;
  }
  return floor_of(Rational(m) * 4 / d1) + 1;
}

// ---------------------------------------------------------------------------
// visits

std::vector<std::uint8_t> VisitPattern::cover_flags(const std::vector<std::uint8_t>& in_b, std::uint64_t k) {
  std::vector<std::uint8_t> e(in_b.size(), 0);
  std::uint64_t last = 0;  // most recent visit index, 0 for none
  for (std::uint64_t n = 1; n < in_b.size(); ++n) {
    if (last > 0 && n - last <= k) e[n] = 1;
    if (in_b[n]) last = n;
  }
  return e;
}

VisitPattern VisitPattern::synthetic(std::uint64_t n, const std::vector<std::pair<std::uint64_t, std::uint64_t>>& windows,
                                     std::uint64_t k, double density, std::uint64_t seed) {
  for (const auto& [l, m] : windows)
    if (!(l + 1 < m)) throw Error(ErrorCode::invalid_argument, "synthetic visits: empty window");
  VisitPattern v;
  v.in_b.assign(n + 1, 0);
  for (std::uint64_t i = 1; i <= n; ++i) v.in_b[i] = uniform01(seed, i) < density ? 1 : 0;
  v.in_e = cover_flags(v.in_b, k);
  const std::uint64_t wseed = derive_seed(seed, 0x77);
  v.witness = [windows, wseed](std::size_t j, std::uint64_t l) -> std::uint64_t {
    const auto [lo, hi] = windows.at(j - 1);
    const std::uint64_t span = hi - lo - 1;
    return lo + 1 + hash64(derive_seed(wseed, j), l) % span;
  };
  return v;
}

VisitPattern VisitPattern::from_certificate(const BadIntervalCertificate& cert, std::vector<std::uint8_t> in_b,
                                            std::uint64_t k) {
  if (cert.retained.empty()) throw Error(ErrorCode::invalid_argument, "certificate retains no samples");
  VisitPattern v;
  v.in_e = cover_flags(in_b, k);
  v.in_b = std::move(in_b);
  auto w = cert.witnesses;
  v.witness = [w](std::size_t j, std::uint64_t l) -> std::uint64_t { return w[l % w.size()].at(j - 1); };
  return v;
}

// ---------------------------------------------------------------------------
// stack

Complex LayerStack::value(std::size_t j, std::uint64_t n) const {
  const auto id = layers.at(j - 1).c.at(n);
  return id < 0 ? Complex{} : alphabet[static_cast<std::size_t>(id)];
}

std::vector<Complex> LayerStack::sequence(std::size_t j) const {
  std::vector<Complex> out(constants.n);
  for (std::uint64_t n = 1; n <= constants.n; ++n) out[n - 1] = value(j, n);
  return out;
}

double LayerStack::density(std::size_t j) const {
  return static_cast<double>(layers.at(j - 1).covered) / static_cast<double>(constants.n);
}

Rational LayerStack::exact_density(std::size_t j) const {
  return Rational(BigInt(layers.at(j - 1).covered)) / Rational(BigInt(constants.n));
}

namespace {

void fill_layer(Layer& layer, std::uint64_t n_total, std::int32_t zero_id, const std::vector<std::int32_t>& reference) {
  layer.c.assign(n_total + 1, zero_id);
  layer.covered = 0;
  for (const auto& iv : layer.intervals) {
    for (std::uint64_t n = iv.l + 1; n <= iv.m; ++n) layer.c[n] = reference[n - iv.l];
    layer.covered += iv.length();
  }
}

double cover_fraction(const std::vector<std::uint8_t>& in_e) {
  if (in_e.size() <= 1) return 0.0;
  std::uint64_t c = 0;
  for (std::size_t i = 1; i < in_e.size(); ++i) c += in_e[i];
  return static_cast<double>(c) / static_cast<double>(in_e.size() - 1);
}

}  // namespace

LayerStack build_layers(const LayerConstants& constants, const VisitPattern& visits,
                        const std::vector<Complex>& alphabet, const std::vector<std::int32_t>& reference,
                        const GoodBlockFamily& family, const BuildOptions& options) {
  LayerStack st;
  st.constants = constants;
  st.relaxed = options.relaxed;
  st.violations = check_constraints(constants);
  if (!st.violations.empty() && !options.relaxed) {
    std::string msg = "build_layers: parameter constraints violated:";
    for (const auto& v : st.violations) msg += " [" + v.name + "] " + v.detail + ";";
    throw Error(ErrorCode::precondition_violation, msg);
  }
  const std::size_t jc = constants.j_count;
  if (jc == 0 || constants.windows.size() != jc) throw Error(ErrorCode::invalid_argument, "build_layers: bad J");
  const std::uint64_t n_total = constants.n;
  if (visits.in_b.size() != n_total + 1 || visits.in_e.size() != n_total + 1 || !visits.witness) {
    throw Error(ErrorCode::invalid_argument, "build_layers: visit flags must cover 1..N");
  }
  const std::uint64_t m_top = constants.windows.back().second;
  if (reference.size() < m_top) throw Error(ErrorCode::invalid_argument, "build_layers: reference series too short");
  if (jc >= 2 && family.word_length() + 1 < constants.windows[jc - 2].second) {
    throw Error(ErrorCode::invalid_argument, "build_layers: block family shorter than the lower windows");
  }
  for (const auto id : reference)
    if (id < -1 || id >= static_cast<std::int32_t>(alphabet.size()))
      throw Error(ErrorCode::invalid_argument, "build_layers: reference symbol out of range");

  st.alphabet = alphabet;
  st.zero_id = -1;
  for (std::size_t i = 0; i < alphabet.size(); ++i)
    if (alphabet[i] == Complex{}) st.zero_id = static_cast<std::int32_t>(i);
  st.reference.assign(1, st.zero_id);
  st.reference.insert(st.reference.end(), reference.begin(), reference.begin() + static_cast<std::ptrdiff_t>(m_top));
  st.in_b = visits.in_b;
  st.in_e = visits.in_e;
  st.layers.resize(jc);

  auto witness = [&](std::size_t j, std::uint64_t l) {
    const std::uint64_t w = visits.witness(j, l);
    const auto [lo, hi] = constants.windows[j - 1];
    if (!(lo < w && w < hi)) {
      throw Error(ErrorCode::invalid_argument, "build_layers: witness " + std::to_string(w) + " for layer " +
                                                   std::to_string(j) + " outside its window");
    }
    return w;
  };

  // top layer: greedy first visits
  {
    Layer& top = st.layers[jc - 1];
    std::uint64_t pos = 0;
    for (;;) {
      std::uint64_t l = pos + 1;
      while (l <= n_total && !st.in_b[l]) ++l;
      if (l > n_total) {
        if (top.intervals.empty()) {
          throw Error(ErrorCode::construction_failure,
                      "build_layers: no visit to B in 1..N; cover fraction " + num(cover_fraction(st.in_e)));
        }
        break;
      }
      const std::uint64_t w = witness(jc, l);
      if (l + w > n_total) break;
      top.intervals.push_back({l, l + w});
      pos = l + w;
    }
    fill_layer(top, n_total, st.zero_id, st.reference);
  }

  for (std::size_t j = jc - 1; j >= 1; --j) {
    Layer& layer = st.layers[j - 1];
    auto orthogonal = [&](std::uint64_t l, std::uint64_t w) {
      if (l + w > n_total) return false;
      for (std::size_t k = j + 1; k <= jc; ++k)
        if (!family.contains(st.layers[k - 1].c.data() + l + 1, w)) return false;
      return true;
    };
    for (const auto& parent : st.layers[j].intervals) {
      std::uint64_t pos = parent.l;
      for (;;) {
        std::uint64_t l = pos + 1, w = 0;
        bool found = false;
        for (; l <= parent.m; ++l) {
          if (!st.in_b[l]) continue;
          w = witness(j, l);
          if (l + w > parent.m) continue;
          if (orthogonal(l, w)) {
            found = true;
            break;
          }
          layer.rejected.push_back(l);
        }
        if (!found) break;
        layer.intervals.push_back({l, l + w});
        pos = l + w;
      }
    }
    fill_layer(layer, n_total, st.zero_id, st.reference);
  }
  return st;
}

// ---------------------------------------------------------------------------
// audit

DensityAudit audit_layers(const LayerStack& st) {
  DensityAudit au;
  const auto& k = st.constants;
  const std::size_t jc = k.j_count;
  const std::uint64_t n_total = k.n;
  auto issue = [&](std::size_t layer, std::string kind, std::uint64_t at, std::string detail) {
    au.issues.push_back({layer, std::move(kind), at, std::move(detail)});
  };
  if (st.layers.size() != jc || k.windows.size() != jc || n_total == 0) {
    issue(0, "shape", 0, "layer count does not match J");
    return au;
  }
  const bool flags_ok = st.in_e.size() == n_total + 1 && st.in_b.size() == n_total + 1;
  if (!flags_ok) issue(0, "shape", 0, "visit flags do not cover 1..N");

  for (std::size_t j = 1; j <= jc; ++j) {
    const Layer& layer = st.layers[j - 1];
    const auto [lo, hi] = k.windows[j - 1];
    std::uint64_t covered = 0, prev_m = 0;
    for (std::size_t i = 0; i < layer.intervals.size(); ++i) {
      const auto& iv = layer.intervals[i];
      if (!(iv.l < iv.m) || iv.m > n_total) {
        issue(j, "interval-range", iv.l, "interval outside 1..N");
        continue;
      }
      if (i > 0 && iv.l < prev_m) issue(j, "overlap", iv.l, "interval overlaps its predecessor");
      if (!(lo < iv.length() && iv.length() < hi)) {
        issue(j, "interval-length", iv.l, "length " + std::to_string(iv.length()) + " outside (L_j, M_j)");
      }
      if (j < jc) {
        const auto& parents = st.layers[j].intervals;
        const auto count = std::count_if(parents.begin(), parents.end(),
                                         [&](const BaseInterval& p) { return p.l <= iv.l && iv.m <= p.m; });
        if (count != 1) issue(j, "nesting", iv.l, "not inside exactly one interval of the next layer");
      }
      covered += iv.length();
      prev_m = iv.m;
    }
    au.covered.push_back(covered);
    au.density.push_back(static_cast<double>(covered) / static_cast<double>(n_total));
    if (covered != layer.covered) {
      issue(j, "density", 0, "stored covered count " + std::to_string(layer.covered) + " != recount " +
                                 std::to_string(covered));
    }
    if (layer.c.size() != n_total + 1) {
      issue(j, "sequence", 0, "c-sequence length differs from N");
      continue;
    }
    std::vector<std::int32_t> expect(n_total + 1, st.zero_id);
    for (const auto& iv : layer.intervals) {
      if (!(iv.l < iv.m) || iv.m > n_total) continue;
      for (std::uint64_t n = iv.l + 1; n <= iv.m; ++n)
        expect[n] = n - iv.l < st.reference.size() ? st.reference[n - iv.l] : -2;
    }
    for (std::uint64_t n = 1; n <= n_total; ++n) {
      if (layer.c[n] != expect[n]) {
        issue(j, "sequence", n, "c-sequence differs from the reference block");
        break;
      }
    }
  }

  const Rational nq(BigInt{n_total});
  const Rational d1 = exact_rational(k.delta1);
  for (std::size_t j = 2; j + 1 <= jc; ++j) {
    const Rational slack = Rational(static_cast<long long>(jc - j + 2)) * d1;
    au.checked.push_back("p_" + std::to_string(j - 1) + " > p_" + std::to_string(j) + " - " +
                         std::to_string(jc - j + 2) + " delta'");
    if (!(Rational(BigInt(au.covered[j - 2])) > Rational(BigInt(au.covered[j - 1])) - slack * nq)) {
      issue(j - 1, "density-step", 0, au.checked.back() + " fails");
    }
  }
  {
    const Rational tri = Rational(static_cast<long long>(jc * (jc + 1) / 2));
    au.checked.push_back("p_1 > 1 - " + std::to_string(jc * (jc + 1) / 2) + " delta'");
    if (!(Rational(BigInt(au.covered[0])) > nq - tri * d1 * nq)) {
      issue(1, "density-floor", 0, au.checked.back() + " fails: p_1 = " + num(au.density[0]));
    }
  }
  if (!flags_ok) return au;

  // gap rules
  const std::uint64_t kk = k.k;
  auto first_e = [&](std::uint64_t from, std::uint64_t to) -> std::uint64_t {  // first E index in (from, to]
    for (std::uint64_t n = from + 1; n <= std::min(to, n_total); ++n)
      if (st.in_e[n]) return n;
    return 0;
  };
  {
    au.checked.push_back("top-layer gaps: within K+1 or free of E");
    const auto& ivs = st.layers[jc - 1].intervals;
    const std::uint64_t m_top = k.windows.back().second;
    if (ivs.empty()) {
      if (n_total > m_top) {
        if (auto n = first_e(kk + 1, n_total - m_top)) issue(jc, "gap", n, "empty top layer with E index");
      }
    } else {
      if (ivs.front().l > kk + 1) {
        if (auto n = first_e(kk + 1, ivs.front().l - 1)) issue(jc, "gap", n, "initial gap holds an E index");
      }
      for (std::size_t i = 0; i + 1 < ivs.size(); ++i) {
        const auto m = ivs[i].m, l = ivs[i + 1].l;
        if (l > m + kk + 1) {
          if (auto n = first_e(m + kk + 1, l - 1)) issue(jc, "gap", n, "gap after m=" + std::to_string(m) + " holds an E index");
        }
      }
      const auto m = ivs.back().m;
      if (!(n_total - m < m_top + kk + 1)) {
        if (auto n = first_e(m + kk + 1, n_total - m_top)) issue(jc, "gap", n, "final gap holds an E index");
      }
    }
  }
  for (std::size_t j = jc - 1; j >= 1; --j) {
    au.checked.push_back("layer " + std::to_string(j) + " gaps: every E index within K+1 of a visit");
    const auto& ivs = st.layers[j - 1].intervals;
    for (const auto& parent : st.layers[j].intervals) {
      std::uint64_t s = parent.l;
      auto it = std::lower_bound(ivs.begin(), ivs.end(), parent.l,
                                 [](const BaseInterval& iv, std::uint64_t v) { return iv.l < v; });
      auto scan = [&](std::uint64_t from, std::uint64_t to) {  // E indices in (from, to)
        std::uint64_t anchor = from;
        for (std::uint64_t n = from + 1; n < to && n <= n_total; ++n) {
          if (st.in_e[n] && n - anchor > kk + 1) {
            issue(j, "gap", n, "E index " + std::to_string(n) + " far from any visit");
            return;
          }
          if (st.in_b[n]) anchor = n;
        }
      };
      for (; it != ivs.end() && it->m <= parent.m; ++it) {
        scan(s, it->l);
        s = it->m;
      }
      scan(s, parent.m + 1);
    }
  }
  return au;
}

DensityAudit density_audit(const LayerStack& stack) {
  auto au = audit_layers(stack);
  if (!au.pass()) {
    std::string msg = "density audit failed:";
    for (const auto& i : au.issues)
      msg += " [layer " + std::to_string(i.layer) + " " + i.kind + " at " + std::to_string(i.at) + "] " + i.detail + ";";
    throw Error(ErrorCode::audit_failure, msg);
  }
  return au;
}

// ---------------------------------------------------------------------------
// alpha / beta and the chain

AlphaBeta alpha_beta_check(const std::vector<std::vector<Complex>>& layers, const std::vector<Complex>& g, double a,
                           double delta, Branch branch) {
  const std::size_t jc = layers.size();
  const std::size_t n = g.size();
  if (n == 0) throw Error(ErrorCode::invalid_argument, "alpha_beta_check: empty g series");
  for (const auto& c : layers)
    if (c.size() != n) throw Error(ErrorCode::invalid_argument, "alpha_beta_check: sequence length differs from N");
  AlphaBeta ab;
  ab.a = a;
  ab.delta = delta;
  ab.alpha.assign(jc, std::vector<double>(jc, 0.0));
  ab.alpha_pass = true;
  for (std::size_t i = 0; i < jc; ++i) {
    for (std::size_t k = i + 1; k < jc; ++k) {
      CompensatedSum acc;
      for (std::size_t t = 0; t < n; ++t) acc.add(layers[i][t] * std::conj(layers[k][t]));
      const double v = std::abs(acc.value()) / static_cast<double>(n);
      ab.alpha[i][k] = ab.alpha[k][i] = v;
      if (!(v < delta)) ab.alpha_pass = false;
    }
  }
  ab.beta_pass = true;
  for (std::size_t i = 0; i < jc; ++i) {
    CompensatedSum acc;
    for (std::size_t t = 0; t < n; ++t) acc.add(layers[i][t] * g[t]);
    const double b = apply_branch(branch, acc.value() / static_cast<double>(n));
    ab.beta.push_back(b);
    if (!(b > a - delta)) ab.beta_pass = false;
  }
  return ab;
}

AlphaBeta alpha_beta_check(const LayerStack& stack, const std::vector<Complex>& g, double a, double delta) {
  std::vector<std::vector<Complex>> seqs;
  for (std::size_t j = 1; j <= stack.constants.j_count; ++j) seqs.push_back(stack.sequence(j));
  return alpha_beta_check(seqs, g, a, delta, stack.constants.branch);
}

std::string_view to_string(ChainVerdict v) {
  switch (v) {
    case ChainVerdict::contradiction: return "contradiction";
    case ChainVerdict::no_contradiction: return "no-contradiction";
    case ChainVerdict::inapplicable: return "inapplicable";
  }
  return "inapplicable";
}

bool beyond_threshold(std::size_t j_count, double a, double f_sup, double g_sup) {
  const Rational qa = exact_rational(a), qf = exact_rational(f_sup), qg = exact_rational(g_sup);
  return Rational(static_cast<long long>(j_count)) * qa * qa > 4 * qf * qf * qg * qg;
}

namespace {

// Integer mantissas on a shared binary exponent; the exponent itself is
// irrelevant for homogeneous comparisons.
std::vector<BigInt> dyadic(const std::vector<double>& xs) {
  int emin = std::numeric_limits<int>::max();
  std::vector<std::pair<std::int64_t, int>> parts(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] == 0.0) continue;
    int e = 0;
    const double m = std::frexp(xs[i], &e);
    parts[i] = {static_cast<std::int64_t>(std::ldexp(m, 53)), e - 53};
    emin = std::min(emin, e - 53);
  }
  std::vector<BigInt> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] == 0.0) continue;
    out[i] = BigInt(parts[i].first) << static_cast<unsigned>(parts[i].second - emin);
  }
  return out;
}

bool cauchy_schwarz_exact(const std::vector<Complex>& c, const std::vector<Complex>& g) {
  std::vector<double> cr, ci, gr, gi;
  for (const auto& v : c) {
    cr.push_back(v.real());
    ci.push_back(v.imag());
  }
  for (const auto& v : g) {
    gr.push_back(v.real());
    gi.push_back(v.imag());
  }
  // Real and imaginary parts share one exponent per sequence.
  std::vector<double> call = cr, gall = gr;
  call.insert(call.end(), ci.begin(), ci.end());
  gall.insert(gall.end(), gi.begin(), gi.end());
  const auto cq = dyadic(call);
  const auto gq = dyadic(gall);
  const std::size_t n = c.size();
  BigInt sr = 0, si = 0, cc = 0, gg = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const BigInt& a = cq[t];
    const BigInt& b = cq[n + t];
    const BigInt& x = gq[t];
    const BigInt& y = gq[n + t];
    sr += a * x - b * y;
    si += a * y + b * x;
    cc += a * a + b * b;
    gg += x * x + y * y;
  }
  return sr * sr + si * si <= cc * gg;
}

}  // namespace

ChainResult contradiction_chain(const AlphaBeta& ab, const std::vector<std::vector<Complex>>& layers,
                                const std::vector<Complex>& g, const ChainConstants& k) {
  ChainResult r;
  const std::size_t n = g.size();
  if (n == 0) throw Error(ErrorCode::invalid_argument, "contradiction_chain: empty g series");
  std::vector<Complex> c(n);
  for (const auto& layer : layers) {
    if (layer.size() != n) throw Error(ErrorCode::invalid_argument, "contradiction_chain: length mismatch");
    for (std::size_t t = 0; t < n; ++t) c[t] += layer[t];
  }
  CompensatedSum acc;
  for (std::size_t t = 0; t < n; ++t) acc.add(c[t] * g[t]);
  const double jd = static_cast<double>(k.j_count);
  r.observed = std::abs(acc.value()) / static_cast<double>(n);
  r.lower = jd * (k.a - k.delta);
  r.upper = (std::sqrt(jd) * k.f_sup + jd * std::sqrt(k.delta)) * k.g_sup;
  r.threshold = 4.0 * k.f_sup * k.f_sup * k.g_sup * k.g_sup / (k.a * k.a);
  r.chain_holds = r.lower < r.upper;
  r.cauchy_schwarz_exact = cauchy_schwarz_exact(c, g);
  if (!ab.pass()) {
    r.verdict = ChainVerdict::inapplicable;
  } else {
    r.verdict = beyond_threshold(k.j_count, k.a, k.f_sup, k.g_sup) ? ChainVerdict::contradiction
                                                                   : ChainVerdict::no_contradiction;
  }
  return r;
}

}  // namespace ergolab
