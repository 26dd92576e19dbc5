#include "ergolab/system.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "ergolab/error.hpp"
#include "ergolab/random.hpp"

namespace ergolab {

struct System::Node {
  SystemKind kind = SystemKind::rotation;
  std::uint64_t seed = 0;
  bool ergodic = false;
  bool invertible = false;
  bool mixing = false;

  Angle angle;
  Rational p;
  std::vector<std::vector<Rational>> matrix;
  std::vector<Rational> stationary;
  std::shared_ptr<const SymbolSource> source;

  std::vector<System> parts;
  std::vector<Rational> weights;
  std::vector<double> cumulative;  // union component sampler

  std::optional<MeasurableSet> restriction;
  Rational restriction_mass;
  std::vector<int> allowed;  // restricted union: admitted component ids
};

System make_system(std::shared_ptr<const System::Node> node) { return System(std::move(node)); }

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::rotation: return "rotation";
    case SystemKind::doubling: return "doubling";
    case SystemKind::bernoulli: return "bernoulli";
    case SystemKind::markov: return "markov";
    case SystemKind::product: return "product";
    case SystemKind::eigen_product: return "eigen-product";
    case SystemKind::natural_extension: return "natural-extension";
    case SystemKind::disjoint_union: return "disjoint-union";
    case SystemKind::restricted: return "restricted";
  }
  return "unknown";
}

namespace {

using NodePtr = std::shared_ptr<System::Node>;

bool is_sequence(const System& s) {
  switch (s.kind()) {
    case SystemKind::doubling:
    case SystemKind::bernoulli:
    case SystemKind::markov:
    case SystemKind::natural_extension: return true;
    default: return false;
  }
}

std::vector<double> cumulative_of(const std::vector<Rational>& weights) {
  std::vector<double> c;
  Rational acc = 0;
  for (const auto& w : weights) {
    acc += w;
    c.push_back(to_double(acc));
  }
  if (!c.empty()) c.back() = 2.0;
  return c;
}

int pick(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                   static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

Fixed uniform_fixed(std::uint64_t seed) { return Fixed::from_parts(hash64(seed, 0), hash64(seed, 1)); }

SeqCoord& seq_of(Point& x) {
  auto* s = std::get_if<SeqCoord>(&x.v);
  if (s == nullptr) throw Error(ErrorCode::space_mismatch, "expected a symbolic point");
  return *s;
}

TupleCoord& tuple_of(Point& x, std::size_t arity) {
  auto* t = std::get_if<TupleCoord>(&x.v);
  if (t == nullptr || t->parts.size() != arity) throw Error(ErrorCode::space_mismatch, "expected a tuple point");
  return *t;
}

CircleCoord& circle_of(Point& x) {
  auto* c = std::get_if<CircleCoord>(&x.v);
  if (c == nullptr) throw Error(ErrorCode::space_mismatch, "expected a circle point");
  return *c;
}

TaggedCoord& tagged_of(Point& x) {
  auto* t = std::get_if<TaggedCoord>(&x.v);
  if (t == nullptr || !t->inner) throw Error(ErrorCode::space_mismatch, "expected a tagged point");
  return *t;
}

// Boolean reachability closure; irreducible iff every state reaches every other.
bool irreducible(const std::vector<std::vector<Rational>>& m) {
  const std::size_t n = m.size();
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && m[u][v] > 0) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

// Wielandt: an irreducible matrix is primitive iff its ((n-1)^2 + 1)-th power is positive.
bool primitive(const std::vector<std::vector<Rational>>& m) {
  const std::size_t n = m.size();
  using B = std::vector<std::vector<bool>>;
  B a(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = m[i][j] > 0;
  auto mul = [n](const B& x, const B& y) {
    B z(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (x[i][k])
          for (std::size_t j = 0; j < n; ++j)
            if (y[k][j]) z[i][j] = true;
    return z;
  };
  std::size_t e = (n - 1) * (n - 1) + 1;
  B result(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) result[i][i] = true;
  B base = a;
  while (e > 0) {
    if (e & 1) result = mul(result, base);
    base = mul(base, base);
    e >>= 1;
  }
  for (const auto& row : result)
    for (bool b : row)
      if (!b) return false;
  return true;
}

// Solves pi (P - I) = 0 with sum(pi) = 1 by exact Gaussian elimination.
std::vector<Rational> solve_stationary(const std::vector<std::vector<Rational>>& m) {
  const std::size_t n = m.size();
  std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1, Rational(0)));
  for (std::size_t eq = 0; eq + 1 < n; ++eq) {
    for (std::size_t i = 0; i < n; ++i) a[eq][i] = m[i][eq] - (i == eq ? Rational(1) : Rational(0));
  }
  for (std::size_t i = 0; i < n; ++i) a[n - 1][i] = 1;
  a[n - 1][n] = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) throw Error(ErrorCode::invalid_argument, "markov: stationary law is not unique");
    std::swap(a[piv], a[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const Rational f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<Rational> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
  return pi;
}

std::vector<double> to_doubles(const std::vector<Rational>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& r : v) out.push_back(to_double(r));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// constructors

System System::rotation(Angle alpha, std::uint64_t seed) {
  auto n = std::make_shared<Node>();
  n->kind = SystemKind::rotation;
  n->seed = seed;
  n->angle = alpha;
  n->invertible = true;
  n->ergodic = alpha.irrational;
  return System(n);
}

System System::doubling(std::uint64_t seed) {
  auto n = std::make_shared<Node>();
  n->kind = SystemKind::doubling;
  n->seed = seed;
  n->p = Rational(1, 2);
  n->source = fair_source();
  n->ergodic = n->mixing = true;
  return System(n);
}

System System::bernoulli(const Rational& p, std::uint64_t seed) {
  if (p < 0 || p > 1) throw Error(ErrorCode::invalid_argument, "bernoulli: p outside [0,1]");
  auto n = std::make_shared<Node>();
  n->kind = SystemKind::bernoulli;
  n->seed = seed;
  n->p = p;
  n->source = bernoulli_source(to_double(p));
  n->ergodic = n->mixing = true;
  return System(n);
}

System System::markov(const std::vector<std::vector<Rational>>& matrix, std::uint64_t seed,
                      const std::optional<std::vector<Rational>>& stationary) {
  const std::size_t d = matrix.size();
  if (d < 2) throw Error(ErrorCode::invalid_argument, "markov: need at least two states");
  for (const auto& row : matrix) {
    if (row.size() != d) throw Error(ErrorCode::invalid_argument, "markov: matrix is not square");
    Rational sum = 0;
    for (const auto& v : row) {
      if (v < 0) throw Error(ErrorCode::invalid_argument, "markov: negative transition probability");
      sum += v;
    }
    if (sum != 1) throw Error(ErrorCode::invalid_argument, "markov: row does not sum to 1");
  }
  auto n = std::make_shared<Node>();
  n->kind = SystemKind::markov;
  n->seed = seed;
  n->matrix = matrix;
  const bool irr = irreducible(matrix);
  if (stationary) {
    if (stationary->size() != d) throw Error(ErrorCode::invalid_argument, "markov: stationary vector size");
    Rational total = 0;
    for (const auto& v : *stationary) {
      if (v < 0) throw Error(ErrorCode::invalid_argument, "markov: negative stationary mass");
      total += v;
    }
    if (total != 1) throw Error(ErrorCode::invalid_argument, "markov: stationary vector does not sum to 1");
    for (std::size_t j = 0; j < d; ++j) {
      Rational acc = 0;
      for (std::size_t i = 0; i < d; ++i) acc += (*stationary)[i] * matrix[i][j];
      if (acc != (*stationary)[j]) throw Error(ErrorCode::invalid_argument, "markov: vector is not stationary");
    }
    n->stationary = *stationary;
  } else {
    if (!irr) throw Error(ErrorCode::invalid_argument, "markov: reducible chain needs an explicit stationary law");
    n->stationary = solve_stationary(matrix);
  }
  std::vector<std::vector<double>> dm;
  for (const auto& row : matrix) dm.push_back(to_doubles(row));
  n->source = markov_source(dm, to_doubles(n->stationary));
  bool support_full = true;
  for (const auto& v : n->stationary) support_full = support_full && v > 0;
  n->ergodic = irr && support_full;
  n->mixing = n->ergodic && primitive(matrix);
  return System(n);
}

System System::product(std::vector<System> parts, std::uint64_t seed) {
  if (parts.empty()) throw Error(ErrorCode::invalid_argument, "product: no factors");
  auto n = std::make_shared<Node>();
  n->kind = SystemKind::product;
  n->seed = seed;
  n->invertible = std::all_of(parts.begin(), parts.end(), [](const System& s) { return s.invertible(); });
  n->mixing = std::all_of(parts.begin(), parts.end(), [](const System& s) { return s.mixing(); });
  // Conservative: mixing factors times at most one ergodic (e.g. irrational) rotation.
  std::size_t non_mixing = 0;
  bool ok = true;
  for (const auto& s : parts) {
    if (s.mixing()) continue;
    ++non_mixing;
    ok = ok && s.ergodic();
  }
  n->ergodic = ok && non_mixing <= 1;
  n->parts = std::move(parts);
  return System(n);
}

System System::disjoint_union(const std::vector<std::pair<Rational, System>>& parts, std::uint64_t seed) {
  if (parts.empty()) throw Error(ErrorCode::invalid_argument, "disjoint-union: no components");
  auto n = std::make_shared<Node>();
  n->kind = SystemKind::disjoint_union;
  n->seed = seed;
  Rational total = 0;
  bool inv = true;
  for (const auto& [w, s] : parts) {
    if (w <= 0) throw Error(ErrorCode::invalid_argument, "disjoint-union: weights must be positive");
    total += w;
    n->weights.push_back(w);
    n->parts.push_back(s);
    inv = inv && s.invertible();
  }
  if (total != 1) throw Error(ErrorCode::invalid_argument, "disjoint-union: weights must sum to 1");
  n->cumulative = cumulative_of(n->weights);
  n->invertible = inv;
  n->ergodic = parts.size() == 1 && parts[0].second.ergodic();
  n->mixing = parts.size() == 1 && parts[0].second.mixing();
  return System(n);
}

System eigen_product(const Angle& beta, const System& base) {
  auto n = std::make_shared<System::Node>();
  n->kind = SystemKind::eigen_product;
  n->seed = base.seed();
  n->angle = beta;
  n->parts = {base};
  n->invertible = base.invertible();
  // Only flagged when the base has no eigenvalue besides 1 that could resonate.
  n->ergodic = beta.irrational && base.ergodic() && base.mixing();
  n->mixing = false;
  return make_system(n);
}

System eigen_product(std::complex<double> lambda, const System& base) {
  // Doubles carry 53 bits, so |lambda| is checked to 2^-50 (the 2^-60 target is
  // only reachable for angles given as fixed-point fractions).
  const long double mod = std::hypot(static_cast<long double>(lambda.real()), static_cast<long double>(lambda.imag()));
  if (std::fabs(mod - 1.0L) > 0x1.0p-50L) {
    throw Error(ErrorCode::invalid_argument, "eigen-product: |lambda| != 1");
  }
  double turns = std::atan2(lambda.imag(), lambda.real()) / (2.0 * M_PI);
  if (turns < 0) turns += 1.0;
  return eigen_product(Angle::rational(Fixed::from_double(turns)), base);
}

// ---------------------------------------------------------------------------
// accessors

SystemKind System::kind() const { return node_->kind; }
bool System::ergodic() const { return node_->ergodic; }
bool System::invertible() const { return node_->invertible; }
bool System::mixing() const { return node_->mixing; }
std::uint64_t System::seed() const { return node_->seed; }

const Angle& System::angle() const {
  if (kind() != SystemKind::rotation && kind() != SystemKind::eigen_product) {
    throw Error(ErrorCode::invalid_argument, "angle: not a rotation");
  }
  return node_->angle;
}
const Rational& System::bernoulli_p() const { return node_->p; }
const std::vector<std::vector<Rational>>& System::markov_matrix() const { return node_->matrix; }
const std::vector<Rational>& System::stationary() const { return node_->stationary; }
const std::vector<System>& System::parts() const { return node_->parts; }
const std::vector<Rational>& System::weights() const { return node_->weights; }
const System& System::base() const {
  if (node_->parts.empty()) throw Error(ErrorCode::invalid_argument, "base: system has no base");
  return node_->parts.front();
}
const std::optional<MeasurableSet>& System::restriction() const { return node_->restriction; }
const Rational& System::restriction_mass() const { return node_->restriction_mass; }

Space System::space() const {
  Space s;
  switch (kind()) {
    case SystemKind::rotation: s.kind = Space::Kind::circle; break;
    case SystemKind::doubling:
    case SystemKind::bernoulli:
    case SystemKind::markov:
      s.kind = Space::Kind::sequence;
      s.alphabet = node_->source->alphabet;
      break;
    case SystemKind::natural_extension:
      s = base().space();
      s.two_sided = true;
      break;
    case SystemKind::product:
      s.kind = Space::Kind::tuple;
      for (const auto& p : parts()) s.parts.push_back(p.space());
      break;
    case SystemKind::eigen_product:
      s.kind = Space::Kind::tuple;
      s.parts = {Space{}, base().space()};
      break;
    case SystemKind::disjoint_union:
      s.kind = Space::Kind::tagged;
      for (const auto& p : parts()) s.parts.push_back(p.space());
      break;
    case SystemKind::restricted: return base().space();
  }
  return s;
}

bool Space::contains(const Point& x) const {
  switch (kind) {
    case Kind::circle: return std::holds_alternative<CircleCoord>(x.v);
    case Kind::sequence: {
      const auto* s = std::get_if<SeqCoord>(&x.v);
      return s != nullptr && s->source && s->source->alphabet == alphabet && s->two_sided == two_sided;
    }
    case Kind::tuple: {
      const auto* t = std::get_if<TupleCoord>(&x.v);
      if (t == nullptr || t->parts.size() != parts.size()) return false;
      for (std::size_t i = 0; i < parts.size(); ++i)
        if (!parts[i].contains(t->parts[i])) return false;
      return true;
    }
    case Kind::tagged: {
      const auto* t = std::get_if<TaggedCoord>(&x.v);
      if (t == nullptr || !t->inner || t->component < 0 || static_cast<std::size_t>(t->component) >= parts.size())
        return false;
      return parts[static_cast<std::size_t>(t->component)].contains(*t->inner);
    }
  }
  return false;
}

std::string System::describe() const {
  switch (kind()) {
    case SystemKind::rotation: return "rotation(" + node_->angle.value.to_hex() + ")";
    case SystemKind::doubling: return "doubling";
    case SystemKind::bernoulli: return "bernoulli(" + to_string(node_->p) + ")";
    case SystemKind::markov: return "markov(" + std::to_string(node_->matrix.size()) + " states)";
    case SystemKind::natural_extension: return "natural-extension(" + base().describe() + ")";
    case SystemKind::eigen_product:
      return "eigen-product(" + node_->angle.value.to_hex() + ", " + base().describe() + ")";
    case SystemKind::product:
    case SystemKind::disjoint_union: {
      std::string out = std::string(to_string(kind())) + "(";
      for (std::size_t i = 0; i < parts().size(); ++i) {
        if (i) out += ", ";
        if (kind() == SystemKind::disjoint_union) out += to_string(weights()[i]) + ":";
        out += parts()[i].describe();
      }
      return out + ")";
    }
    case SystemKind::restricted: return "restricted(" + base().describe() + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// dynamics

void System::step(Point& x) const {
  switch (kind()) {
    case SystemKind::rotation: circle_of(x).value += node_->angle.value; return;
    case SystemKind::doubling:
    case SystemKind::bernoulli:
    case SystemKind::natural_extension: {
      SeqCoord& s = seq_of(x);
      ++s.cursor;
      if (!s.source->iid()) s.state = s.source->markov_next(s.state, s.seed, s.cursor);
      return;
    }
    case SystemKind::markov: {
      SeqCoord& s = seq_of(x);
      ++s.cursor;
      s.state = s.source->markov_next(s.state, s.seed, s.cursor);
      return;
    }
    case SystemKind::product: {
      TupleCoord& t = tuple_of(x, parts().size());
      for (std::size_t i = 0; i < parts().size(); ++i) parts()[i].step(t.parts[i]);
      return;
    }
    case SystemKind::eigen_product: {
      TupleCoord& t = tuple_of(x, 2);
      circle_of(t.parts[0]).value += node_->angle.value;
      base().step(t.parts[1]);
      return;
    }
    case SystemKind::disjoint_union: {
      TaggedCoord& t = tagged_of(x);
      parts().at(static_cast<std::size_t>(t.component)).step(*t.inner);
      return;
    }
    case SystemKind::restricted: base().step(x); return;
  }
}

void System::step_inverse(Point& x) const {
  if (!invertible()) throw Error(ErrorCode::precondition_violation, "step_inverse on a non-invertible system");
  switch (kind()) {
    case SystemKind::rotation: circle_of(x).value -= node_->angle.value; return;
    case SystemKind::natural_extension: {
      SeqCoord& s = seq_of(x);
      if (!s.source->iid()) throw Error(ErrorCode::unsupported_system, "markov extension is not realised");
      --s.cursor;
      return;
    }
    case SystemKind::product: {
      TupleCoord& t = tuple_of(x, parts().size());
      for (std::size_t i = 0; i < parts().size(); ++i) parts()[i].step_inverse(t.parts[i]);
      return;
    }
    case SystemKind::eigen_product: {
      TupleCoord& t = tuple_of(x, 2);
      circle_of(t.parts[0]).value -= node_->angle.value;
      base().step_inverse(t.parts[1]);
      return;
    }
    case SystemKind::disjoint_union: {
      TaggedCoord& t = tagged_of(x);
      parts().at(static_cast<std::size_t>(t.component)).step_inverse(*t.inner);
      return;
    }
    case SystemKind::restricted: base().step_inverse(x); return;
    default: throw Error(ErrorCode::precondition_violation, "step_inverse on a non-invertible system");
  }
}

Point System::advance(const Point& x, std::uint64_t n) const {
  Point y = x;
  switch (kind()) {
    case SystemKind::rotation:
      circle_of(y).value += node_->angle.value.times(static_cast<std::int64_t>(n));
      return y;
    case SystemKind::doubling:
    case SystemKind::bernoulli:
    case SystemKind::natural_extension:
      if (seq_of(y).source->iid()) {
        seq_of(y).cursor += static_cast<std::int64_t>(n);
        return y;
      }
      break;
    case SystemKind::product: {
      TupleCoord& t = tuple_of(y, parts().size());
      for (std::size_t i = 0; i < parts().size(); ++i) t.parts[i] = parts()[i].advance(t.parts[i], n);
      return y;
    }
    case SystemKind::eigen_product: {
      TupleCoord& t = tuple_of(y, 2);
      circle_of(t.parts[0]).value += node_->angle.value.times(static_cast<std::int64_t>(n));
      t.parts[1] = base().advance(t.parts[1], n);
      return y;
    }
    case SystemKind::disjoint_union: {
      TaggedCoord& t = tagged_of(y);
      *t.inner = parts().at(static_cast<std::size_t>(t.component)).advance(*t.inner, n);
      return y;
    }
    case SystemKind::restricted: return base().advance(x, n);
    default: break;
  }
  for (std::uint64_t i = 0; i < n; ++i) step(y);
  return y;
}

Point System::sample(std::uint64_t index) const {
  const std::uint64_t s = derive_seed(node_->seed, index);
  switch (kind()) {
    case SystemKind::rotation: return Point::circle(uniform_fixed(s));
    case SystemKind::doubling:
    case SystemKind::bernoulli: return Point{SeqCoord{node_->source, s, 0, 0, false}};
    case SystemKind::markov: {
      SeqCoord q{node_->source, s, 0, 0, false};
      q.state = node_->source->markov_initial(s);
      return Point{q};
    }
    case SystemKind::natural_extension: {
      Point p = base().sample(index);
      seq_of(p).two_sided = true;
      return p;
    }
    case SystemKind::product: {
      std::vector<Point> ps;
      for (std::size_t i = 0; i < parts().size(); ++i) ps.push_back(parts()[i].sample(derive_seed(s, i)));
      return Point::tuple(std::move(ps));
    }
    case SystemKind::eigen_product:
      return Point::tuple({Point::circle(uniform_fixed(derive_seed(s, 0))), base().sample(derive_seed(s, 1))});
    case SystemKind::disjoint_union: {
      const int c = pick(node_->cumulative, uniform01(s, 0));
      return Point::tagged(c, parts()[static_cast<std::size_t>(c)].sample(derive_seed(s, 1)));
    }
    case SystemKind::restricted: {
      if (!node_->allowed.empty()) {
        const int k = pick(node_->cumulative, uniform01(s, 0));
        const int c = node_->allowed[static_cast<std::size_t>(k)];
        return Point::tagged(c, base().parts()[static_cast<std::size_t>(c)].sample(derive_seed(s, 1)));
      }
      for (std::uint64_t attempt = 0; attempt < (1ULL << 20); ++attempt) {
        Point p = base().sample(derive_seed(s, attempt));
        if (contains(*node_->restriction, p)) return p;
      }
      throw Error(ErrorCode::resource, "restricted sampler: rejection budget exhausted");
    }
  }
  throw Error(ErrorCode::unsupported_system, "sample: unknown system");
}

// ---------------------------------------------------------------------------
// measures

namespace {

// Count of 64-bit grid values v with v / 2^64 inside the union; this is the
// exact law of the 64-bit binary coordinate of a fair bit stream.
Rational fair_interval_measure(const IntervalUnion& u) {
  BigInt count = 0;
  for (const auto& arc : u.intervals()) {
    const u128 lo = arc.lo.raw();
    const BigInt first = BigInt(static_cast<std::uint64_t>(lo >> 64)) + (static_cast<std::uint64_t>(lo) != 0 ? 1 : 0);
    const BigInt end = arc.hi.raw() == 0 ? (BigInt(1) << 64) : BigInt(arc.hi.hi()) + (arc.hi.lo() != 0 ? 1 : 0);
    if (end > first) count += end - first;
  }
  return Rational(count, BigInt(1) << 64);
}

struct ConstraintSet {
  std::map<std::int64_t, int> fixed;
  std::int64_t last = 0;
};

}  // namespace

Rational System::cylinder_union_measure(const std::vector<Cylinder>& cylinders) const {
  if (!is_sequence(*this)) throw Error(ErrorCode::unsupported_set, "cylinders need a symbolic system");
  const bool two_sided = kind() == SystemKind::natural_extension;
  const System& gen = two_sided ? base() : *this;
  const int d = gen.node_->source->alphabet;
  const bool iid = gen.kind() != SystemKind::markov;
  if (cylinders.size() > 64) throw Error(ErrorCode::resource, "cylinder union: at most 64 cylinders");

  std::vector<Rational> probs;
  if (iid) probs = {1 - gen.node_->p, gen.node_->p};

  std::vector<ConstraintSet> sets;
  std::int64_t lo = 0, hi = 0;
  bool first = true;
  for (const auto& c : cylinders) {
    if (!two_sided && c.offset < 0) throw Error(ErrorCode::unsupported_set, "one-sided cylinder at negative offset");
    ConstraintSet cs;
    for (std::size_t k = 0; k < c.word.size(); ++k) {
      if (c.word[k] < 0 || c.word[k] >= d) throw Error(ErrorCode::unsupported_set, "cylinder symbol outside alphabet");
      cs.fixed[c.offset + static_cast<std::int64_t>(k)] = c.word[k];
    }
    if (cs.fixed.empty()) return Rational(1);
    cs.last = cs.fixed.rbegin()->first;
    const std::int64_t start = cs.fixed.begin()->first;
    if (first) {
      lo = start;
      hi = cs.last;
      first = false;
    } else {
      lo = std::min(lo, start);
      hi = std::max(hi, cs.last);
    }
    sets.push_back(std::move(cs));
  }
  if (sets.empty()) return Rational(0);
  // A stationary chain seen from its first constrained index starts in its stationary law.
  std::map<std::tuple<std::int64_t, int, std::uint64_t>, Rational> memo;
  std::function<Rational(std::int64_t, int, std::uint64_t)> rec = [&](std::int64_t i, int prev,
                                                                     std::uint64_t mask) -> Rational {
    if (mask == 0) return Rational(0);
    for (std::size_t k = 0; k < sets.size(); ++k)
      if ((mask >> k & 1) && sets[k].last < i) return Rational(1);
    const auto key = std::make_tuple(i, iid ? 0 : prev, mask);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    Rational total = 0;
    for (int s = 0; s < d; ++s) {
      Rational q;
      if (iid) {
        q = probs[static_cast<std::size_t>(s)];
      } else if (i == lo) {
        q = gen.node_->stationary[static_cast<std::size_t>(s)];
      } else {
        q = gen.node_->matrix[static_cast<std::size_t>(prev)][static_cast<std::size_t>(s)];
      }
      if (q == 0) continue;
      std::uint64_t next = 0;
      for (std::size_t k = 0; k < sets.size(); ++k) {
        if (!(mask >> k & 1)) continue;
        const auto f = sets[k].fixed.find(i);
        if (f == sets[k].fixed.end() || f->second == s) next |= std::uint64_t{1} << k;
      }
      total += q * rec(i + 1, s, next);
    }
    memo.emplace(key, total);
    return total;
  };
  const std::uint64_t all = sets.size() == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << sets.size()) - 1);
  (void)hi;
  return rec(lo, 0, all);
}

namespace {

Rational restricted_measure(const System& sys, const MeasurableSet& set);

}  // namespace

Rational System::measure(const MeasurableSet& set) const {
  if (kind() == SystemKind::restricted) return restricted_measure(*this, set);
  return std::visit(
      [&](const auto& s) -> Rational {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IntervalUnion>) {
          if (kind() == SystemKind::rotation) return s.measure();
          if ((kind() == SystemKind::doubling) ||
              (kind() == SystemKind::natural_extension && base().kind() == SystemKind::doubling)) {
            return fair_interval_measure(s);
          }
          throw Error(ErrorCode::unsupported_set, "interval sets need a rotation or the doubling shift");
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          return cylinder_union_measure({s});
        } else if constexpr (std::is_same_v<T, CylinderUnion>) {
          return cylinder_union_measure(s.parts);
        } else if constexpr (std::is_same_v<T, ComponentSet>) {
          if (kind() != SystemKind::disjoint_union) throw Error(ErrorCode::unsupported_set, "component set on a non-union");
          Rational m = 0;
          for (int id : s.ids) m += weights().at(static_cast<std::size_t>(id));
          return m;
        } else {
          if (kind() != SystemKind::disjoint_union) throw Error(ErrorCode::unsupported_set, "tagged set on a non-union");
          const auto c = static_cast<std::size_t>(s.component);
          return weights().at(c) * parts().at(c).measure(*s.inner);
        }
      },
      set.v);
}

MeasurableSet System::preimage(const MeasurableSet& set, std::int64_t j) const {
  if (kind() == SystemKind::restricted) return base().preimage(set, j);
  if (j < 0 && !invertible()) throw Error(ErrorCode::precondition_violation, "forward image on a non-invertible system");
  return std::visit(
      [&](const auto& s) -> MeasurableSet {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IntervalUnion>) {
          if (kind() != SystemKind::rotation) throw Error(ErrorCode::unsupported_set, "interval preimage needs a rotation");
          return {s.shifted(node_->angle.value.times(-j))};
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          if (!is_sequence(*this)) throw Error(ErrorCode::unsupported_set, "cylinder preimage needs a shift");
          return {Cylinder{s.offset + j, s.word}};
        } else if constexpr (std::is_same_v<T, CylinderUnion>) {
          if (!is_sequence(*this)) throw Error(ErrorCode::unsupported_set, "cylinder preimage needs a shift");
          CylinderUnion out;
          for (const auto& c : s.parts) out.parts.push_back({c.offset + j, c.word});
          return {out};
        } else if constexpr (std::is_same_v<T, ComponentSet>) {
          return {s};
        } else {
          if (kind() != SystemKind::disjoint_union) throw Error(ErrorCode::unsupported_set, "tagged set on a non-union");
          return MeasurableSet::tagged(s.component, parts().at(static_cast<std::size_t>(s.component)).preimage(*s.inner, j));
        }
      },
      set.v);
}

MeasurableSet System::image(const MeasurableSet& set, std::int64_t j) const {
  if (!invertible()) throw Error(ErrorCode::precondition_violation, "image needs an invertible system");
  return preimage(set, -j);
}

namespace {

Rational restricted_measure(const System& sys, const MeasurableSet& set) {
  const System& base = sys.base();
  const MeasurableSet& atom = *sys.restriction();
  const Rational& mass = sys.restriction_mass();
  if (const auto* a = std::get_if<ComponentSet>(&atom.v)) {
    if (const auto* b = std::get_if<ComponentSet>(&set.v)) {
      std::vector<int> common;
      std::set_intersection(a->ids.begin(), a->ids.end(), b->ids.begin(), b->ids.end(), std::back_inserter(common));
      return base.measure({ComponentSet{common}}) / mass;
    }
    if (const auto* b = std::get_if<TaggedSet>(&set.v)) {
      if (!std::binary_search(a->ids.begin(), a->ids.end(), b->component)) return Rational(0);
      return base.measure(set) / mass;
    }
    throw Error(ErrorCode::unsupported_set, "restricted union: expected a component or tagged set");
  }
  if (const auto* a = std::get_if<IntervalUnion>(&atom.v)) {
    if (const auto* b = std::get_if<IntervalUnion>(&set.v)) return base.measure({a->intersect(*b)}) / mass;
    throw Error(ErrorCode::unsupported_set, "restricted rotation: expected an interval set");
  }
  auto cylinders_of = [](const MeasurableSet& s) -> std::vector<Cylinder> {
    if (const auto* c = std::get_if<Cylinder>(&s.v)) return {*c};
    if (const auto* u = std::get_if<CylinderUnion>(&s.v)) return u->parts;
    throw Error(ErrorCode::unsupported_set, "restricted shift: expected cylinder sets");
  };
  const auto ca = cylinders_of(atom);
  const auto cb = cylinders_of(set);
  // mu(A cap B) = mu(A) + mu(B) - mu(A cup B); exact.
  std::vector<Cylinder> both = ca;
  both.insert(both.end(), cb.begin(), cb.end());
  const Rational inter = base.cylinder_union_measure(ca) + base.cylinder_union_measure(cb) -
                         base.cylinder_union_measure(both);
  return inter / mass;
}

}  // namespace

// ---------------------------------------------------------------------------
// structural operations

Point NaturalExtension::project(const Point& x) const {
  if (already_invertible) return x;
  std::function<Point(const System&, const Point&)> proj = [&](const System& b, const Point& p) -> Point {
    switch (b.kind()) {
      case SystemKind::doubling:
      case SystemKind::bernoulli: {
        Point q = p;
        std::get<SeqCoord>(q.v).two_sided = false;
        return q;
      }
      case SystemKind::product: {
        const auto& t = std::get<TupleCoord>(p.v);
        std::vector<Point> out;
        for (std::size_t i = 0; i < b.parts().size(); ++i) out.push_back(proj(b.parts()[i], t.parts[i]));
        return Point::tuple(std::move(out));
      }
      case SystemKind::eigen_product: {
        const auto& t = std::get<TupleCoord>(p.v);
        return Point::tuple({t.parts[0], proj(b.base(), t.parts[1])});
      }
      case SystemKind::disjoint_union: {
        const auto& t = std::get<TaggedCoord>(p.v);
        return Point::tagged(t.component, proj(b.parts()[static_cast<std::size_t>(t.component)], *t.inner));
      }
      default: return p;
    }
  };
  if (!system.in_space(x)) throw Error(ErrorCode::space_mismatch, "project: point outside the extension");
  return proj(base, x);
}

NaturalExtension natural_extension(const System& base) {
  if (base.invertible()) return {base, base, true};
  switch (base.kind()) {
    case SystemKind::doubling:
    case SystemKind::bernoulli: {
      auto n = std::make_shared<System::Node>(base.node());
      n->kind = SystemKind::natural_extension;
      n->parts = {base};
      n->invertible = true;
      return {make_system(n), base, false};
    }
    case SystemKind::product: {
      std::vector<System> ext;
      for (const auto& p : base.parts()) ext.push_back(natural_extension(p).system);
      return {System::product(std::move(ext), base.seed()), base, false};
    }
    case SystemKind::eigen_product:
      return {eigen_product(base.angle(), natural_extension(base.base()).system), base, false};
    case SystemKind::disjoint_union: {
      std::vector<std::pair<Rational, System>> ext;
      for (std::size_t i = 0; i < base.parts().size(); ++i)
        ext.emplace_back(base.weights()[i], natural_extension(base.parts()[i]).system);
      return {System::disjoint_union(ext, base.seed()), base, false};
    }
    default:
      throw Error(ErrorCode::unsupported_system,
                  "natural extension is realised for i.i.d. shifts and structures built from them");
  }
}

System atom_restrict(const System& sys, const MeasurableSet& atom) {
  const Rational mass = sys.measure(atom);
  if (mass == 0) throw Error(ErrorCode::invalid_argument, "atom_restrict: set has measure zero");

  auto n = std::make_shared<System::Node>();
  n->kind = SystemKind::restricted;
  n->seed = sys.seed();
  n->parts = {sys};
  n->invertible = sys.invertible();
  n->restriction = atom;
  n->restriction_mass = mass;

  if (const auto* c = std::get_if<ComponentSet>(&atom.v)) {
    if (sys.kind() != SystemKind::disjoint_union) throw Error(ErrorCode::unsupported_set, "component set on a non-union");
    std::vector<Rational> w;
    for (int id : c->ids) w.push_back(sys.weights().at(static_cast<std::size_t>(id)) / mass);
    n->allowed = c->ids;
    n->cumulative = cumulative_of(w);
    n->ergodic = c->ids.size() == 1 && sys.parts()[static_cast<std::size_t>(c->ids[0])].ergodic();
    n->mixing = c->ids.size() == 1 && sys.parts()[static_cast<std::size_t>(c->ids[0])].mixing();
    return make_system(n);
  }
  // Exact invariance: mu(A symmetric-difference T^{-1}A) = 0.
  const MeasurableSet pre = sys.preimage(atom, 1);
  Rational sym_diff;
  if (const auto* a = std::get_if<IntervalUnion>(&atom.v)) {
    const auto& b = std::get<IntervalUnion>(pre.v);
    sym_diff = sys.measure({a->unite(b)}) - sys.measure({a->intersect(b)});
  } else if (std::holds_alternative<Cylinder>(atom.v) || std::holds_alternative<CylinderUnion>(atom.v)) {
    auto cyl = [](const MeasurableSet& s) {
      if (const auto* c = std::get_if<Cylinder>(&s.v)) return std::vector<Cylinder>{*c};
      return std::get<CylinderUnion>(s.v).parts;
    };
    auto both = cyl(atom);
    const auto b = cyl(pre);
    both.insert(both.end(), b.begin(), b.end());
    const Rational uni = sys.cylinder_union_measure(both);
    sym_diff = 2 * uni - sys.measure(atom) - sys.measure(pre);
  } else {
    throw Error(ErrorCode::unsupported_set, "atom_restrict: unsupported invariant set");
  }
  if (sym_diff != 0) throw Error(ErrorCode::precondition_violation, "atom_restrict: set is not invariant");
  // An invariant set of an ergodic system has full measure, so ergodicity carries over.
  n->ergodic = sys.ergodic();
  n->mixing = sys.mixing();
  return make_system(n);
}

std::vector<Component> ergodic_components(const System& sys) {
  if (sys.kind() == SystemKind::disjoint_union) {
    std::vector<Component> out;
    for (std::size_t i = 0; i < sys.parts().size(); ++i) {
      for (auto& c : ergodic_components(sys.parts()[i])) out.push_back({sys.weights()[i] * c.weight, c.system});
    }
    return out;
  }
  if (sys.kind() == SystemKind::restricted && sys.base().kind() == SystemKind::disjoint_union &&
      std::holds_alternative<ComponentSet>(sys.restriction()->v)) {
    std::vector<Component> out;
    for (int id : std::get<ComponentSet>(sys.restriction()->v).ids) {
      const auto i = static_cast<std::size_t>(id);
      for (auto& c : ergodic_components(sys.base().parts()[i]))
        out.push_back({sys.base().weights()[i] / sys.restriction_mass() * c.weight, c.system});
    }
    return out;
  }
  if (sys.ergodic()) return {{Rational(1), sys}};
  throw Error(ErrorCode::unsupported_system,
              "ergodic decomposition is realised only for finite unions of ergodic systems");
}

}  // namespace ergolab
