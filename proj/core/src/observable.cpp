#include "ergolab/observable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ergolab/error.hpp"
#include "ergolab/random.hpp"

namespace ergolab {

Observable make_observable(std::shared_ptr<const Observable::Node> n) { return Observable(std::move(n)); }

std::string_view to_string(ObservableKind kind) {
  switch (kind) {
    case ObservableKind::constant: return "constant";
    case ObservableKind::coordinate: return "coordinate";
    case ObservableKind::character: return "character";
    case ObservableKind::character_sum: return "character-sum";
    case ObservableKind::indicator: return "indicator";
    case ObservableKind::bit_window: return "bit-window";
    case ObservableKind::tensor: return "tensor";
    case ObservableKind::linear: return "linear";
    case ObservableKind::power: return "power";
    case ObservableKind::log: return "log";
    case ObservableKind::truncated: return "truncated";
    case ObservableKind::quantized: return "quantized";
  }
  return "unknown";
}

namespace {

using NodePtr = std::shared_ptr<Observable::Node>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxAlphabet = 1 << 16;

struct ComplexLess {
  bool operator()(const Complex& a, const Complex& b) const {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  }
};

std::vector<Complex> distinct(const std::vector<Complex>& values) {
  std::set<Complex, ComplexLess> s(values.begin(), values.end());
  return {s.begin(), s.end()};
}

double quantize_component(double v, double k) { return std::floor(k * v) / k; }

Complex quantize(Complex v, double k) { return {quantize_component(v.real(), k), quantize_component(v.imag(), k)}; }

double coordinate_of(const Point& x) {
  if (const auto* c = std::get_if<CircleCoord>(&x.v)) return c->value.to_double();
  if (const auto* s = std::get_if<SeqCoord>(&x.v)) return s->binary_coordinate().to_double();
  throw Error(ErrorCode::space_mismatch, "coordinate needs a circle or binary point");
}

Fixed fixed_coordinate_of(const Point& x) {
  if (const auto* c = std::get_if<CircleCoord>(&x.v)) return c->value;
  if (const auto* s = std::get_if<SeqCoord>(&x.v)) return s->binary_coordinate();
  throw Error(ErrorCode::space_mismatch, "character needs a circle or binary point");
}

std::size_t window_index(const Observable::Node& n, const SeqCoord& s) {
  const int d = s.source->alphabet;
  if (s.source->kind == SymbolSource::Kind::fair && n.length <= 32) {
    if (!s.two_sided && n.k < 0) throw Error(ErrorCode::invalid_argument, "one-sided point read before its cursor");
    const std::uint64_t w = fair_window(s.seed, s.cursor + n.k);
    return static_cast<std::size_t>(w & ((std::uint64_t{1} << n.length) - 1));
  }
  std::size_t idx = 0;
  std::size_t scale = 1;
  for (int i = 0; i < n.length; ++i) {
    idx += static_cast<std::size_t>(s.symbol(n.k + i)) * scale;
    scale *= static_cast<std::size_t>(d);
  }
  return idx;
}

bool scalar_space(const Space& s) {
  if (s.kind == Space::Kind::circle) return true;
  if (s.kind == Space::Kind::sequence) return s.alphabet == 2;
  if (s.kind == Space::Kind::tagged) {
    return std::all_of(s.parts.begin(), s.parts.end(), [](const Space& p) { return scalar_space(p); });
  }
  return false;
}

Observable finish(NodePtr n) { return make_observable(std::move(n)); }

bool component_level(const Observable::Node& n) {
  return n.kind == ObservableKind::indicator &&
         (std::holds_alternative<ComponentSet>(n.set->v) || std::holds_alternative<TaggedSet>(n.set->v));
}

}  // namespace

// ---------------------------------------------------------------------------
// constructors

Observable Observable::constant(Complex c) {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::constant;
  n->value = c;
  n->sup = std::abs(c);
  n->real = c.imag() == 0.0;
  n->alphabet = std::vector<Complex>{c};
  return finish(n);
}

Observable Observable::coordinate() {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::coordinate;
  n->sup = 1.0;
  return finish(n);
}

Observable Observable::character(std::int64_t k) {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::character;
  n->k = k;
  n->sup = 1.0;
  n->real = k == 0;
  if (k == 0) n->alphabet = std::vector<Complex>{1.0};
  return finish(n);
}

Observable Observable::character_sum(const std::vector<std::pair<std::int64_t, Complex>>& terms) {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::character_sum;
  n->sup = 0.0;
  for (const auto& [k, c] : terms) {
    n->frequencies.push_back(k);
    n->table.push_back(c);
    n->sup += std::abs(c);
  }
  n->real = false;
  return finish(n);
}

Observable Observable::indicator(const MeasurableSet& set) {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::indicator;
  n->set = set;
  n->sup = 1.0;
  n->alphabet = std::vector<Complex>{0.0, 1.0};
  return finish(n);
}

Observable Observable::bit_window(std::int64_t offset, int length, std::vector<Complex> table) {
  if (length < 1 || length > 24) throw Error(ErrorCode::invalid_argument, "bit-window length must be in [1, 24]");
  if (table.empty()) throw Error(ErrorCode::invalid_argument, "bit-window table is empty");
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::bit_window;
  n->k = offset;
  n->length = length;
  n->sup = 0.0;
  for (const auto& v : table) {
    n->sup = std::max(n->sup, std::abs(v));
    n->real = n->real && v.imag() == 0.0;
  }
  n->alphabet = distinct(table);
  n->table = std::move(table);
  return finish(n);
}

Observable Observable::tensor(std::vector<Observable> factors) {
  if (factors.empty()) throw Error(ErrorCode::invalid_argument, "tensor: no factors");
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::tensor;
  n->sup = 1.0;
  bool simple = true;
  for (const auto& f : factors) {
    n->sup *= f.sup_norm();
    n->real = n->real && f.real_valued();
    simple = simple && f.simple();
  }
  if (simple) {
    std::vector<Complex> acc{1.0};
    for (const auto& f : factors) {
      std::vector<Complex> next;
      for (const auto& a : acc)
        for (const auto& b : *f.alphabet()) next.push_back(a * b);
      acc = distinct(next);
      if (acc.size() > kMaxAlphabet) {
        simple = false;
        break;
      }
    }
    if (simple) n->alphabet = acc;
  }
  n->children = std::move(factors);
  return finish(n);
}

Observable Observable::linear(const std::vector<std::pair<Complex, Observable>>& terms) {
  if (terms.empty()) return constant(0.0);
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::linear;
  n->sup = 0.0;
  for (const auto& [c, f] : terms) {
    n->table.push_back(c);
    n->children.push_back(f);
    n->sup += std::abs(c) * f.sup_norm();
    n->real = n->real && c.imag() == 0.0 && f.real_valued();
  }
  return finish(n);
}

Observable Observable::power(double exponent) {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::power;
  n->exponent = exponent;
  n->sup = exponent >= 0 ? 1.0 : kInf;
  return finish(n);
}

Observable Observable::log_coordinate() {
  auto n = std::make_shared<Node>();
  n->kind = ObservableKind::log;
  n->sup = kInf;
  return finish(n);
}

// ---------------------------------------------------------------------------
// queries

ObservableKind Observable::kind() const { return node_->kind; }
double Observable::sup_norm() const { return node_->sup; }
bool Observable::bounded() const { return std::isfinite(node_->sup); }
bool Observable::real_valued() const { return node_->real; }
const std::optional<std::vector<Complex>>& Observable::alphabet() const { return node_->alphabet; }

Complex Observable::operator()(const Point& x) const {
  const Node& n = *node_;
  // Descriptors other than component-level indicators see through a component tag.
  if (n.kind != ObservableKind::constant && !component_level(n)) {
    if (const auto* t = std::get_if<TaggedCoord>(&x.v)) return (*this)(*t->inner);
  }
  switch (n.kind) {
    case ObservableKind::constant: return n.value;
    case ObservableKind::coordinate: return coordinate_of(x);
    case ObservableKind::character: return unit_phase(fixed_coordinate_of(x).times(n.k));
    case ObservableKind::character_sum: {
      const Fixed t = fixed_coordinate_of(x);
      Complex acc = 0.0;
      for (std::size_t i = 0; i < n.frequencies.size(); ++i) acc += n.table[i] * unit_phase(t.times(n.frequencies[i]));
      return acc;
    }
    case ObservableKind::indicator: return contains(*n.set, x) ? 1.0 : 0.0;
    case ObservableKind::bit_window: {
      const auto* s = std::get_if<SeqCoord>(&x.v);
      if (s == nullptr) throw Error(ErrorCode::space_mismatch, "bit-window needs a symbolic point");
      const std::size_t idx = window_index(n, *s);
      if (idx >= n.table.size()) throw Error(ErrorCode::invalid_argument, "bit-window table too short");
      return n.table[idx];
    }
    case ObservableKind::tensor: {
      const auto* t = std::get_if<TupleCoord>(&x.v);
      if (t == nullptr || t->parts.size() != n.children.size()) {
        throw Error(ErrorCode::space_mismatch, "tensor arity does not match the point");
      }
      Complex acc = 1.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) acc *= n.children[i](t->parts[i]);
      return acc;
    }
    case ObservableKind::linear: {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < n.children.size(); ++i) acc += n.table[i] * n.children[i](x);
      return acc;
    }
    case ObservableKind::power: {
      const double v = coordinate_of(x);
      if (v == 0.0 && n.exponent < 0) return kInf;
      return std::pow(v, n.exponent);
    }
    case ObservableKind::log: return std::log(coordinate_of(x));
    case ObservableKind::truncated: {
      const Complex v = n.children[0](x);
      const double m = std::abs(v);
      if (m <= n.level) return v;
      if (n.rule == TruncationRule::indicator) return 0.0;
      if (std::isinf(m)) return std::isinf(v.real()) ? Complex(std::copysign(n.level, v.real()), 0.0) : Complex(0.0);
      return v * (n.level / m);
    }
    case ObservableKind::quantized: return quantize(n.children[0](x), n.level);
  }
  return 0.0;
}

bool Observable::accepts(const Space& space) const {
  const Node& n = *node_;
  if (space.kind == Space::Kind::tagged && n.kind != ObservableKind::constant && !component_level(n)) {
    return std::all_of(space.parts.begin(), space.parts.end(), [&](const Space& p) { return accepts(p); });
  }
  switch (n.kind) {
    case ObservableKind::constant: return true;
    case ObservableKind::coordinate:
    case ObservableKind::character:
    case ObservableKind::character_sum:
    case ObservableKind::power:
    case ObservableKind::log: return scalar_space(space);
    case ObservableKind::indicator:
      return std::visit(
          [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IntervalUnion>) return scalar_space(space);
            else if constexpr (std::is_same_v<T, Cylinder> || std::is_same_v<T, CylinderUnion>)
              return space.kind == Space::Kind::sequence;
            else return space.kind == Space::Kind::tagged;
          },
          n.set->v);
    case ObservableKind::bit_window: {
      if (space.kind != Space::Kind::sequence) return false;
      if (!space.two_sided && n.k < 0) return false;
      std::size_t need = 1;
      for (int i = 0; i < n.length; ++i) need *= static_cast<std::size_t>(space.alphabet);
      return n.table.size() >= need;
    }
    case ObservableKind::tensor: {
      if (space.kind != Space::Kind::tuple || space.parts.size() != n.children.size()) return false;
      for (std::size_t i = 0; i < n.children.size(); ++i)
        if (!n.children[i].accepts(space.parts[i])) return false;
      return true;
    }
    case ObservableKind::linear:
    case ObservableKind::truncated:
    case ObservableKind::quantized:
      return std::all_of(n.children.begin(), n.children.end(), [&](const Observable& c) { return c.accepts(space); });
  }
  return false;
}

std::string Observable::describe() const {
  const Node& n = *node_;
  std::ostringstream os;
  switch (n.kind) {
    case ObservableKind::constant: os << "const(" << n.value.real() << "," << n.value.imag() << ")"; break;
    case ObservableKind::coordinate: os << "x"; break;
    case ObservableKind::character: os << "e(" << n.k << "x)"; break;
    case ObservableKind::character_sum: os << "charsum[" << n.frequencies.size() << "]"; break;
    case ObservableKind::indicator: os << "1_A"; break;
    case ObservableKind::bit_window: os << "window(" << n.k << "," << n.length << ")"; break;
    case ObservableKind::tensor: {
      os << "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) os << (i ? " (x) " : "") << n.children[i].describe();
      os << ")";
      break;
    }
    case ObservableKind::linear: {
      os << "(";
      for (std::size_t i = 0; i < n.children.size(); ++i)
        os << (i ? " + " : "") << "(" << n.table[i].real() << "," << n.table[i].imag() << ")*"
           << n.children[i].describe();
      os << ")";
      break;
    }
    case ObservableKind::power: os << "x^" << n.exponent; break;
    case ObservableKind::log: os << "log(x)"; break;
    case ObservableKind::truncated: os << "trunc_" << n.level << "(" << n.children[0].describe() << ")"; break;
    case ObservableKind::quantized: os << "quant_" << n.level << "(" << n.children[0].describe() << ")"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// approximation

Observable simple_approx(const Observable& f, std::uint64_t k) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "simple_approx: k must be positive");
  if (!f.bounded()) throw Error(ErrorCode::precondition_violation, "simple_approx: observable is unbounded");
  const double kd = static_cast<double>(k);
  const auto& src = f.node();
  // Finite-valued descriptors keep their shape; only the values move to the grid.
  if (src.kind == ObservableKind::constant) return Observable::constant(quantize(src.value, kd));
  if (src.kind == ObservableKind::bit_window) {
    std::vector<Complex> table;
    for (const auto& v : src.table) table.push_back(quantize(v, kd));
    return Observable::bit_window(src.k, src.length, std::move(table));
  }
  auto n = std::make_shared<Observable::Node>();
  n->kind = ObservableKind::quantized;
  n->level = kd;
  n->children = {f};
  n->real = f.real_valued();
  const double m = std::ceil(kd * f.sup_norm());
  n->sup = f.real_valued() ? m / kd : std::hypot(m, m) / kd;
  if (f.simple()) {
    std::vector<Complex> vals;
    for (const auto& v : *f.alphabet()) vals.push_back(quantize(v, kd));
    n->alphabet = distinct(vals);
  } else {
    const auto mi = static_cast<std::int64_t>(m);
    std::vector<Complex> grid;
    for (std::int64_t j = -mi; j <= mi; ++j) {
      if (f.real_valued()) {
        grid.emplace_back(static_cast<double>(j) / kd, 0.0);
        continue;
      }
      for (std::int64_t l = -mi; l <= mi; ++l) grid.emplace_back(static_cast<double>(j) / kd, static_cast<double>(l) / kd);
    }
    n->alphabet = std::move(grid);
  }
  return finish(n);
}

Observable truncate(const Observable& g, double k, TruncationRule rule) {
  if (!(k > 0) || !std::isfinite(k)) throw Error(ErrorCode::invalid_argument, "truncate: level must be positive and finite");
  auto n = std::make_shared<Observable::Node>();
  n->kind = ObservableKind::truncated;
  n->level = k;
  n->rule = rule;
  n->children = {g};
  n->real = g.real_valued();
  n->sup = std::min(k, g.sup_norm());
  if (g.simple() && rule == TruncationRule::indicator) {
    std::vector<Complex> vals{0.0};
    for (const auto& v : *g.alphabet())
      if (std::abs(v) <= k) vals.push_back(v);
    n->alphabet = distinct(vals);
  } else if (g.simple()) {
    std::vector<Complex> vals;
    for (const auto& v : *g.alphabet()) vals.push_back(std::abs(v) <= k ? v : v * (k / std::abs(v)));
    n->alphabet = distinct(vals);
  }
  return finish(n);
}

std::optional<double> truncation_l1_error(const Observable& g, double k, TruncationRule rule) {
  const auto& n = g.node();
  if (n.kind != ObservableKind::power) return std::nullopt;
  const double s = n.exponent;
  if (s >= 0) {
    if (k >= 1.0) return 0.0;
    return std::nullopt;
  }
  if (s <= -1) return std::nullopt;
  // g > k exactly on (0, t) with t = k^{1/s}
  const double t = std::pow(k, 1.0 / s);
  if (t >= 1.0) return std::nullopt;
  const double tail = std::pow(t, s + 1) / (s + 1);
  return rule == TruncationRule::indicator ? tail : tail - k * t;
}

std::optional<double> l1_norm(const Observable& g) {
  const auto& n = g.node();
  if (n.kind == ObservableKind::power) {
    if (n.exponent <= -1) return std::nullopt;
    return 1.0 / (n.exponent + 1.0);
  }
  if (n.kind == ObservableKind::log) return 1.0;
  if (g.bounded()) return g.sup_norm();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// integration

namespace {

std::optional<Complex> integrate_window(const Observable::Node& n, const System& gen) {
  const bool iid = gen.kind() != SystemKind::markov;
  const std::size_t d = iid ? 2 : gen.markov_matrix().size();
  std::size_t words = 1;
  for (int i = 0; i < n.length; ++i) words *= d;
  if (words > (1u << 20)) return std::nullopt;
  Complex acc = 0.0;
  for (std::size_t w = 0; w < words; ++w) {
    std::size_t rest = w;
    double prob = 1.0;
    std::size_t prev = 0;
    for (int i = 0; i < n.length; ++i) {
      const std::size_t s = rest % d;
      rest /= d;
      if (iid) {
        const double p = to_double(gen.bernoulli_p());
        prob *= s == 1 ? p : 1.0 - p;
      } else if (i == 0) {
        prob *= to_double(gen.stationary()[s]);
      } else {
        prob *= to_double(gen.markov_matrix()[prev][s]);
      }
      prev = s;
    }
    if (w < n.table.size()) acc += prob * n.table[w];
  }
  return acc;
}

const System& generator_of(const System& sys) {
  return sys.kind() == SystemKind::natural_extension ? sys.base() : sys;
}

bool sequence_system(const System& s) {
  switch (s.kind()) {
    case SystemKind::doubling:
    case SystemKind::bernoulli:
    case SystemKind::markov:
    case SystemKind::natural_extension: return true;
    default: return false;
  }
}

}  // namespace

std::optional<Complex> integrate(const Observable& f, const System& sys) {
  const auto& n = f.node();
  if (n.kind == ObservableKind::constant) return n.value;
  if (n.kind == ObservableKind::indicator) {
    try {
      return to_double(sys.measure(*n.set));
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  if (n.kind == ObservableKind::linear || n.kind == ObservableKind::character_sum) {
    Complex acc = 0.0;
    if (n.kind == ObservableKind::character_sum) {
      for (std::size_t i = 0; i < n.frequencies.size(); ++i) {
        const auto v = integrate(Observable::character(n.frequencies[i]), sys);
        if (!v) return std::nullopt;
        acc += n.table[i] * *v;
      }
      return acc;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const auto v = integrate(n.children[i], sys);
      if (!v) return std::nullopt;
      acc += n.table[i] * *v;
    }
    return acc;
  }
  if (sys.kind() == SystemKind::disjoint_union) {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < sys.parts().size(); ++i) {
      const auto v = integrate(f, sys.parts()[i]);
      if (!v) return std::nullopt;
      acc += to_double(sys.weights()[i]) * *v;
    }
    return acc;
  }
  if (sys.kind() == SystemKind::restricted) return std::nullopt;
  if (n.kind == ObservableKind::tensor) {
    std::vector<System> factors;
    if (sys.kind() == SystemKind::product) {
      factors = sys.parts();
    } else if (sys.kind() == SystemKind::eigen_product) {
      factors = {System::rotation(sys.angle()), sys.base()};
    } else {
      return std::nullopt;
    }
    if (factors.size() != n.children.size()) return std::nullopt;
    Complex acc = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const auto v = integrate(n.children[i], factors[i]);
      if (!v) return std::nullopt;
      acc *= *v;
    }
    return acc;
  }
  const bool circle = sys.kind() == SystemKind::rotation;
  const bool seq = sequence_system(sys);
  if (!circle && !seq) return std::nullopt;
  const System& gen = seq ? generator_of(sys) : sys;
  switch (n.kind) {
    case ObservableKind::coordinate: {
      if (circle) return 0.5;
      // mean of the 64-bit binary coordinate: sum_k P(s_k = 1) 2^{-k-1}
      if (gen.kind() == SystemKind::markov) {
        if (gen.markov_matrix().size() != 2) return std::nullopt;
        return to_double(gen.stationary()[1]) * (1.0 - 0x1.0p-64);
      }
      return to_double(gen.bernoulli_p()) * (1.0 - 0x1.0p-64);
    }
    case ObservableKind::character: {
      if (n.k == 0) return 1.0;
      if (circle) return 0.0;
      if (gen.kind() == SystemKind::markov) return std::nullopt;
      const double p = to_double(gen.bernoulli_p());
      Complex acc = 1.0;
      for (int j = 0; j < 64; ++j) {
        const Fixed t = Fixed::from_parts(std::uint64_t{1} << (63 - j), 0).times(n.k);
        acc *= (1.0 - p) + p * unit_phase(t);
      }
      return acc;
    }
    case ObservableKind::bit_window:
      if (!seq) return std::nullopt;
      return integrate_window(n, gen);
    case ObservableKind::power:
      if (n.exponent <= -1) return std::nullopt;
      return 1.0 / (n.exponent + 1.0);
    case ObservableKind::log: return -1.0;
    case ObservableKind::truncated: {
      const auto& inner = n.children[0].node();
      if (inner.kind == ObservableKind::power && inner.exponent < 0 && inner.exponent > -1) {
        const double s = inner.exponent;
        const double t = std::min(1.0, std::pow(n.level, 1.0 / s));
        const double kept = (1.0 - std::pow(t, s + 1)) / (s + 1);
        return n.rule == TruncationRule::indicator ? kept : kept + n.level * t;
      }
      if (n.children[0].sup_norm() <= n.level) return integrate(n.children[0], sys);
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Kronecker split

namespace {

bool rotation_like(const System& s) { return s.kind() == SystemKind::rotation; }

// Projection onto (functions of the rotation factor) tensor constants.
Observable project_mixed(const Observable& f, const std::vector<System>& factors, std::size_t rot) {
  const auto& n = f.node();
  switch (n.kind) {
    case ObservableKind::constant: return f;
    case ObservableKind::tensor: {
      if (n.children.size() != factors.size()) throw Error(ErrorCode::space_mismatch, "tensor arity");
      Complex scale = 1.0;
      std::vector<Observable> out;
      for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i == rot) {
          out.push_back(n.children[i]);
          continue;
        }
        const auto m = integrate(n.children[i], factors[i]);
        if (!m) throw Error(ErrorCode::unsupported_system, "kronecker_split: no closed-form mean for a factor");
        scale *= *m;
        out.push_back(Observable::constant(1.0));
      }
      out[rot] = Observable::linear({{scale, out[rot]}});
      return Observable::tensor(std::move(out));
    }
    case ObservableKind::linear: {
      std::vector<std::pair<Complex, Observable>> terms;
      for (std::size_t i = 0; i < n.children.size(); ++i)
        terms.emplace_back(n.table[i], project_mixed(n.children[i], factors, rot));
      return Observable::linear(terms);
    }
    default:
      throw Error(ErrorCode::unsupported_system,
                  "kronecker_split: on product systems only tensor and linear descriptors are projected");
  }
}

}  // namespace

KroneckerSplit kronecker_split(const Observable& f, const System& sys, std::uint64_t samples) {
  if (!f.accepts(sys.space())) throw Error(ErrorCode::space_mismatch, "kronecker_split: observable/system mismatch");
  Observable f1 = f;
  std::vector<Observable> eigenfunctions;
  if (sys.kind() == SystemKind::rotation) {
    f1 = f;
  } else if (sys.mixing()) {
    const auto m = integrate(f, sys);
    if (!m) throw Error(ErrorCode::unsupported_system, "kronecker_split: no closed-form mean");
    f1 = Observable::constant(*m);
    eigenfunctions.push_back(Observable::constant(1.0));
  } else if (sys.kind() == SystemKind::product || sys.kind() == SystemKind::eigen_product) {
    std::vector<System> factors =
        sys.kind() == SystemKind::product ? sys.parts() : std::vector<System>{System::rotation(sys.angle()), sys.base()};
    std::size_t rot = factors.size();
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (rotation_like(factors[i])) {
        if (rot != factors.size()) throw Error(ErrorCode::unsupported_system, "kronecker_split: more than one rotation");
        rot = i;
      } else if (!factors[i].mixing()) {
        throw Error(ErrorCode::unsupported_system, "kronecker_split: non-mixing factor");
      }
    }
    if (rot == factors.size()) throw Error(ErrorCode::unsupported_system, "kronecker_split: no rotation factor");
    f1 = project_mixed(f, factors, rot);
    for (std::int64_t k = -3; k <= 3; ++k) {
      std::vector<Observable> e(factors.size(), Observable::constant(1.0));
      e[rot] = Observable::character(k);
      eigenfunctions.push_back(Observable::tensor(std::move(e)));
    }
  } else {
    throw Error(ErrorCode::unsupported_system, "kronecker_split: unsupported system structure");
  }
  Observable f2 = Observable::linear({{1.0, f}, {-1.0, f1}});
  double residual = 0.0;
  if (!eigenfunctions.empty() && samples > 0) {
    for (const auto& e : eigenfunctions) {
      Complex acc = 0.0;
      for (std::uint64_t i = 0; i < samples; ++i) {
        const Point x = sys.sample(i);
        acc += f2(x) * std::conj(e(x));
      }
      residual += std::norm(acc / static_cast<double>(samples));
    }
    residual = std::sqrt(residual);
  }
  return {f1, f2, residual};
}

// ---------------------------------------------------------------------------
// orbits

void check_compatible(const System& sys, const Point& x, const Observable& f) {
  if (!sys.in_space(x)) throw Error(ErrorCode::space_mismatch, "point is not in the system's state space");
  if (!f.accepts(sys.space())) throw Error(ErrorCode::space_mismatch, "observable is not defined on the system's state space");
}

std::vector<Complex> orbit(const System& sys, const Point& x, const Observable& f, std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "orbit: N must be positive");
  check_compatible(sys, x, f);
  std::vector<Complex> out;
  out.reserve(n);
  Point p = x;
  for (std::uint64_t i = 0; i < n; ++i) {
    sys.step(p);
    out.push_back(f(p));
  }
  return out;
}

}  // namespace ergolab
