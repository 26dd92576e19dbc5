#include "ergolab/point.hpp"

#include <algorithm>

#include "ergolab/error.hpp"
#include "ergolab/random.hpp"

namespace ergolab {

namespace {

int draw(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) return static_cast<int>(cumulative.size()) - 1;
  return static_cast<int>(it - cumulative.begin());
}

// Markov transitions and the initial draw use disjoint counters.
constexpr std::uint64_t kInitialStream = 0x5EED1417A1ULL;

}  // namespace

int SymbolSource::iid_symbol(std::uint64_t seed, std::int64_t index) const {
  if (kind == Kind::fair) return static_cast<int>(fair_bit(seed, index));
  return uniform01(seed, index) < p_one ? 1 : 0;
}

int SymbolSource::markov_initial(std::uint64_t seed) const {
  return draw(initial_cumulative, uniform01(derive_seed(seed, kInitialStream), 0));
}

int SymbolSource::markov_next(int state, std::uint64_t seed, std::int64_t index) const {
  return draw(cumulative[static_cast<std::size_t>(state)], uniform01(seed, index));
}

std::shared_ptr<const SymbolSource> fair_source() {
  static const auto kFair = std::make_shared<const SymbolSource>();
  return kFair;
}

std::shared_ptr<const SymbolSource> bernoulli_source(double p_one) {
  auto s = std::make_shared<SymbolSource>();
  s->kind = SymbolSource::Kind::bernoulli;
  s->p_one = p_one;
  return s;
}

std::shared_ptr<const SymbolSource> markov_source(const std::vector<std::vector<double>>& matrix,
                                                  const std::vector<double>& stationary) {
  auto s = std::make_shared<SymbolSource>();
  s->kind = SymbolSource::Kind::markov;
  s->alphabet = static_cast<int>(matrix.size());
  auto cumulate = [](const std::vector<double>& row) {
    std::vector<double> c(row.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      acc += row[i];
      c[i] = acc;
    }
    c.back() = 2.0;  // absorbs rounding so every u in [0,1) lands somewhere
    return c;
  };
  for (const auto& row : matrix) s->cumulative.push_back(cumulate(row));
  s->initial_cumulative = cumulate(stationary);
  return s;
}

int SeqCoord::symbol(std::int64_t offset) const {
  if (!two_sided && offset < 0) {
    throw Error(ErrorCode::invalid_argument, "one-sided point read before its cursor");
  }
  if (source->iid()) return source->iid_symbol(seed, cursor + offset);
  if (offset < 0) {
    throw Error(ErrorCode::unsupported_system, "markov streams are read forward only");
  }
  int s = state;
  for (std::int64_t k = 1; k <= offset; ++k) s = source->markov_next(s, seed, cursor + k);
  return s;
}

std::uint64_t SeqCoord::window64() const {
  if (source->alphabet != 2) {
    throw Error(ErrorCode::space_mismatch, "binary window requires a two-symbol alphabet");
  }
  if (source->kind == SymbolSource::Kind::fair) return fair_window(seed, cursor);
  std::uint64_t w = 0;
  if (source->iid()) {
    for (int k = 0; k < 64; ++k) w |= static_cast<std::uint64_t>(source->iid_symbol(seed, cursor + k)) << k;
    return w;
  }
  int s = state;
  w = static_cast<std::uint64_t>(s);
  for (int k = 1; k < 64; ++k) {
    s = source->markov_next(s, seed, cursor + k);
    w |= static_cast<std::uint64_t>(s) << k;
  }
  return w;
}

Fixed SeqCoord::binary_coordinate() const { return Fixed::from_parts(bit_reverse64(window64()), 0); }

bool TupleCoord::operator==(const TupleCoord& o) const { return parts == o.parts; }

TaggedCoord::TaggedCoord(int c, Point p) : component(c), inner(std::make_unique<Point>(std::move(p))) {}
TaggedCoord::TaggedCoord(const TaggedCoord& o)
    : component(o.component), inner(o.inner ? std::make_unique<Point>(*o.inner) : nullptr) {}
TaggedCoord& TaggedCoord::operator=(const TaggedCoord& o) {
  if (this != &o) {
    component = o.component;
    inner = o.inner ? std::make_unique<Point>(*o.inner) : nullptr;
  }
  return *this;
}
TaggedCoord::~TaggedCoord() = default;
bool TaggedCoord::operator==(const TaggedCoord& o) const {
  if (component != o.component) return false;
  if (!inner || !o.inner) return !inner && !o.inner;
  return *inner == *o.inner;
}

Point Point::tuple(std::vector<Point> parts) { return Point{TupleCoord{std::move(parts)}}; }
Point Point::tagged(int component, Point inner) { return Point{TaggedCoord(component, std::move(inner))}; }

std::uint64_t bit_reverse64(std::uint64_t x) {
  x = ((x >> 1) & 0x5555555555555555ULL) | ((x & 0x5555555555555555ULL) << 1);
  x = ((x >> 2) & 0x3333333333333333ULL) | ((x & 0x3333333333333333ULL) << 2);
  x = ((x >> 4) & 0x0F0F0F0F0F0F0F0FULL) | ((x & 0x0F0F0F0F0F0F0F0FULL) << 4);
  x = ((x >> 8) & 0x00FF00FF00FF00FFULL) | ((x & 0x00FF00FF00FF00FFULL) << 8);
  x = ((x >> 16) & 0x0000FFFF0000FFFFULL) | ((x & 0x0000FFFF0000FFFFULL) << 16);
  return (x >> 32) | (x << 32);
}

}  // namespace ergolab
