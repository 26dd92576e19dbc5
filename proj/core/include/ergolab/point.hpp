// Points of the implemented state spaces.
//
// Symbolic points carry their generator (a shared immutable SymbolSource) and a
// seed, so any symbol is recomputable from (seed, index) alone.

#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "ergolab/fixed.hpp"

namespace ergolab {

struct SymbolSource {
  enum class Kind { fair, bernoulli, markov };

  Kind kind = Kind::fair;
  int alphabet = 2;
  double p_one = 0.5;                            // bernoulli: P(symbol == 1)
  std::vector<std::vector<double>> cumulative;   // markov transition rows
  std::vector<double> initial_cumulative;        // markov stationary law

  bool iid() const { return kind != Kind::markov; }
  int iid_symbol(std::uint64_t seed, std::int64_t index) const;
  int markov_initial(std::uint64_t seed) const;
  int markov_next(int state, std::uint64_t seed, std::int64_t index) const;
  bool operator==(const SymbolSource&) const = default;
};

std::shared_ptr<const SymbolSource> fair_source();
std::shared_ptr<const SymbolSource> bernoulli_source(double p_one);
std::shared_ptr<const SymbolSource> markov_source(const std::vector<std::vector<double>>& matrix,
                                                  const std::vector<double>& stationary);

struct CircleCoord {
  Fixed value;
  bool operator==(const CircleCoord&) const = default;
};

/// Position `cursor` in a symbol stream. One-sided points only read indices at
/// or after the cursor; two-sided points may read anywhere.
struct SeqCoord {
  std::shared_ptr<const SymbolSource> source;
  std::uint64_t seed = 0;
  std::int64_t cursor = 0;
  int state = 0;  // markov: symbol at the cursor
  bool two_sided = false;

  int symbol(std::int64_t offset) const;
  /// 64 binary symbols from the cursor; bit k holds symbol(k).
  std::uint64_t window64() const;
  /// Binary expansion 0.s_0 s_1 ... s_63 as a circle coordinate.
  Fixed binary_coordinate() const;

  bool operator==(const SeqCoord& o) const {
    return (source == o.source || (source && o.source && *source == *o.source)) && seed == o.seed && cursor == o.cursor && state == o.state &&
           two_sided == o.two_sided;
  }
};

struct Point;

struct TupleCoord {
  std::vector<Point> parts;
  bool operator==(const TupleCoord& o) const;
};

struct TaggedCoord {
  int component = 0;
  std::unique_ptr<Point> inner;

  TaggedCoord() = default;
  TaggedCoord(int c, Point p);
  TaggedCoord(const TaggedCoord& o);
  TaggedCoord(TaggedCoord&&) noexcept = default;
  TaggedCoord& operator=(const TaggedCoord& o);
  TaggedCoord& operator=(TaggedCoord&&) noexcept = default;
  ~TaggedCoord();
  bool operator==(const TaggedCoord& o) const;
};

struct Point {
  std::variant<CircleCoord, SeqCoord, TupleCoord, TaggedCoord> v;

  static Point circle(Fixed x) { return Point{CircleCoord{x}}; }
  static Point tuple(std::vector<Point> parts);
  static Point tagged(int component, Point inner);

  bool operator==(const Point& o) const { return v == o.v; }
};

std::uint64_t bit_reverse64(std::uint64_t x);

}  // namespace ergolab
