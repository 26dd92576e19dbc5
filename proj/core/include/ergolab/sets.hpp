// Measurable sets with exact measure arithmetic.

#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include "ergolab/fixed.hpp"
#include "ergolab/point.hpp"
#include "ergolab/rational.hpp"

namespace ergolab {

/// Half-open arc [lo, hi) of the circle; hi == 0 stands for 1.
struct Interval {
  Fixed lo;
  Fixed hi;

  static Interval from_doubles(double lo, double hi);
};

/// Finite disjoint union of half-open arcs, kept sorted and merged.
/// Stored as inclusive raw ranges [first, last] so that the full circle fits
/// in 128 bits.
class IntervalUnion {
 public:
  IntervalUnion() = default;
  /// Arcs with hi <= lo (and hi != 0) wrap through 0.
  explicit IntervalUnion(const std::vector<Interval>& arcs);
  static IntervalUnion full();

  bool empty() const { return ranges_.empty(); }
  bool contains(Fixed x) const;
  Rational measure() const;
  /// Sorted disjoint arcs, with an arc ending at 1 reported as hi == 0.
  std::vector<Interval> intervals() const;

  IntervalUnion shifted(Fixed t) const;
  IntervalUnion unite(const IntervalUnion& o) const;
  IntervalUnion intersect(const IntervalUnion& o) const;
  IntervalUnion complement() const;

  bool operator==(const IntervalUnion&) const = default;

 private:
  using Range = std::pair<u128, u128>;
  static IntervalUnion from_ranges(std::vector<Range> ranges);
  std::vector<Range> ranges_;
};

/// {y : y_{offset + k} = word[k] for all k}.
struct Cylinder {
  std::int64_t offset = 0;
  std::vector<int> word;
  bool operator==(const Cylinder&) const = default;
};

struct CylinderUnion {
  std::vector<Cylinder> parts;
  bool operator==(const CylinderUnion&) const = default;
};

/// Union of whole components of a disjoint-union system.
struct ComponentSet {
  std::vector<int> ids;  // sorted, unique
  static ComponentSet of(std::vector<int> ids);
  bool operator==(const ComponentSet&) const = default;
};

struct MeasurableSet;

/// A set living inside one component of a disjoint union.
struct TaggedSet {
  int component = 0;
  std::shared_ptr<const MeasurableSet> inner;
  bool operator==(const TaggedSet& o) const;
};

struct MeasurableSet {
  std::variant<IntervalUnion, Cylinder, CylinderUnion, ComponentSet, TaggedSet> v;

  static MeasurableSet arc(double lo, double hi) { return {IntervalUnion({Interval::from_doubles(lo, hi)})}; }
  static MeasurableSet tagged(int component, MeasurableSet inner);

  bool operator==(const MeasurableSet&) const = default;
};

bool contains(const MeasurableSet& set, const Point& x);

}  // namespace ergolab
