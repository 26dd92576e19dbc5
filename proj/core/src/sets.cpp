#include "ergolab/sets.hpp"

#include <algorithm>
#include <limits>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

constexpr u128 kMax = ~u128{0};

}  // namespace

Interval Interval::from_doubles(double lo, double hi) { return {Fixed::from_double(lo), Fixed::from_double(hi)}; }

IntervalUnion::IntervalUnion(const std::vector<Interval>& arcs) {
  std::vector<Range> ranges;
  for (const auto& a : arcs) {
    const u128 lo = a.lo.raw();
    const u128 hi = a.hi.raw();
    if (hi == 0) {
      ranges.emplace_back(lo, kMax);
    } else if (hi > lo) {
      ranges.emplace_back(lo, hi - 1);
    } else {
      ranges.emplace_back(lo, kMax);
      ranges.emplace_back(0, hi - 1);
    }
  }
  *this = from_ranges(std::move(ranges));
}

IntervalUnion IntervalUnion::full() { return from_ranges({{0, kMax}}); }

IntervalUnion IntervalUnion::from_ranges(std::vector<Range> ranges) {
  std::sort(ranges.begin(), ranges.end());
  IntervalUnion out;
  for (const auto& r : ranges) {
    if (!out.ranges_.empty()) {
      auto& back = out.ranges_.back();
      if (back.second == kMax || r.first <= back.second + 1) {
        back.second = std::max(back.second, r.second);
        continue;
      }
    }
    out.ranges_.push_back(r);
  }
  return out;
}

bool IntervalUnion::contains(Fixed x) const {
  const u128 v = x.raw();
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), v,
                             [](u128 value, const Range& r) { return value < r.first; });
  if (it == ranges_.begin()) return false;
  --it;
  return v <= it->second;
}

Rational IntervalUnion::measure() const {
  BigInt total = 0;
  for (const auto& [first, last] : ranges_) {
    BigInt len = BigInt(static_cast<std::uint64_t>(last >> 64)) << 64;
    len += static_cast<std::uint64_t>(last);
    BigInt start = BigInt(static_cast<std::uint64_t>(first >> 64)) << 64;
    start += static_cast<std::uint64_t>(first);
    total += len - start + 1;
  }
  return Rational(total, BigInt(1) << 128);
}

std::vector<Interval> IntervalUnion::intervals() const {
  std::vector<Interval> out;
  out.reserve(ranges_.size());
  for (const auto& [first, last] : ranges_) {
    out.push_back({Fixed::from_raw(first), Fixed::from_raw(last + 1)});
  }
  return out;
}

IntervalUnion IntervalUnion::shifted(Fixed t) const {
  std::vector<Range> out;
  out.reserve(ranges_.size() + 1);
  for (const auto& [first, last] : ranges_) {
    if (first == 0 && last == kMax) {
      out.emplace_back(0, kMax);
      continue;
    }
    const u128 a = first + t.raw();
    const u128 b = last + t.raw();
    if (a <= b) {
      out.emplace_back(a, b);
    } else {
      out.emplace_back(a, kMax);
      out.emplace_back(0, b);
    }
  }
  return from_ranges(std::move(out));
}

IntervalUnion IntervalUnion::unite(const IntervalUnion& o) const {
  std::vector<Range> all = ranges_;
  all.insert(all.end(), o.ranges_.begin(), o.ranges_.end());
  return from_ranges(std::move(all));
}

IntervalUnion IntervalUnion::intersect(const IntervalUnion& o) const {
  std::vector<Range> out;
  std::size_t i = 0, j = 0;
  while (i < ranges_.size() && j < o.ranges_.size()) {
    const u128 lo = std::max(ranges_[i].first, o.ranges_[j].first);
    const u128 hi = std::min(ranges_[i].second, o.ranges_[j].second);
    if (lo <= hi) out.emplace_back(lo, hi);
    if (ranges_[i].second < o.ranges_[j].second) {
      ++i;
    } else {
      ++j;
    }
  }
  return from_ranges(std::move(out));
}

IntervalUnion IntervalUnion::complement() const {
  std::vector<Range> out;
  u128 cursor = 0;
  bool done = false;
  for (const auto& [first, last] : ranges_) {
    if (first > cursor) out.emplace_back(cursor, first - 1);
    if (last == kMax) {
      done = true;
      break;
    }
    cursor = last + 1;
  }
  if (!done) out.emplace_back(cursor, kMax);
  return from_ranges(std::move(out));
}

ComponentSet ComponentSet::of(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ComponentSet{std::move(ids)};
}

bool TaggedSet::operator==(const TaggedSet& o) const {
  if (component != o.component) return false;
  if (!inner || !o.inner) return !inner && !o.inner;
  return *inner == *o.inner;
}

MeasurableSet MeasurableSet::tagged(int component, MeasurableSet inner) {
  return {TaggedSet{component, std::make_shared<const MeasurableSet>(std::move(inner))}};
}

namespace {

bool in_cylinder(const Cylinder& c, const SeqCoord& s) {
  for (std::size_t k = 0; k < c.word.size(); ++k) {
    if (s.symbol(c.offset + static_cast<std::int64_t>(k)) != c.word[k]) return false;
  }
  return true;
}

const SeqCoord& as_sequence(const Point& x) {
  const auto* s = std::get_if<SeqCoord>(&x.v);
  if (s == nullptr) throw Error(ErrorCode::space_mismatch, "cylinder membership needs a symbolic point");
  return *s;
}

}  // namespace

bool contains(const MeasurableSet& set, const Point& x) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IntervalUnion>) {
          if (const auto* c = std::get_if<CircleCoord>(&x.v)) return s.contains(c->value);
          if (const auto* q = std::get_if<SeqCoord>(&x.v)) return s.contains(q->binary_coordinate());
          throw Error(ErrorCode::space_mismatch, "interval membership needs a circle or binary point");
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          return in_cylinder(s, as_sequence(x));
        } else if constexpr (std::is_same_v<T, CylinderUnion>) {
          const SeqCoord& q = as_sequence(x);
          return std::any_of(s.parts.begin(), s.parts.end(), [&](const Cylinder& c) { return in_cylinder(c, q); });
        } else if constexpr (std::is_same_v<T, ComponentSet>) {
          const auto* t = std::get_if<TaggedCoord>(&x.v);
          if (t == nullptr) throw Error(ErrorCode::space_mismatch, "component set needs a tagged point");
          return std::binary_search(s.ids.begin(), s.ids.end(), t->component);
        } else {
          const auto* t = std::get_if<TaggedCoord>(&x.v);
          if (t == nullptr) throw Error(ErrorCode::space_mismatch, "tagged set needs a tagged point");
          return t->component == s.component && contains(*s.inner, *t->inner);
        }
      },
      set.v);
}

}  // namespace ergolab
