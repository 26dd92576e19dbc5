// 128-bit fixed-point fractions of the unit circle.
//
// A Fixed holds raw / 2^128 with raw an unsigned 128-bit integer, so every
// value lies in [0, 1) and addition wraps modulo 1 for free. Rotation orbits
// built on it never drift: n applications of x -> x + a equal x + n*a exactly.

#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>

namespace ergolab {

using u128 = unsigned __int128;

class Fixed {
 public:
  constexpr Fixed() = default;

  static constexpr Fixed from_raw(u128 raw) { return Fixed(raw); }
  static constexpr Fixed from_parts(std::uint64_t hi, std::uint64_t lo) {
    return Fixed((static_cast<u128>(hi) << 64) | lo);
  }
  /// Reduces v modulo 1 and rounds toward zero at 2^-128 resolution.
  static Fixed from_double(double v);
  /// floor(num * 2^128 / den), num < den required.
  static Fixed ratio(std::uint64_t num, std::uint64_t den);
  /// Exactly 32 hex digits, most significant first.
  static Fixed from_hex(std::string_view hex);

  constexpr u128 raw() const { return raw_; }
  constexpr std::uint64_t hi() const { return static_cast<std::uint64_t>(raw_ >> 64); }
  constexpr std::uint64_t lo() const { return static_cast<std::uint64_t>(raw_); }

  double to_double() const;
  long double to_long_double() const;
  std::string to_hex() const;

  constexpr Fixed operator+(Fixed o) const { return Fixed(raw_ + o.raw_); }
  constexpr Fixed operator-(Fixed o) const { return Fixed(raw_ - o.raw_); }
  constexpr Fixed operator-() const { return Fixed(u128{0} - raw_); }
  constexpr Fixed& operator+=(Fixed o) {
    raw_ += o.raw_;
    return *this;
  }
  constexpr Fixed& operator-=(Fixed o) {
    raw_ -= o.raw_;
    return *this;
  }
  /// n * x mod 1, exact.
  constexpr Fixed times(std::int64_t n) const {
    return Fixed(raw_ * static_cast<u128>(static_cast<__int128>(n)));
  }

  constexpr auto operator<=>(const Fixed&) const = default;
  constexpr bool operator==(const Fixed&) const = default;

 private:
  constexpr explicit Fixed(u128 raw) : raw_(raw) {}
  u128 raw_ = 0;
};

/// Rotation angle with an explicit rationality tag. Every Fixed is a dyadic
/// rational, so irrational angles are truncations of known irrationals and are
/// flagged as such when built; the tag is what ergodicity flags consult.
struct Angle {
  Fixed value;
  bool irrational = false;

  static Angle rational(Fixed v) { return {v, false}; }
  /// Fractional part of the golden ratio, (sqrt(5) - 1) / 2.
  static Angle golden();
  /// sqrt(2) - 1.
  static Angle silver();
  /// Fractional part of sqrt(n) for non-square n.
  static Angle sqrt_frac(std::uint64_t n);

  bool operator==(const Angle&) const = default;
};

/// e^{2 pi i t}. Uses the symmetric representative in [-1/2, 1/2) so the
/// argument passed to the trig routines is as small as possible.
std::complex<double> unit_phase(Fixed t);

/// Exact test: is n * t == 0 mod 1 for some 1 <= n <= max_order.
bool is_root_of_unity(Fixed t, std::uint64_t max_order);

}  // namespace ergolab
