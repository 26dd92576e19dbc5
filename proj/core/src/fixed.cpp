#include "ergolab/fixed.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numbers>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

using boost::multiprecision::cpp_int;

constexpr long double kTwoPow64 = 18446744073709551616.0L;

u128 to_u128(const cpp_int& v) {
  const cpp_int mask64 = (cpp_int(1) << 64) - 1;
  const auto lo = static_cast<std::uint64_t>(v & mask64);
  const auto hi = static_cast<std::uint64_t>((v >> 64) & mask64);
  return (static_cast<u128>(hi) << 64) | lo;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Fixed Fixed::from_double(double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::invalid_argument, "Fixed::from_double: non-finite value");
  }
  double frac = v - std::floor(v);
  if (frac >= 1.0) frac = 0.0;
  // frac has at most 53 significant bits, so two 64-bit limbs capture it exactly.
  const long double hi_part = std::floor(static_cast<long double>(frac) * kTwoPow64);
  const long double rest = static_cast<long double>(frac) * kTwoPow64 - hi_part;
  const auto hi = static_cast<std::uint64_t>(hi_part);
  const auto lo = static_cast<std::uint64_t>(std::floor(rest * kTwoPow64));
  return from_parts(hi, lo);
}

Fixed Fixed::ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0 || num >= den) {
    throw Error(ErrorCode::invalid_argument, "Fixed::ratio requires num < den");
  }
  cpp_int scaled = (cpp_int(num) << 128) / den;
  return from_raw(to_u128(scaled));
}

Fixed Fixed::from_hex(std::string_view hex) {
  if (hex.size() != 32) {
    throw Error(ErrorCode::schema, "fixed-point fraction must have 32 hex digits");
  }
  u128 raw = 0;
  for (char c : hex) {
    const int d = hex_value(c);
    if (d < 0) throw Error(ErrorCode::schema, "invalid hex digit in fixed-point fraction");
    raw = (raw << 4) | static_cast<u128>(d);
  }
  return from_raw(raw);
}

std::string Fixed::to_hex() const {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out(32, '0');
  u128 r = raw_;
  for (int i = 31; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[static_cast<int>(r & 0xF)];
    r >>= 4;
  }
  return out;
}

double Fixed::to_double() const { return static_cast<double>(to_long_double()); }

long double Fixed::to_long_double() const {
  return (static_cast<long double>(hi()) + static_cast<long double>(lo()) / kTwoPow64) / kTwoPow64;
}

Angle Angle::golden() {
  // floor(2^128 (sqrt5 - 1) / 2) = floor((isqrt(5 * 2^256) - 2^128) / 2)
  static const Angle kGolden = [] {
    const cpp_int s = boost::multiprecision::sqrt(cpp_int(5) << 256);
    return Angle{Fixed::from_raw(to_u128((s - (cpp_int(1) << 128)) >> 1)), true};
  }();
  return kGolden;
}

Angle Angle::silver() { return sqrt_frac(2); }

Angle Angle::sqrt_frac(std::uint64_t n) {
  const cpp_int s = boost::multiprecision::sqrt(cpp_int(n) << 256);
  const cpp_int int_part = boost::multiprecision::sqrt(cpp_int(n));
  if (int_part * int_part == n) {
    throw Error(ErrorCode::invalid_argument, "sqrt_frac: perfect square has no irrational part");
  }
  return Angle{Fixed::from_raw(to_u128(s - (int_part << 128))), true};
}

std::complex<double> unit_phase(Fixed t) {
  // signed representative: raw interpreted as two's complement
  const auto s = static_cast<__int128>(t.raw());
  const long double hi = static_cast<long double>(static_cast<std::int64_t>(s >> 64));
  const long double lo = static_cast<long double>(static_cast<std::uint64_t>(s));
  const long double turns = (hi + lo / kTwoPow64) / kTwoPow64;
  const long double angle = 2.0L * std::numbers::pi_v<long double> * turns;
  return {static_cast<double>(std::cos(angle)), static_cast<double>(std::sin(angle))};
}

bool is_root_of_unity(Fixed t, std::uint64_t max_order) {
  if (t.raw() == 0) return true;
  // n t == 0 mod 1 iff the denominator 2^(128 - v2(raw)) divides n.
  const u128 raw = t.raw();
  int tz = 0;
  while (((raw >> tz) & 1) == 0) ++tz;
  const int denom_bits = 128 - tz;
  if (denom_bits >= 64) return false;
  return (std::uint64_t{1} << denom_bits) <= max_order;
}

}  // namespace ergolab
