#include "ergolab/rational.hpp"

#include <cmath>

#include "ergolab/error.hpp"

namespace ergolab {

Rational exact_rational(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "exact_rational: non-finite value");
  if (v == 0.0) return Rational(0);
  int exp = 0;
  const double mant = std::frexp(v, &exp);
  // mant * 2^53 is an integer for every finite double
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r{BigInt(scaled)};
  if (exp >= 0) {
    r *= Rational(BigInt(1) << exp);
  } else {
    r /= Rational(BigInt(1) << -exp);
  }
  return r;
}

namespace {

BigInt parse_integer(std::string_view s) {
  if (s.empty()) throw Error(ErrorCode::schema, "empty integer in rational literal");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) throw Error(ErrorCode::schema, "malformed rational literal");
  BigInt v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw Error(ErrorCode::schema, "malformed rational literal");
    v = v * 10 + (s[i] - '0');
  }
  return neg ? BigInt(-v) : v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const BigInt den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw Error(ErrorCode::schema, "zero denominator in rational literal");
    return Rational(parse_integer(text.substr(0, slash)), den);
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view int_part = text.substr(0, dot);
    const std::string_view frac = text.substr(dot + 1);
    const bool neg = !int_part.empty() && int_part[0] == '-';
    BigInt whole = (int_part.empty() || int_part == "-" || int_part == "+") ? BigInt(0) : parse_integer(int_part);
    if (whole < 0) whole = -whole;
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const BigInt digits = frac.empty() ? BigInt(0) : parse_integer(frac);
    if (digits < 0) throw Error(ErrorCode::schema, "malformed decimal literal");
    Rational r = Rational(whole) + Rational(digits, scale);
    return neg ? Rational(-r) : r;
  }
  return Rational(parse_integer(text));
}

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace ergolab
