#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>
#include <string>
#include <string_view>

#include "coinvest/common.hpp"

namespace coinvest {

// Exact arithmetic backs every inequality the derivations re-verify and every
// oracle-grade probability computation. Hot paths mirror values into doubles.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational pow_rational(Rational base, unsigned long n) {
  Rational r(1);
  while (n != 0) {
    if (n & 1UL) r *= base;
    base *= base;
    n >>= 1;
  }
  return r;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Exact conversion: every finite double is a dyadic rational.
inline Rational rational_from_double(double x) { return Rational(x); }

namespace detail {

inline BigInt pow10(std::size_t n) {
  BigInt r(1);
  for (std::size_t i = 0; i < n; ++i) r *= 10;
  return r;
}

inline bool parse_decimal(std::string_view s, Rational& out) {
  // [sign] digits [. digits] [ (e|E) [sign] digits ]
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    neg = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_len = 0;
  bool any = false;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    digits += s[i++];
    any = true;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      digits += s[i++];
      ++frac_len;
      any = true;
    }
  }
  if (!any) return false;
  long exp10 = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      eneg = s[i] == '-';
      ++i;
    }
    if (i == s.size()) return false;
    long e = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      e = e * 10 + (s[i++] - '0');
      if (e > 100000) return false;
    }
    exp10 = eneg ? -e : e;
  }
  if (i != s.size()) return false;
  BigInt num(digits.empty() ? "0" : digits);
  if (neg) num = -num;
  long shift = exp10 - frac_len;
  if (shift >= 0) {
    out = Rational(num * pow10(static_cast<std::size_t>(shift)), 1);
  } else {
    out = Rational(num, pow10(static_cast<std::size_t>(-shift)));
  }
  return true;
}

}  // namespace detail

// Accepts decimal strings ("0.7", "1e-4") and fractions ("7/10"). Fractions
// feed the exact-arithmetic paths without any decimal rounding.
inline Rational parse_rational(std::string_view s) {
  auto slash = s.find('/');
  if (slash != std::string_view::npos) {
    Rational num, den;
    if (!detail::parse_decimal(s.substr(0, slash), num) ||
        !detail::parse_decimal(s.substr(slash + 1), den) || den == 0) {
      throw param_error("not a valid fraction: '" + std::string(s) + "'");
    }
    return num / den;
  }
  Rational r;
  if (!detail::parse_decimal(s, r)) {
    throw param_error("not a valid number: '" + std::string(s) + "'");
  }
  return r;
}

inline std::string rational_to_string(const Rational& r) {
  return r.str();
}

}  // namespace coinvest
