#include "sam/rational.hpp"

namespace sam {

namespace {

uint128 gcd128(uint128 a, uint128 b) {
  while (b != 0) {
    uint128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

cpp_int to_cpp(uint128 v) {
  cpp_int hi = std::uint64_t(v >> 64);
  cpp_int lo = std::uint64_t(v);
  return (hi << 64) | lo;
}

}  // namespace

Rational parse_decimal(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty decimal literal");
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("bad decimal literal: " + text);
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') {
      throw std::invalid_argument("bad decimal literal: " + text);
    }
    seen_digit = true;
    if (num > (UINT64_MAX - 9) / 10 || (seen_dot && den > UINT64_MAX / 10)) {
      throw std::invalid_argument("decimal literal out of range: " + text);
    }
    num = num * 10 + std::uint64_t(c - '0');
    if (seen_dot) den *= 10;
  }
  if (!seen_digit) throw std::invalid_argument("bad decimal literal: " + text);
  return Rational{num, den};
}

Probability::Probability(uint128 n, uint128 d) : num(n), den(d) {
  if (den == 0 || num == 0 || num > den) {
    throw std::invalid_argument("probability outside (0, 1]");
  }
  uint128 g = gcd128(num, den);
  num /= g;
  den /= g;
}

Probability Probability::operator*(const Probability& o) const {
  // Cross-reduce before multiplying to keep components small.
  uint128 a = num, b = den, c = o.num, d = o.den;
  uint128 g1 = gcd128(a, d);
  a /= g1;
  d /= g1;
  uint128 g2 = gcd128(c, b);
  c /= g2;
  b /= g2;
  return Probability(a * c, b * d);
}

bool Probability::operator==(const Probability& o) const {
  // Components are stored reduced, so direct comparison is exact.
  return num == o.num && den == o.den;
}

bool Probability::less_than(const Rational& theta) const {
  return to_cpp(num) * theta.den < to_cpp(den) * theta.num;
}

bool Probability::less_than(const Probability& o) const {
  return to_cpp(num) * to_cpp(o.den) < to_cpp(o.num) * to_cpp(den);
}

double Probability::to_double() const {
  return double(num) / double(den);
}

std::string Probability::decimal6() const {
  return format_decimal6(to_cpp(num), to_cpp(den));
}

std::string format_decimal6(const cpp_int& num, const cpp_int& den) {
  // round half up at the sixth decimal place
  cpp_int scaled = num * 1000000;
  cpp_int q = (scaled * 2 + den) / (den * 2);
  std::string digits = q.str();
  while (digits.size() < 7) digits.insert(digits.begin(), '0');
  return digits.substr(0, digits.size() - 6) + "." + digits.substr(digits.size() - 6);
}

}  // namespace sam
