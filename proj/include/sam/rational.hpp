#ifndef SAM_RATIONAL_HPP
#define SAM_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace sam {

using uint128 = unsigned __int128;
using boost::multiprecision::cpp_int;
using boost::multiprecision::uint256_t;

// Threshold-style rational with small components, e.g. a parsed "0.05".
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  bool operator==(const Rational& o) const {
    return uint256_t(num) * o.den == uint256_t(o.num) * den;
  }
};

// Parses a plain decimal literal ("0.1", ".25", "0.050") into an exact
// rational. Scientific notation and signs are rejected.
Rational parse_decimal(const std::string& text);

// Exact count-ratio probability. Always in (0, 1]: constructed as
// (matching + 1) / (conditioning + 1) or as a product of such ratios.
struct Probability {
  uint128 num = 1;
  uint128 den = 1;

  Probability() = default;
  Probability(uint128 n, uint128 d);

  static Probability ratio(std::uint64_t matching, std::uint64_t conditioning) {
    return Probability(uint128(matching) + 1, uint128(conditioning) + 1);
  }

  Probability operator*(const Probability& o) const;

  bool operator==(const Probability& o) const;
  bool less_than(const Rational& theta) const;
  bool less_than(const Probability& o) const;

  double to_double() const;
  // Exact decimal rendering with 6 places, round half up.
  std::string decimal6() const;
};

std::string format_decimal6(const cpp_int& num, const cpp_int& den);

}  // namespace sam

#endif
