#pragma once
//! \file
//! \brief Scalar traits, exact rationals and portable random draws.

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace sdl {

using Rational = boost::multiprecision::cpp_rational;

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  static double to_double(double x) { return x; }
  static double from_double(double x) { return x; }
  static std::string to_string(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
};

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static double to_double(const Rational& x) { return x.convert_to<double>(); }
  // Exact: every finite double is a dyadic rational.
  static Rational from_double(double x) { return Rational(x); }
  static std::string to_string(const Rational& x) { return x.str(); }
};

template <class S>
inline constexpr bool is_exact_v = scalar_traits<S>::exact;

template <class S>
double to_double(const S& x) {
  return scalar_traits<S>::to_double(x);
}

template <class S>
S abs_value(const S& x) {
  return x < S(0) ? S(-x) : x;
}

template <class S>
int sign_of(const S& x) {
  if (x > S(0)) return 1;
  if (x < S(0)) return -1;
  return 0;
}

/// Zero test used by the combinatorial algorithms: exact for rationals,
/// relative threshold `rel * scale` for doubles.
template <class S>
bool is_negligible(const S& x, const S& scale, double rel = 1e-13) {
  if constexpr (is_exact_v<S>) {
    (void)scale;
    (void)rel;
    return x == 0;
  } else {
    return std::abs(x) <= rel * scale;
  }
}

/// Parses "p/q", "p" or a decimal literal. Decimal literals are read as the
/// nearest double and converted exactly.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  bool rational_syntax = true;
  for (char c : text) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '/' || c == '-' || c == '+')) {
      rational_syntax = false;
      break;
    }
  }
  if (rational_syntax) {
    try {
      std::string t = text[0] == '+' ? text.substr(1) : text;
      Rational r(t);
      return r;
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed rational '" + text + "'");
    }
  }
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed number '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(d)) throw std::invalid_argument("malformed number '" + text + "'");
  return Rational(d);
}

/// Conjugate exponent q = p / (p - 1).
inline double conjugate_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

inline void require_energy_exponent(double p, const char* what = "p") {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument(std::string(what) + " must lie in (1, inf)");
}

/// Sign-preserving power |t|^{r-1} sign(t).
inline double signed_power(double t, double r) {
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), r - 1.0), t);
}

// std distributions are implementation-defined; these are not, so seeded
// outputs are byte-identical across standard libraries.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // Rejection sampling for an unbiased draw.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace sdl
