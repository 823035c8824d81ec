#pragma once

// Exact arithmetic helpers shared across the library: floor/ceil division on
// signed integers, rationals for branching-function work, and a tagged value
// type for the non-concentration threshold eta0, which can be far below the
// range of double (its defining inequality involves exp(C^2/2)).

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace inclab {

using i64 = long long;
using i128 = __int128;

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

constexpr const char* kVersion = "0.1.0";

inline i64 floor_div(i64 a, i64 b) {
  i64 q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

inline i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

inline i128 min4(i128 a, i128 b, i128 c, i128 d) {
  i128 m = a < b ? a : b;
  m = c < m ? c : m;
  return d < m ? d : m;
}

inline i128 max4(i128 a, i128 b, i128 c, i128 d) {
  i128 m = a > b ? a : b;
  m = c > m ? c : m;
  return d > m ? d : m;
}

inline i64 floor_div128(i128 a, i128 b) {
  i128 q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) q -= 1;
  return static_cast<i64>(q);
}

inline i64 ceil_div128(i128 a, i128 b) { return -floor_div128(-a, b); }

inline double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

inline Rat rat_from_double(double v) {
  // doubles are dyadic rationals; the conversion below is exact
  if (!std::isfinite(v)) throw std::invalid_argument("rat_from_double: non-finite");
  int exp = 0;
  double mant = std::frexp(v, &exp);
  BigInt num = static_cast<long long>(std::ldexp(mant, 62));
  exp -= 62;
  Rat r(num, 1);
  if (exp >= 0)
    r *= Rat(BigInt(1) << exp, 1);
  else
    r /= Rat(BigInt(1) << (-exp), 1);
  return r;
}

// eta0 = 2^{-negExp}. For exponents beyond kEtaMaterializeLimit the value is
// kept symbolic: it compares below every positive rational the library ever
// produces (all profile rationals have denominators with < 2^12 bits).
struct EtaVal {
  Rat value;            // valid iff !infinitesimal
  bool infinitesimal = false;
  i64 negExp = 0;       // always recorded (value == 2^{-negExp} when it fits)

  static constexpr i64 kEtaMaterializeLimit = 4096;

  static EtaVal pow2(i64 negExp) {
    EtaVal e;
    e.negExp = negExp;
    if (negExp <= kEtaMaterializeLimit) {
      e.value = Rat(BigInt(1), BigInt(1) << negExp);
    } else {
      e.infinitesimal = true;
    }
    return e;
  }

  static EtaVal exact(const Rat& r) {
    EtaVal e;
    e.value = r;
    e.negExp = 0;
    return e;
  }

  bool lessThan(const Rat& q) const {
    if (infinitesimal) return q > 0;
    return value < q;
  }

  double toDouble() const {
    if (infinitesimal) return 0.0;
    return rat_to_double(value);
  }
};

inline std::string rat_str(const Rat& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

// FNV-1a, used for input digests embedded in reports.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace inclab
