#pragma once

#include <cmath>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "error.hpp"

namespace tkit {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace rational {

/// "p/q", or "p" when the denominator is 1.
inline std::string to_string(const Rational &r)
{
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1)
    return num.str();
  return num.str() + "/" + den.str();
}

inline Rational parse(const std::string &text)
{
  try {
    auto slash = text.find('/');
    if (slash == std::string::npos)
      return Rational(BigInt(text));
    BigInt den(text.substr(slash + 1));
    if (den == 0)
      throw Error(ErrorCode::Parse, "zero denominator in '" + text + "'");
    return Rational(BigInt(text.substr(0, slash)), den);
  } catch (const std::runtime_error &e) {
    if (dynamic_cast<const Error *>(&e))
      throw;
    throw Error(ErrorCode::Parse, "bad rational '" + text + "'");
  }
}

inline double to_double(const Rational &r)
{ return r.convert_to<double>(); }

/// Exact value of a finite double.
inline Rational from_double(double x)
{
  int e = 0;
  double m = std::frexp(x, &e);
  auto scaled = static_cast<long long>(std::ldexp(m, 62));
  Rational r(scaled);
  int shift = e - 62;
  if (shift >= 0)
    r *= Rational(BigInt(1) << shift);
  else
    r /= Rational(BigInt(1) << (-shift));
  return r;
}

} // namespace rational
} // namespace tkit
