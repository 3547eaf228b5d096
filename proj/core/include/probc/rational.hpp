#ifndef PROBC_RATIONAL_HPP
#define PROBC_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace probc {

// Exact rationals back every literal so algebraic cancellation stays exact.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline bool is_integer(const Rational& q) { return denominator(q) == 1; }

inline Rational rational_pow(const Rational& base, long exp) {
    if (exp == 0) return Rational(1);
    if (base == 0 && exp < 0) throw std::domain_error("rational_pow: 0 to a negative power");
    Rational b = exp > 0 ? base : Rational(1) / base;
    long n = exp > 0 ? exp : -exp;
    Rational acc(1);
    while (n > 0) {
        if (n & 1) acc *= b;
        b *= b;
        n >>= 1;
    }
    return acc;
}

// Parses "12", "0.7", "1.6811397", ".5" as an exact decimal fraction.
Rational rational_from_decimal(const std::string& text);

// Exact binary expansion of a finite double.
Rational rational_from_double(double x);

// Decimal rendering used by the printer: integers bare, otherwise num/den.
std::string rational_to_string(const Rational& q);

}  // namespace probc

#endif
