#pragma once

// Exact rational arithmetic used by the enumeration and feasibility code.
// Probabilities are kept as arbitrary-precision rationals so that equality
// and inequality claims (S <= 2, residual == 0, ...) are decidable instead
// of being smothered by floating-point noise.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bell {

using BigQ = boost::multiprecision::cpp_rational;
using BigZ = boost::multiprecision::cpp_int;

inline double to_double(const BigQ& q) { return q.convert_to<double>(); }

// Every finite double is a dyadic rational, so this conversion is exact.
inline BigQ rational_from_double(double x) {
    if (!std::isfinite(x))
        throw std::invalid_argument("rational_from_double: value is not finite");
    return BigQ(x);
}

// Decimal-only integer parser.  cpp_int's string constructor follows C
// literal rules (leading 0 means octal, 0x means hex); recipe files always
// mean base 10, so digits are accumulated here instead.
inline BigZ int_from_decimal(std::string_view s) {
    auto fail = [&] {
        throw std::invalid_argument("int_from_decimal: cannot parse '" +
                                    std::string(s) + "'");
    };
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
    if (i == s.size()) fail();
    BigZ v = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') fail();
        v *= 10;
        v += s[i] - '0';
    }
    if (neg) v = -v;
    return v;
}

// Accepts "3/4", "-9/40", "1", "0.25".  Fraction parts must be integers;
// decimal strings go through exact scaled-integer conversion ("0.1" means
// 1/10, not the nearest double).
inline BigQ parse_rational(std::string_view s) {
    auto fail = [&] {
        throw std::invalid_argument("parse_rational: cannot parse '" + std::string(s) + "'");
    };
    if (s.empty()) fail();
    try {
        const auto slash = s.find('/');
        if (slash != std::string_view::npos) {
            const BigZ n = int_from_decimal(s.substr(0, slash));
            const BigZ d = int_from_decimal(s.substr(slash + 1));
            if (d == 0) fail();
            return BigQ(n, d);
        }
        const auto dot = s.find('.');
        if (dot != std::string_view::npos) {
            const std::string_view head = s.substr(0, dot);
            const std::string_view frac = s.substr(dot + 1);
            if (frac.empty()) fail();
            const BigZ whole = head.empty() || head == "-" || head == "+"
                                   ? BigZ(0)
                                   : int_from_decimal(head);
            const bool neg = !head.empty() && head[0] == '-';
            BigZ num = int_from_decimal(frac);  // rejects signs and junk
            BigZ den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            BigQ q = BigQ(whole) + (neg ? -BigQ(num, den) : BigQ(num, den));
            return q;
        }
        return BigQ(int_from_decimal(s));
    } catch (const std::invalid_argument&) {
        fail();
    }
    return BigQ(0);  // unreachable
}

inline std::string rational_to_string(const BigQ& q) {
    const BigZ num = boost::multiprecision::numerator(q);
    const BigZ den = boost::multiprecision::denominator(q);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

inline BigQ abs(const BigQ& q) { return q < 0 ? BigQ(-q) : q; }

}  // namespace bell
