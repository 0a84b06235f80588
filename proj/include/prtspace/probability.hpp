#pragma once

// Exact probability arithmetic.
//
// Table-style probabilities such as 0.9999999995 must survive subtraction
// (0.9999999995 - 0.995) without rounding, so every probability in the
// distribution, model and checker layers is an exact rational.

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>

namespace prtspace {

using Probability = mpq_class;

class NumberFormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parses "0.98", "98%", "99.99999995 %", "1/3", "1", "5e-10" into an exact
/// rational. Throws NumberFormatError on anything else.
Probability parse_probability(std::string_view text);

/// Shortest exact decimal rendering when the denominator only has factors
/// 2 and 5 (e.g. "0.0049999995"); "num/den" otherwise.
std::string to_exact_string(const Probability& p);

/// Decimal rendering rounded to `digits` significant digits (17 reproduces a
/// double; larger values print more of the exact expansion).
std::string to_decimal_string(const Probability& p, int digits = 17);

double to_double(const Probability& p);

/// Exact rational image of a double (no rounding beyond the double itself).
Probability from_double(double value);

inline bool is_unit_interval(const Probability& p) { return p >= 0 && p <= 1; }

}  // namespace prtspace
