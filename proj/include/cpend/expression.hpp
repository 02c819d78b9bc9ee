#pragma once

#include <string_view>

#include "cpend/complex.hpp"

namespace cpend {

/// Evaluates a small complex-valued arithmetic expression, as used for values
/// in scenario files and on the command line, e.g. "pi/2+0.1", "cosh(1)",
/// "3pi/2 + i", "-1/e^2".
///
/// Grammar: + - * / ^ with the usual precedence, unary minus, parentheses,
/// implicit multiplication after a number ("2pi", "0.5i"), the constants
/// i, pi, e, and the functions sin cos tan sinh cosh tanh asinh acosh exp log sqrt.
///
/// Throws ConfigError with the offending position on malformed input.
Complex parse_complex(std::string_view text);

/// As parse_complex, but also requires a real result.
double parse_real(std::string_view text);

}  // namespace cpend
