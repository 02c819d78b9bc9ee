#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace cpend {

/// Coordinate field of the whole engine: positions, momenta, g and E are all complex.
using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// Entire extensions written out explicitly so the behaviour at large |Im z|
// does not depend on the standard library's branch and overflow conventions.
inline Complex ccos(Complex z)
{
    const double a = z.real(), b = z.imag();
    return {std::cos(a) * std::cosh(b), -std::sin(a) * std::sinh(b)};
}

inline Complex csin(Complex z)
{
    const double a = z.real(), b = z.imag();
    return {std::sin(a) * std::cosh(b), std::cos(a) * std::sinh(b)};
}

/// Principal square root with a signed-zero imaginary part treated as +0, so
/// negative reals map to +i|.|^{1/2} regardless of how the zero was produced.
inline Complex principal_sqrt(Complex z)
{
    const double im = (z.imag() == 0.0) ? 0.0 : z.imag();
    return std::sqrt(Complex{z.real(), im});
}

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace cpend
