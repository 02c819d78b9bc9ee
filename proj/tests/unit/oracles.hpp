#pragma once

// Reference values computed without the library, for cross-checking it.

#include <cmath>
#include <complex>
#include <numbers>

namespace oracle {

using C = std::complex<double>;

inline C cos_exp(C z)
{
    const C i{0.0, 1.0};
    return (std::exp(i * z) + std::exp(-i * z)) / 2.0;
}

inline C sin_exp(C z)
{
    const C i{0.0, 1.0};
    return (std::exp(i * z) - std::exp(-i * z)) / (2.0 * i);
}

// K(m) = 1/4 of the integral over a full period of the analytic periodic
// integrand, so the trapezoid rule converges geometrically.
inline double elliptic_K(double m, int n = 4000)
{
    const double h = 2.0 * std::numbers::pi / n;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double s = std::sin(k * h);
        sum += 1.0 / std::sqrt(1.0 - m * s * s);
    }
    return 0.25 * sum * h;
}

// (1/sqrt 2) * integral_1^inf ds / sqrt(sinh s - sinh 1), with s = 1 + u^2 and
// composite Simpson in u. The integrand decays like exp(-u^2/2).
inline double sinh_escape_integral(double u_max = 9.0, int n = 40000)
{
    const double s1 = std::sinh(1.0), c1 = std::cosh(1.0);
    auto f = [&](double u) {
        if (u == 0.0)
            return 2.0 / std::sqrt(c1);
        const double w = u * u;
        const double half = std::sinh(0.5 * w);
        const double diff = 2.0 * s1 * half * half + c1 * std::sinh(w);  // sinh(1+w) - sinh 1
        return 2.0 * u / std::sqrt(diff);
    };
    const double h = u_max / n;
    double sum = f(0.0) + f(u_max);
    for (int k = 1; k < n; ++k)
        sum += (k % 2 ? 4.0 : 2.0) * f(k * h);
    return sum * h / 3.0 / std::sqrt(2.0);
}

}  // namespace oracle
