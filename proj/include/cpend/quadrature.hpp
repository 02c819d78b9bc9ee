#pragma once

#include <functional>
#include <variant>

#include "cpend/models.hpp"
#include "cpend/turning.hpp"

namespace cpend {

/// Straight path from start to end. singular_start declares an inverse-square-root
/// singularity at `start`, removed by z = start + (end - start) u^2.
struct Segment {
    Complex start;
    Complex end;
    bool singular_start = false;
};

/// Vertical ray from start to Re(start) + i*direction*cutoff (cutoff is the
/// absolute |Im| reached). A singular start is removed by z = start + i*direction*u^2.
struct VerticalRay {
    Complex start;
    int direction = 1;
    double cutoff = 60.0;
    bool singular_start = true;
};

/// Counter-clockwise stadium at distance `offset` around the segment [left, right].
struct TurningPointContour {
    Complex left;
    Complex right;
    double offset = 0.5;
};

using PathSpec = std::variant<Segment, VerticalRay, TurningPointContour>;

using Integrand = std::function<Complex(Complex)>;

/// Throws std::invalid_argument when the path violates its invariants.
void validate_path(const PathSpec& path);

/// Adaptive Gauss-Kronrod (7/15) quadrature of f along `path`, to a combined
/// absolute/relative tolerance `tol`. Throws ToleranceNotMet if the subdivision
/// budget runs out first.
Complex path_integral(const Integrand& f, const PathSpec& path, double tol = 1e-12);

/// Default cutoff: the analytic tail beyond it is below 1e-12 for cosh-type potentials.
inline constexpr double kDefaultEscapeCutoff = 60.0;

/// Time to travel from turning point tp to |Im x| = cutoff along the vertical ray,
/// (1/sqrt 2) * integral of dx / sqrt(E - V(x)), with the branch chosen so time runs
/// forward. Throws PathThroughSingularity when another turning point sits within
/// 1e-3 of the ray, DomainError when the escape from tp is not vertical, and
/// BranchInconsistency when the result is not real.
double escape_time(const HamiltonianModel& model, Complex E, const TurningPoint& tp,
                   double cutoff = kDefaultEscapeCutoff);

struct ContourPeriod {
    double period = 0.0;
    /// |Im| of the loop integral; a branch-tracking diagnostic.
    double imaginary_part = 0.0;
};

/// Loop integral of dx / sqrt(2(E - V)) around the cut joining two turning points,
/// with nearest-branch continuation seeded by the principal root at the rightmost
/// contour point. Throws BranchInconsistency if |Im| exceeds 1e-6.
ContourPeriod period_contour(const HamiltonianModel& model, Complex E, const TurningPoint& left,
                             const TurningPoint& right, double offset);

/// Arithmetic-geometric mean of two positive reals.
double agm(double a, double b);

/// K(m) = integral_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta), parameter convention,
/// via the AGM. Throws DomainError for m >= 1.
double elliptic_K(double m);

}  // namespace cpend
