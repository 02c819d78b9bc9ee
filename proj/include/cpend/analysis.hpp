#pragma once

#include <array>
#include <optional>
#include <vector>

#include "cpend/integrator.hpp"

namespace cpend {

struct ClosureReport {
    bool closed = false;
    std::optional<double> period;
    /// Scaled phase-space distance at the closest return found.
    double return_distance = 0.0;
    /// Turns of x(t) around the midpoint of the enclosing turning-point pair (diagnostic only).
    int windings = 0;
};

/// First return of the trajectory to its initial state in full phase space.
/// The return time is located by Hermite interpolation between samples using
/// the model's vector field, then accepted when the scaled distance is <= tol
/// and the flow direction matches the start. Non-autonomous trajectories are
/// never reported closed.
ClosureReport detect_closure(const Trajectory& traj, double tol = 1e-7);

enum class SymmetryMap {
    RealG_PT,  // x -> -x*, p -> p*, t -> -t
    ImagG_PT,  // x -> pi - x*, p -> p*, t -> -t
};

struct SymmetryReport {
    SymmetryMap map_kind = SymmetryMap::RealG_PT;
    double max_deviation = 0.0;
    bool verified = false;
};

/// Integrates the mapped initial condition (map(x0), conj(p0)) backward in time
/// with `cfg` and compares it sample by sample with the mapped original. The
/// deviation is measured with scaled_phase_distance. Requires a pendulum with
/// real or purely imaginary g; throws std::invalid_argument otherwise.
SymmetryReport verify_pt_symmetry(const HamiltonianModel& model, const Trajectory& traj, double tol,
                                  const IntegratorConfig& cfg);

struct EllipseFit {
    Complex center;
    std::array<double, 2> semi_axes{};  // major, minor
    double orientation = 0.0;           // major-axis angle from the real axis, radians in (-pi/2, pi/2]
    /// RMS first-order geometric distance of the samples from the conic, over the semi-major axis.
    double residual = 0.0;
};

/// Least-squares conic through the sampled x(t) in the (Re x, Im x) plane.
/// Throws DegenerateConic for collinear samples or a non-elliptic best fit.
EllipseFit fit_ellipse(const Trajectory& traj);

struct CellTransition {
    double t_exit;
    int from_cell;
    int to_cell;
};

/// Transitions recorded in the cell history (derived from the samples when the
/// trajectory carries none). Empty means the trajectory stayed in one cell.
std::vector<CellTransition> cell_escape_summary(const Trajectory& traj);

}  // namespace cpend
