#pragma once

#include <string>
#include <vector>

#include "cpend/models.hpp"

namespace cpend {

/// Closed rectangle in the complex plane; membership is inclusive.
struct Window {
    double re_min = 0.0;
    double re_max = 0.0;
    double im_min = 0.0;
    double im_max = 0.0;

    bool contains(Complex z) const;
    bool has_area() const { return re_max > re_min && im_max > im_min; }
};

/// A root x0 of V(x0) = E. lattice_index names the analytic family member
/// (the integer n or k of the closed forms); branch_sign is the sign choice
/// within that member (+1/-1), or 0 when the family has no such choice.
struct TurningPoint {
    Complex x0;
    double a = 0.0;  // Re x0
    double b = 0.0;  // Im x0
    int lattice_index = 0;
    int branch_sign = 0;
};

struct TurningPointOptions {
    /// Skip closed forms and use the Newton seed grid even where a formula exists.
    bool force_seed_grid = false;
    double seed_spacing = 0.5;
    /// Roots closer than this are merged.
    double dedup_tol = 1e-9;
    int max_iterations = 50;
};

struct TurningPointSet {
    std::vector<TurningPoint> points;  // sorted by (Re, Im)
    /// One entry per seed that failed to converge.
    std::vector<std::string> warnings;
    bool used_closed_form = false;
};

/// |V(x0) - E| allowed after refinement: 1e-12 * max(1, |E|).
double turning_residual_bound(Complex E);

/// All turning points of `model` at energy E inside `window`. Throws
/// DomainError when the window has no area; an empty result is not an error.
TurningPointSet turning_points(const HamiltonianModel& model, Complex E, const Window& window,
                               const TurningPointOptions& options = {});

/// Newton refinement of V(x) - E = 0 from `seed`. Double roots (V' = 0 at the
/// root) are finished by Newton on V' so they land exactly. Throws
/// NonConvergence if the residual bound is not met within max_iterations.
TurningPoint refine_root(const HamiltonianModel& model, Complex E, Complex seed, int max_iterations = 50);

}  // namespace cpend
