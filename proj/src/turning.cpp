#include "cpend/turning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpend/error.hpp"

namespace cpend {

namespace {

constexpr double kWindowSlack = 1e-12;

TurningPoint make_point(Complex x0, int lattice, int sign)
{
    return {x0, x0.real(), x0.imag(), lattice, sign};
}

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Range of integers k with offset + k*period possibly inside [lo, hi].
std::pair<int, int> lattice_range(double lo, double hi, double offset, double period)
{
    return {static_cast<int>(std::floor((lo - offset) / period)) - 1,
            static_cast<int>(std::ceil((hi - offset) / period)) + 1};
}

void sort_and_dedup(std::vector<TurningPoint>& pts, double tol)
{
    std::sort(pts.begin(), pts.end(), [](const TurningPoint& l, const TurningPoint& r) {
        if (l.x0.real() != r.x0.real())
            return l.x0.real() < r.x0.real();
        return l.x0.imag() < r.x0.imag();
    });
    std::vector<TurningPoint> out;
    for (const TurningPoint& p : pts) {
        const bool dup = std::any_of(out.begin(), out.end(),
                                     [&](const TurningPoint& q) { return std::abs(q.x0 - p.x0) < tol; });
        if (!dup)
            out.push_back(p);
    }
    pts = std::move(out);
}

// cos x = c. Returns false when no formula applies (the seed grid is used instead).
bool pendulum_closed_form(Complex g, Complex E, const Window& w, std::vector<TurningPoint>& out)
{
    if (E.imag() != 0.0 || g == 0.0)
        return false;
    const double e = E.real();
    const double twopi = 2.0 * kPi;

    if (g.imag() == 0.0) {
        // -g cos x = E  =>  cos a cosh b = -E/g, sin a sinh b = 0.
        const double c = -e / g.real();
        if (std::abs(c) <= 1.0) {
            const double a0 = std::acos(c);
            for (int s : {1, -1}) {
                auto [k0, k1] = lattice_range(w.re_min, w.re_max, s * a0, twopi);
                for (int k = k0; k <= k1; ++k)
                    out.push_back(make_point({s * a0 + twopi * k, 0.0}, k, s));
            }
        } else {
            const double b0 = std::acosh(std::abs(c));
            const double offset = c > 0 ? 0.0 : kPi;  // a = 2k pi or (2k+1) pi
            auto [k0, k1] = lattice_range(w.re_min, w.re_max, offset, twopi);
            for (int k = k0; k <= k1; ++k)
                for (int s : {1, -1})
                    out.push_back(make_point({offset + twopi * k, s * b0}, k, s));
        }
        return true;
    }

    if (g.real() == 0.0) {
        // -i gamma cos x = E  =>  cos a cosh b = 0, -gamma sin a sinh b = E.
        const double gamma = g.imag();
        auto [n0, n1] = lattice_range(w.re_min, w.re_max, 0.5 * kPi, kPi);
        for (int n = n0; n <= n1; ++n) {
            const double sin_a = (n % 2 == 0) ? 1.0 : -1.0;
            const double b = std::asinh(-e / (gamma * sin_a));
            out.push_back(make_point({(n + 0.5) * kPi, b}, n, sign_of(b)));
        }
        return true;
    }
    return false;
}

}  // namespace

bool Window::contains(Complex z) const
{
    const double sr = kWindowSlack * std::max({1.0, std::abs(re_min), std::abs(re_max)});
    const double si = kWindowSlack * std::max({1.0, std::abs(im_min), std::abs(im_max)});
    return z.real() >= re_min - sr && z.real() <= re_max + sr && z.imag() >= im_min - si &&
           z.imag() <= im_max + si;
}

double turning_residual_bound(Complex E) { return 1e-12 * std::max(1.0, std::abs(E)); }

TurningPoint refine_root(const HamiltonianModel& model, Complex E, Complex seed, int max_iterations)
{
    const double bound = turning_residual_bound(E);
    Complex x = seed;
    for (int it = 0; it < max_iterations; ++it) {
        const Complex r = potential(model, x) - E;
        const Complex d = potential_derivative(model, x);
        if (!is_finite(r) || !is_finite(d))
            break;
        if (std::abs(r) <= bound) {
            // Converged by residual; take one more step while it still moves the root,
            // switching to Newton on V' near a double root.
            const Complex dd = potential_second_derivative(model, x);
            // At a double root |V'| only falls like sqrt(residual), ~1e-6 here.
            if (std::abs(d) < 1e-4 * std::max(1.0, std::abs(dd))) {
                for (int j = 0; j < 20; ++j) {
                    const Complex d1 = potential_derivative(model, x);
                    const Complex d2 = potential_second_derivative(model, x);
                    if (d2 == 0.0)
                        break;
                    const Complex step = d1 / d2;
                    const Complex cand = x - step;
                    if (std::abs(potential(model, cand) - E) > bound)
                        break;
                    x = cand;
                    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x)))
                        break;
                }
            } else if (d != 0.0) {
                const Complex cand = x - r / d;
                if (std::abs(potential(model, cand) - E) <= std::abs(r))
                    x = cand;
            }
            return make_point(x, 0, sign_of(x.imag()));
        }
        if (d == 0.0)
            break;
        x -= r / d;
    }
    std::ostringstream os;
    os << "Newton refinement from seed (" << seed.real() << ", " << seed.imag() << ") did not converge in "
       << max_iterations << " iterations";
    throw NonConvergence(os.str());
}

TurningPointSet turning_points(const HamiltonianModel& model, Complex E, const Window& window,
                               const TurningPointOptions& options)
{
    if (!window.has_area())
        throw DomainError("turning_points: window must have positive area");

    TurningPointSet result;
    std::vector<TurningPoint> candidates;

    if (!options.force_seed_grid) {
        switch (model.kind()) {
        case ModelKind::Harmonic: {
            const Complex r = principal_sqrt(2.0 * E);
            candidates.push_back(make_point(r, 0, 1));
            candidates.push_back(make_point(-r, 0, -1));
            result.used_closed_form = true;
            break;
        }
        case ModelKind::CubicI: {
            // i x^3 = E  =>  x^3 = -iE.
            const Complex w = -kI * E;
            if (w == 0.0) {
                candidates.push_back(make_point(0.0, 0, 0));
            } else {
                const double r = std::cbrt(std::abs(w));
                const double phi = std::arg(w);
                for (int j = 0; j < 3; ++j)
                    candidates.push_back(make_point(std::polar(r, (phi + 2.0 * kPi * j) / 3.0), j, 0));
            }
            result.used_closed_form = true;
            break;
        }
        case ModelKind::Pendulum:
        case ModelKind::DrivenPendulum:
            result.used_closed_form = pendulum_closed_form(model.g(), E, window, candidates);
            break;
        }
    }

    if (result.used_closed_form) {
        // Polish, keep lattice labels.
        for (TurningPoint& c : candidates) {
            if (!window.contains(c.x0))
                continue;
            try {
                TurningPoint refined = refine_root(model, E, c.x0, options.max_iterations);
                refined.lattice_index = c.lattice_index;
                refined.branch_sign = c.branch_sign;
                if (window.contains(refined.x0))
                    result.points.push_back(refined);
            } catch (const NonConvergence& e) {
                result.warnings.emplace_back(e.what());
            }
        }
    } else {
        const double h = options.seed_spacing;
        const int nr = static_cast<int>(std::floor((window.re_max - window.re_min) / h + 1e-9));
        const int ni = static_cast<int>(std::floor((window.im_max - window.im_min) / h + 1e-9));
        for (int i = 0; i <= nr; ++i) {
            for (int j = 0; j <= ni; ++j) {
                const Complex seed{window.re_min + i * h, window.im_min + j * h};
                try {
                    TurningPoint refined = refine_root(model, E, seed, options.max_iterations);
                    if (window.contains(refined.x0))
                        result.points.push_back(refined);
                } catch (const NonConvergence& e) {
                    result.warnings.emplace_back(e.what());
                }
            }
        }
    }

    sort_and_dedup(result.points, options.dedup_tol);
    if (!result.used_closed_form) {
        for (std::size_t i = 0; i < result.points.size(); ++i)
            result.points[i].lattice_index = static_cast<int>(i);
    }
    return result;
}

}  // namespace cpend
