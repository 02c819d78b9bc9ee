#include "cpend/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cpend/error.hpp"

namespace cpend {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr std::size_t kMaxIntervals = 20000;

using ParamIntegrand = std::function<Complex(double)>;

struct Interval {
    double lo, hi;
    Complex value;
    double error;
    bool operator<(const Interval& o) const
    {
        if (error != o.error)
            return error < o.error;
        return lo > o.lo;
    }
};

Interval gauss_kronrod(const ParamIntegrand& F, double lo, double hi)
{
    const double c = 0.5 * (lo + hi);
    const double r = 0.5 * (hi - lo);
    Complex kron = kWgk[7] * F(c);
    Complex gauss = kWg[3] * F(c);
    for (int j = 0; j < 7; ++j) {
        const Complex f1 = F(c - r * kXgk[j]);
        const Complex f2 = F(c + r * kXgk[j]);
        kron += kWgk[j] * (f1 + f2);
        if (j % 2 == 1)
            gauss += kWg[j / 2] * (f1 + f2);
    }
    kron *= r;
    gauss *= r;
    double err = std::abs(kron - gauss);
    if (!std::isfinite(err))
        err = std::numeric_limits<double>::infinity();
    return {lo, hi, kron, err};
}

// Globally adaptive bisection; deterministic because ties in the queue are broken by position.
Complex integrate_param(const ParamIntegrand& F, double lo, double hi, double tol)
{
    std::priority_queue<Interval> queue;
    Interval first = gauss_kronrod(F, lo, hi);
    Complex total = first.value;
    double total_err = first.error;
    queue.push(first);
    // An infinite total must not pass: |(inf, nan)| is +inf, and inf <= tol * inf holds.
    while (!is_finite(total) || !(total_err <= tol * std::max(1.0, std::abs(total)))) {
        if (queue.size() >= kMaxIntervals || !std::isfinite(total_err) || !is_finite(total)) {
            std::ostringstream os;
            os << "path integral: tolerance " << tol << " not met (error estimate " << total_err << " after "
               << queue.size() << " subintervals)";
            throw ToleranceNotMet(os.str());
        }
        const Interval worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi))
            throw ToleranceNotMet("path integral: subinterval below floating-point resolution");
        const Interval left = gauss_kronrod(F, worst.lo, mid);
        const Interval right = gauss_kronrod(F, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }
    // Re-sum to shed the cancellation accumulated by incremental updates.
    Complex sum = 0.0;
    std::vector<Interval> parts;
    while (!queue.empty()) {
        parts.push_back(queue.top());
        queue.pop();
    }
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (const Interval& p : parts)
        sum += p.value;
    return sum;
}

/// A smooth parametrised piece z(s), s in [s0, s1].
struct Piece {
    std::function<Complex(double)> z;
    std::function<Complex(double)> dz;
    double s0;
    double s1;
};

// Stadium split into five pieces starting at the rightmost point, counter-clockwise:
// right arc upper half, top edge, left arc, bottom edge, right arc lower half.
std::vector<Piece> contour_pieces(const TurningPointContour& c)
{
    const Complex centre = 0.5 * (c.left + c.right);
    const double half = 0.5 * std::abs(c.right - c.left);
    const Complex e = (c.right - c.left) / std::abs(c.right - c.left);
    const double d = c.offset;

    auto arc = [=](double cx, double phi0, double phi1) {
        return Piece{[=](double phi) { return centre + e * (cx + d * std::polar(1.0, phi)); },
                     [=](double phi) { return e * (kI * d * std::polar(1.0, phi)); }, phi0, phi1};
    };
    auto edge = [=](Complex w0, Complex w1) {
        return Piece{[=](double s) { return centre + e * (w0 + (w1 - w0) * s); },
                     [=](double) { return e * (w1 - w0); }, 0.0, 1.0};
    };
    return {arc(half, 0.0, 0.5 * kPi), edge({half, d}, {-half, d}), arc(-half, 0.5 * kPi, 1.5 * kPi),
            edge({-half, -d}, {half, -d}), arc(half, -0.5 * kPi, 0.0)};
}

// V(x) - V(x0) without cancellation as x -> x0.
Complex potential_difference(const HamiltonianModel& model, Complex x, Complex x0)
{
    switch (model.kind()) {
    case ModelKind::Pendulum:
    case ModelKind::DrivenPendulum: return 2.0 * model.g() * csin(0.5 * (x + x0)) * csin(0.5 * (x - x0));
    case ModelKind::Harmonic: return 0.5 * (x - x0) * (x + x0);
    case ModelKind::CubicI: return kI * (x - x0) * (x * x + x * x0 + x0 * x0);
    }
    return 0.0;
}

}  // namespace

void validate_path(const PathSpec& path)
{
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Segment>) {
                if (p.start == p.end)
                    throw std::invalid_argument("segment endpoints must be distinct");
            } else if constexpr (std::is_same_v<T, VerticalRay>) {
                if (p.direction != 1 && p.direction != -1)
                    throw std::invalid_argument("vertical ray direction must be +1 or -1");
                if (!(p.cutoff > std::abs(p.start.imag())))
                    throw std::invalid_argument("vertical ray cutoff must exceed |Im start|");
            } else {
                if (!(p.offset > 0.0))
                    throw std::invalid_argument("contour offset must be > 0");
                if (p.left == p.right)
                    throw std::invalid_argument("contour turning points must be distinct");
            }
        },
        path);
}

Complex path_integral(const Integrand& f, const PathSpec& path, double tol)
{
    validate_path(path);
    if (const auto* seg = std::get_if<Segment>(&path)) {
        const Complex a = seg->start, delta = seg->end - seg->start;
        if (seg->singular_start)
            return integrate_param([&](double u) { return f(a + delta * (u * u)) * (2.0 * u * delta); }, 0.0, 1.0,
                                   tol);
        return integrate_param([&](double s) { return f(a + delta * s) * delta; }, 0.0, 1.0, tol);
    }
    if (const auto* ray = std::get_if<VerticalRay>(&path)) {
        const double dir = ray->direction;
        const double length = ray->cutoff - dir * ray->start.imag();
        const Complex up = kI * dir;
        if (length <= 0.0)
            throw std::invalid_argument("vertical ray points toward the real axis past its cutoff");
        if (ray->singular_start)
            return integrate_param([&](double u) { return f(ray->start + up * (u * u)) * (2.0 * u * up); }, 0.0,
                                   std::sqrt(length), tol);
        return integrate_param([&](double s) { return f(ray->start + up * s) * up; }, 0.0, length, tol);
    }
    const auto& contour = std::get<TurningPointContour>(path);
    Complex total = 0.0;
    for (const Piece& piece : contour_pieces(contour))
        total += integrate_param([&](double s) { return f(piece.z(s)) * piece.dz(s); }, piece.s0, piece.s1, tol);
    return total;
}

double escape_time(const HamiltonianModel& model, Complex E, const TurningPoint& tp, double cutoff)
{
    const Complex x0 = tp.x0;
    const Complex accel = -potential_derivative(model, x0);
    if (std::abs(accel) == 0.0)
        throw DomainError("escape_time: degenerate turning point (V' = 0)");
    if (std::abs(accel.real()) > 1e-8 * std::abs(accel))
        throw DomainError("escape_time: the escape from this turning point is not along a vertical ray");
    const int dir = accel.imag() > 0 ? 1 : -1;

    const VerticalRay ray{x0, dir, cutoff, true};
    validate_path(ray);
    if (!(cutoff - dir * x0.imag() > 0.0))
        throw std::invalid_argument("escape_time: cutoff must lie beyond the turning point");

    // Other turning points within delta of the ray.
    constexpr double delta = 1e-3;
    const double y_end = dir * cutoff;
    const Window corridor{x0.real() - delta, x0.real() + delta, std::min(x0.imag(), y_end) - delta,
                          std::max(x0.imag(), y_end) + delta};
    for (const TurningPoint& other : turning_points(model, E, corridor).points) {
        if (std::abs(other.x0 - x0) > 1e-9) {
            std::ostringstream os;
            os << "escape_time: turning point (" << other.a << ", " << other.b << ") lies on the escape ray";
            throw PathThroughSingularity(os.str());
        }
    }

    // x0 is a turning point, so E - V(x0) is round-off; dropping it keeps the radicand
    // exactly proportional to u^2 near the start and the substituted integrand smooth.
    const Complex up = kI * static_cast<double>(dir);
    const double length = cutoff - dir * x0.imag();
    auto F = [&](double u) -> Complex {
        const Complex x = x0 + up * (u * u);
        const Complex w = principal_sqrt(-2.0 * potential_difference(model, x, x0));
        Complex term = (2.0 * u * up) / w;
        if (term.real() < 0.0)
            term = -term;
        return term;
    };
    const Complex T = integrate_param(F, 0.0, std::sqrt(length), 1e-13);
    if (std::abs(T.imag()) > 1e-6 * std::max(1.0, std::abs(T.real()))) {
        std::ostringstream os;
        os << "escape_time: complex result (" << T.real() << ", " << T.imag() << ")";
        throw BranchInconsistency(os.str());
    }
    return T.real();
}

ContourPeriod period_contour(const HamiltonianModel& model, Complex E, const TurningPoint& left,
                             const TurningPoint& right, double offset)
{
    const TurningPointContour contour{left.x0, right.x0, offset};
    validate_path(contour);
    const std::vector<Piece> pieces = contour_pieces(contour);

    const Complex base = E - potential(model, left.x0);
    auto root = [&](Complex x) { return principal_sqrt(2.0 * (base - potential_difference(model, x, left.x0))); };

    // Reference branch values by nearest-branch continuation around the loop.
    constexpr int kTable = 4096;
    std::vector<std::vector<Complex>> table(pieces.size(), std::vector<Complex>(kTable + 1));
    Complex previous = root(pieces.front().z(pieces.front().s0));
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        const Piece& pc = pieces[j];
        for (int i = 0; i <= kTable; ++i) {
            const double s = pc.s0 + (pc.s1 - pc.s0) * i / kTable;
            Complex w = root(pc.z(s));
            if (std::abs(w - previous) > std::abs(-w - previous))
                w = -w;
            table[j][i] = w;
            previous = w;
        }
    }
    const Complex start = table.front().front();
    if (std::abs(previous - start) > 1e-6 * std::max(1.0, std::abs(start)))
        throw BranchInconsistency("period_contour: square root does not return to its starting branch; "
                                  "the contour must enclose exactly the cut between the two turning points");

    Complex total = 0.0;
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        const Piece& pc = pieces[j];
        const std::vector<Complex>& ref = table[j];
        auto F = [&](double s) -> Complex {
            const double pos = (s - pc.s0) / (pc.s1 - pc.s0) * kTable;
            const int idx = std::clamp(static_cast<int>(std::lround(pos)), 0, kTable);
            Complex w = root(pc.z(s));
            if (std::abs(w - ref[idx]) > std::abs(-w - ref[idx]))
                w = -w;
            return pc.dz(s) / w;
        };
        total += integrate_param(F, pc.s0, pc.s1, 1e-13);
    }
    if (total.real() < 0.0)
        total = -total;

    ContourPeriod result{total.real(), std::abs(total.imag())};
    if (result.imaginary_part > 1e-6) {
        std::ostringstream os;
        os << "period_contour: imaginary part " << result.imaginary_part << " exceeds 1e-6";
        throw BranchInconsistency(os.str());
    }
    return result;
}

double agm(double a, double b)
{
    if (!(a > 0.0 && b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError("agm: arguments must be positive and finite");
    for (int i = 0; i < 64; ++i) {
        const double an = 0.5 * (a + b);
        const double bn = std::sqrt(a * b);
        a = an;
        b = bn;
        if (std::abs(a - b) <= 1e-16 * a)
            break;
    }
    return 0.5 * (a + b);
}

double elliptic_K(double m)
{
    if (!(m < 1.0) || !std::isfinite(m))
        throw DomainError("elliptic_K: parameter m must satisfy m < 1");
    return kPi / (2.0 * agm(1.0, std::sqrt(1.0 - m)));
}

}  // namespace cpend
