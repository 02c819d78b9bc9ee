#include "cpend/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpend/error.hpp"
#include "cpend/turning.hpp"

namespace cpend {

namespace {

constexpr double kDeparture = 1e-3;

struct Hermite {
    PhaseState a, b;
    PhaseVelocity fa, fb;

    double span() const { return b.t - a.t; }

    PhaseState at(double theta) const
    {
        const double h = span();
        const double t2 = theta * theta, t3 = t2 * theta;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + theta;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return {h00 * a.x + h10 * h * fa.dx + h01 * b.x + h11 * h * fb.dx,
                h00 * a.p + h10 * h * fa.dp + h01 * b.p + h11 * h * fb.dp, a.t + theta * h};
    }

    PhaseVelocity rate(double theta) const
    {
        const double h = span();
        const double t2 = theta * theta;
        const double d00 = 6 * t2 - 6 * theta, d10 = 3 * t2 - 4 * theta + 1;
        const double d01 = -6 * t2 + 6 * theta, d11 = 3 * t2 - 2 * theta;
        return {(d00 * a.x + d01 * b.x) / h + d10 * fa.dx + d11 * fb.dx,
                (d00 * a.p + d01 * b.p) / h + d10 * fa.dp + d11 * fb.dp};
    }
};

// Half the derivative of |z(t) - z0|^2.
double approach_rate(const PhaseState& s, const PhaseVelocity& v, const PhaseState& s0)
{
    return (std::conj(s.x - s0.x) * v.dx + std::conj(s.p - s0.p) * v.dp).real();
}

double bisect(const Hermite& seg, const PhaseState& s0, double lo, double hi)
{
    double glo = approach_rate(seg.at(lo), seg.rate(lo), s0);
    for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = approach_rate(seg.at(mid), seg.rate(mid), s0);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

int count_windings(const Trajectory& traj, std::size_t last)
{
    const auto& s = traj.samples;
    Complex centroid = 0.0;
    for (std::size_t i = 0; i <= last; ++i)
        centroid += s[i].x;
    centroid /= static_cast<double>(last + 1);

    Complex centre = centroid;
    if (traj.model.is_autonomous()) {
        try {
            const Window w{centroid.real() - 4.0, centroid.real() + 4.0, centroid.imag() - 4.0,
                           centroid.imag() + 4.0};
            auto pts = turning_points(traj.model, traj.energies.front(), w).points;
            if (pts.size() >= 2) {
                std::sort(pts.begin(), pts.end(), [&](const TurningPoint& l, const TurningPoint& r) {
                    return std::abs(l.x0 - centroid) < std::abs(r.x0 - centroid);
                });
                centre = 0.5 * (pts[0].x0 + pts[1].x0);
            }
        } catch (const Error&) {
        }
    }

    double total = 0.0;
    for (std::size_t i = 1; i <= last; ++i) {
        const Complex prev = s[i - 1].x - centre, cur = s[i].x - centre;
        if (prev != 0.0 && cur != 0.0)
            total += std::arg(cur / prev);
    }
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

}  // namespace

ClosureReport detect_closure(const Trajectory& traj, double tol)
{
    ClosureReport report;
    const auto& s = traj.samples;
    if (s.size() < 3 || !traj.model.is_autonomous())
        return report;

    const PhaseState& s0 = s.front();
    const PhaseVelocity f0 = vector_field(traj.model, s0);
    std::vector<PhaseVelocity> f(s.size());
    std::vector<double> g(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        f[i] = vector_field(traj.model, s[i]);
        g[i] = approach_rate(s[i], f[i], s0);
    }

    auto direction_matches = [&](const PhaseVelocity& v) {
        return (std::conj(v.dx) * f0.dx + std::conj(v.dp) * f0.dp).real() > 0.0;
    };

    bool departed = false;
    double closest = std::numeric_limits<double>::infinity();
    std::size_t end_index = s.size() - 1;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double d = scaled_phase_distance(s[i], s0);
        if (!departed) {
            departed = d > kDeparture;
            continue;
        }
        const bool at_last = (i + 1 == s.size());
        if (g[i - 1] < 0.0 && (g[i] >= 0.0 || (at_last && d <= tol))) {
            const Hermite seg{s[i - 1], s[i], f[i - 1], f[i]};
            const double theta = g[i] >= 0.0 ? bisect(seg, s0, 0.0, 1.0) : 1.0;
            const PhaseState ps = theta >= 1.0 ? s[i] : seg.at(theta);
            const double dist = scaled_phase_distance(ps, s0);
            closest = std::min(closest, dist);
            if (dist <= tol && direction_matches(vector_field(traj.model, ps))) {
                report.closed = true;
                report.period = ps.t - s0.t;
                report.return_distance = dist;
                end_index = i;
                break;
            }
        }
    }
    if (!report.closed) {
        if (!std::isfinite(closest)) {
            closest = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i < s.size(); ++i)
                closest = std::min(closest, scaled_phase_distance(s[i], s0));
        }
        report.return_distance = closest;
    }
    report.windings = count_windings(traj, end_index);
    return report;
}

SymmetryReport verify_pt_symmetry(const HamiltonianModel& model, const Trajectory& traj, double tol,
                                  const IntegratorConfig& cfg)
{
    if (model.kind() != ModelKind::Pendulum)
        throw std::invalid_argument("verify_pt_symmetry: model must be an undriven pendulum");
    SymmetryReport report;
    double shift = 0.0;
    if (model.g().imag() == 0.0) {
        report.map_kind = SymmetryMap::RealG_PT;
    } else if (model.g().real() == 0.0) {
        report.map_kind = SymmetryMap::ImagG_PT;
        shift = kPi;
    } else {
        throw std::invalid_argument("verify_pt_symmetry: g must be real or purely imaginary");
    }
    if (traj.samples.empty())
        throw std::invalid_argument("verify_pt_symmetry: empty trajectory");

    auto map_state = [&](const PhaseState& st) {
        return PhaseState{shift - std::conj(st.x), std::conj(st.p), st.t};
    };

    const PhaseState& s0 = traj.samples.front();
    const double duration = std::abs(traj.samples.back().t - s0.t);
    IntegratorConfig back = cfg;
    back.direction = -1;
    back.max_time = duration;
    EventSpec events;
    events.closure = false;
    const Trajectory mirrored = integrate(model, map_state(s0), back, events);

    const std::size_t n = std::min(traj.samples.size(), mirrored.samples.size());
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const PhaseState& orig = traj.samples[i];
        const PhaseState& mir = mirrored.samples[i];
        const double elapsed = orig.t - s0.t;
        const double elapsed_mirror = s0.t - mir.t;
        if (std::abs(elapsed - elapsed_mirror) > 1e-9 * std::max(1.0, std::abs(elapsed)))
            continue;
        worst = std::max(worst, scaled_phase_distance(mir, map_state(orig)));
        ++compared;
    }
    if (compared == 0)
        throw std::invalid_argument("verify_pt_symmetry: no matching sample times to compare");
    report.max_deviation = worst;
    report.verified = worst <= tol;
    return report;
}

EllipseFit fit_ellipse(const Trajectory& traj)
{
    const auto& s = traj.samples;
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    if (n < 6)
        throw DegenerateConic("fit_ellipse: need at least 6 samples");

    double mx = 0.0, my = 0.0;
    for (const PhaseState& st : s) {
        mx += st.x.real();
        my += st.x.imag();
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double scale = 0.0;
    for (const PhaseState& st : s)
        scale += std::pow(st.x.real() - mx, 2) + std::pow(st.x.imag() - my, 2);
    scale = std::sqrt(scale / static_cast<double>(n));
    if (!(scale > 0.0))
        throw DegenerateConic("fit_ellipse: all samples coincide");

    Eigen::VectorXd u(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        u(i) = (s[static_cast<std::size_t>(i)].x.real() - mx) / scale;
        v(i) = (s[static_cast<std::size_t>(i)].x.imag() - my) / scale;
    }

    Eigen::Matrix2d cov;
    cov << u.dot(u), u.dot(v), u.dot(v), v.dot(v);
    const Eigen::Vector2d spread = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
    if (spread(0) <= 1e-10 * spread(1))
        throw DegenerateConic("fit_ellipse: samples are collinear");

    Eigen::MatrixXd design(n, 6);
    design.col(0) = u.cwiseProduct(u);
    design.col(1) = u.cwiseProduct(v);
    design.col(2) = v.cwiseProduct(v);
    design.col(3) = u;
    design.col(4) = v;
    design.col(5).setOnes();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinV);
    const Eigen::VectorXd c = svd.matrixV().col(5);
    const double A = c(0), B = c(1), C = c(2), D = c(3), E = c(4), F = c(5);

    if (B * B - 4.0 * A * C >= 0.0)
        throw DegenerateConic("fit_ellipse: best-fit conic is not an ellipse");

    Eigen::Matrix2d Q;
    Q << 2.0 * A, B, B, 2.0 * C;
    const Eigen::Vector2d centre = Q.fullPivLu().solve(Eigen::Vector2d(-D, -E));
    const double f_centre = F + 0.5 * (D * centre(0) + E * centre(1));

    Eigen::Matrix2d M;
    M << A, 0.5 * B, 0.5 * B, C;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(M);
    const Eigen::Vector2d lambda = eig.eigenvalues();
    const double r0 = -f_centre / lambda(0), r1 = -f_centre / lambda(1);
    if (!(r0 > 0.0 && r1 > 0.0))
        throw DegenerateConic("fit_ellipse: best-fit conic has no real points");

    // Smaller eigenvalue <=> longer axis.
    const double major = std::sqrt(std::max(r0, r1)) * scale;
    const double minor = std::sqrt(std::min(r0, r1)) * scale;
    const Eigen::Vector2d major_dir = r0 >= r1 ? eig.eigenvectors().col(0) : eig.eigenvectors().col(1);
    double angle = std::atan2(major_dir(1), major_dir(0));
    if (angle <= -0.5 * kPi)
        angle += kPi;
    else if (angle > 0.5 * kPi)
        angle -= kPi;

    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = u(i), y = v(i);
        const double q = A * x * x + B * x * y + C * y * y + D * x + E * y + F;
        const double gx = 2.0 * A * x + B * y + D, gy = B * x + 2.0 * C * y + E;
        const double gnorm = std::hypot(gx, gy);
        const double dist = gnorm > 0.0 ? q / gnorm : 0.0;
        sum += dist * dist;
    }
    const double rms = std::sqrt(sum / static_cast<double>(n)) * scale;

    EllipseFit fit;
    fit.center = {mx + scale * centre(0), my + scale * centre(1)};
    fit.semi_axes = {major, minor};
    fit.orientation = angle;
    fit.residual = rms / major;
    return fit;
}

std::vector<CellTransition> cell_escape_summary(const Trajectory& traj)
{
    std::vector<CellTransition> out;
    if (!traj.cell_history.empty()) {
        for (std::size_t i = 1; i < traj.cell_history.size(); ++i)
            out.push_back({traj.cell_history[i].t, traj.cell_history[i - 1].cell, traj.cell_history[i].cell});
        return out;
    }
    if (traj.samples.empty())
        return out;
    int current = cell_index(traj.samples.front().x);
    for (const PhaseState& st : traj.samples) {
        const int k = cell_index(st.x);
        if (k != current) {
            out.push_back({st.t, current, k});
            current = k;
        }
    }
    return out;
}

}  // namespace cpend
