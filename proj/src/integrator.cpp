#include "cpend/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace cpend {

namespace {

using State = std::array<Complex, 2>;  // {x, p}

State operator+(const State& a, const State& b) { return {a[0] + b[0], a[1] + b[1]}; }
State operator-(const State& a, const State& b) { return {a[0] - b[0], a[1] - b[1]}; }
State operator*(double s, const State& a) { return {s * a[0], s * a[1]}; }

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;

struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;  // signed
    std::array<State, 5> r{};

    State at(double theta) const
    {
        const double th1 = 1.0 - theta;
        return r[0] + theta * (r[1] + th1 * (r[2] + theta * (r[3] + th1 * r[4])));
    }
    double time(double theta) const { return t0 + theta * h; }
};

double max_abs_component(const State& y)
{
    double m = 0.0;
    for (const Complex& z : y)
        m = std::max({m, std::abs(z.real()), std::abs(z.imag())});
    return m;
}

bool finite(const State& y) { return is_finite(y[0]) && is_finite(y[1]); }

// Root of a continuous function on [lo, hi] with f(lo) and f(hi) of opposite sign
// (Illinois variant of regula falsi).
double bracket_root(const std::function<double(double)>& f, double lo, double hi, double flo, double fhi)
{
    int side = 0;
    double x = lo;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        x = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(x > lo && x < hi))
            x = 0.5 * (lo + hi);
        const double fx = f(x);
        if (fx == 0.0)
            return x;
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
            if (side == 1)
                flo *= 0.5;
            side = 1;
        } else {
            lo = x;
            flo = fx;
            if (side == -1)
                fhi *= 0.5;
            side = -1;
        }
    }
    return x;
}

class Integrator {
public:
    Integrator(const HamiltonianModel& model, const PhaseState& s0, const IntegratorConfig& cfg,
               const EventSpec& events)
        : model_(model), s0_(s0), cfg_(cfg), ev_(events), dir_(cfg.direction >= 0 ? 1.0 : -1.0)
    {
        if (!model_.is_autonomous())
            ev_.closure = false;
        y0_ = {s0.x, s0.p};
        e0_ = energy(model_, s0);
        traj_.model = model_;
    }

    Trajectory run();

private:
    State field(double t, const State& y) const
    {
        const PhaseVelocity v = vector_field(model_, {y[0], y[1], t});
        return {v.dx, v.dp};
    }

    double error_scale(double a, double b) const
    {
        return cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(a), std::abs(b));
    }

    double error_norm(const State& y, const State& ynew, const State& err) const
    {
        double sum = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double sr = error_scale(y[i].real(), ynew[i].real());
            const double si = error_scale(y[i].imag(), ynew[i].imag());
            sum += std::pow(err[i].real() / sr, 2) + std::pow(err[i].imag() / si, 2);
        }
        return std::sqrt(sum / 4.0);
    }

    double state_norm(const State& v, const State& y) const
    {
        double sum = 0.0;
        for (int i = 0; i < 2; ++i) {
            sum += std::pow(v[i].real() / (cfg_.abs_tol + cfg_.rel_tol * std::abs(y[i].real())), 2);
            sum += std::pow(v[i].imag() / (cfg_.abs_tol + cfg_.rel_tol * std::abs(y[i].imag())), 2);
        }
        return std::sqrt(sum / 4.0);
    }

    double initial_step(const State& y, const State& f0) const
    {
        const double dn0 = state_norm(y, y);
        const double dn1 = state_norm(f0, y);
        double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
        h0 = std::min(h0, cfg_.max_step);
        const State y1 = y + (dir_ * h0) * f0;
        const State f1 = field(s0_.t + dir_ * h0, y1);
        const double dn2 = state_norm(f1 - f0, y) / h0;
        const double dmax = std::max(dn1, dn2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
        return std::min({100.0 * h0, h1, cfg_.max_step});
    }

    double closure_function(const State& y, const State& f) const
    {
        const State d = y - y0_;
        return (std::conj(d[0]) * f[0] + std::conj(d[1]) * f[1]).real();
    }

    PhaseState to_phase(const State& y, double t) const { return {y[0], y[1], t}; }

    void push_sample(const State& y, double t)
    {
        if (!traj_.samples.empty()) {
            const double last = traj_.samples.back().t;
            if (std::abs(t - last) <= 1e-12 * std::max(1.0, std::abs(t))) {
                traj_.samples.back() = to_phase(y, t);
                traj_.energies.back() = energy(model_, traj_.samples.back());
                return;
            }
        }
        traj_.samples.push_back(to_phase(y, t));
        traj_.energies.push_back(energy(model_, traj_.samples.back()));
    }

    // Emits grid samples with theta in (0, theta_end].
    void emit_grid(const DenseStep& step, double theta_end, const State& ynew)
    {
        if (cfg_.sample_interval <= 0.0)
            return;
        const double habs = std::abs(step.h);
        while (true) {
            const double tau = s0_.t + dir_ * static_cast<double>(next_sample_) * cfg_.sample_interval;
            const double theta = dir_ * (tau - step.t0) / habs;
            if (theta > theta_end * (1.0 + 1e-14) || theta > 1.0 + 1e-14)
                break;
            const State y = theta >= 1.0 ? ynew : step.at(theta);
            push_sample(y, tau);
            ++next_sample_;
        }
    }

    // Records cell crossings with theta < theta_end.
    void track_cells(const DenseStep& step, double theta_end)
    {
        if (!ev_.cells)
            return;
        double lo = 0.0;
        while (true) {
            const State yend = step.at(theta_end);
            const int target = cell_index(yend[0]);
            if (target == current_cell_)
                return;
            const int next = target > current_cell_ ? current_cell_ + 1 : current_cell_ - 1;
            const double boundary = (target > current_cell_) ? (2 * current_cell_ + 1) * kPi
                                                             : (2 * current_cell_ - 1) * kPi;
            auto f = [&](double th) { return step.at(th)[0].real() - boundary; };
            const double flo = f(lo), fhi = f(theta_end);
            double th = theta_end;
            if ((flo < 0) != (fhi < 0))
                th = bracket_root(f, lo, theta_end, flo, fhi);
            traj_.cell_history.push_back({step.time(th), next});
            current_cell_ = next;
            lo = th;
        }
    }

    Trajectory finish(Classification c, Termination term)
    {
        traj_.classification = c;
        traj_.termination = term;
        return std::move(traj_);
    }

    HamiltonianModel model_;
    PhaseState s0_;
    IntegratorConfig cfg_;
    EventSpec ev_;
    double dir_;
    State y0_{};
    Complex e0_;
    Trajectory traj_;
    std::size_t next_sample_ = 1;
    int current_cell_ = 0;
};

Trajectory Integrator::run()
{
    const double t_end = s0_.t + dir_ * cfg_.max_time;
    double t = s0_.t;
    State y = y0_;

    push_sample(y, t);
    current_cell_ = cell_index(y[0]);
    if (ev_.cells)
        traj_.cell_history.push_back({t, current_cell_});

    if (!finite(y))
        return finish(Classification::BlowUp, Termination::NonFinite);
    if (cfg_.max_time == 0.0)
        return finish(Classification::Open, Termination::Horizon);

    State k1 = field(t, y);
    double h = initial_step(y, k1);
    double facold = 1e-4;
    bool departed = false;
    double g_prev = closure_function(y, k1);

    while (true) {
        if (traj_.accepted_steps + traj_.rejected_steps >= cfg_.max_steps) {
            push_sample(y, t);
            return finish(Classification::Truncated, Termination::MaxSteps);
        }
        const double remaining = dir_ * (t_end - t);
        bool last = false;
        if (h >= remaining) {
            h = remaining;
            last = true;
        }
        if (h < cfg_.min_step && !last) {
            push_sample(y, t);
            return finish(Classification::Truncated, Termination::StepUnderflow);
        }

        const double hs = dir_ * h;
        const State k2 = field(t + c2 * hs, y + (hs * a21) * k1);
        const State k3 = field(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
        const State k4 = field(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        const State k5 = field(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const State k6 = field(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const State ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        const double t_new = last ? t_end : t + hs;
        const State k7 = field(t_new, ynew);
        const State errv = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = error_norm(y, ynew, errv);

        if (!std::isfinite(err) || !finite(ynew)) {
            ++traj_.rejected_steps;
            h *= kFacMin;
            if (h < cfg_.min_step) {
                push_sample(y, t);
                return finish(Classification::BlowUp, Termination::NonFinite);
            }
            continue;
        }

        const double fac11 = std::pow(err, kExpo);
        if (err > 1.0) {
            ++traj_.rejected_steps;
            h /= std::min(1.0 / kFacMin, fac11 / kSafety);
            continue;
        }

        // Accepted.
        ++traj_.accepted_steps;
        DenseStep step;
        step.t0 = t;
        step.h = hs;
        {
            const State ydiff = ynew - y;
            const State bspl = hs * k1 - ydiff;
            step.r[0] = y;
            step.r[1] = ydiff;
            step.r[2] = bspl;
            step.r[3] = ydiff - hs * k7 - bspl;
            step.r[4] = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        }

        // Earliest terminal event inside this step.
        double theta_event = 2.0;
        Termination event_kind = Termination::Horizon;

        if (ev_.escape && std::abs(ynew[0].imag()) >= cfg_.escape_radius) {
            auto f = [&](double th) { return std::abs(step.at(th)[0].imag()) - cfg_.escape_radius; };
            const double flo = f(0.0);
            const double fhi = std::abs(ynew[0].imag()) - cfg_.escape_radius;
            const double th = (flo < 0.0 && fhi > 0.0) ? bracket_root(f, 0.0, 1.0, flo, fhi) : 1.0;
            theta_event = th;
            event_kind = Termination::Escape;
        }

        const double g_new = closure_function(ynew, k7);
        if (ev_.closure) {
            if (!departed) {
                // Departure is judged at the step end; a full loop inside one step is not expected
                // because max_step is a small fraction of any period of interest.
                departed = scaled_phase_distance(to_phase(ynew, t_new), s0_) > ev_.departure;
            } else if (g_prev < 0.0 && g_new >= 0.0) {
                auto g = [&](double th) {
                    const State ys = step.at(th);
                    return closure_function(ys, field(step.time(th), ys));
                };
                const double th = g_new == 0.0 ? 1.0 : bracket_root(g, 0.0, 1.0, g_prev, g_new);
                const State ys = th >= 1.0 ? ynew : step.at(th);
                const PhaseState ps = to_phase(ys, step.time(th));
                const State fs = field(ps.t, ys);
                const State f0 = field(s0_.t, y0_);
                const bool same_direction = (std::conj(fs[0]) * f0[0] + std::conj(fs[1]) * f0[1]).real() > 0.0;
                if (same_direction && scaled_phase_distance(ps, s0_) <= ev_.closure_tol && th < theta_event) {
                    theta_event = th;
                    event_kind = Termination::Closure;
                }
            }
        }
        g_prev = g_new;

        if (theta_event <= 1.0) {
            const double te = theta_event >= 1.0 ? t_new : step.time(theta_event);
            const State ye = theta_event >= 1.0 ? ynew : step.at(theta_event);
            track_cells(step, theta_event);
            emit_grid(step, theta_event, ynew);
            push_sample(ye, te);
            if (event_kind == Termination::Escape) {
                traj_.escape_time = dir_ * (te - s0_.t);
                return finish(Classification::Escaped, Termination::Escape);
            }
            traj_.period = dir_ * (te - s0_.t);
            return finish(Classification::Closed, Termination::Closure);
        }

        track_cells(step, 1.0);
        emit_grid(step, 1.0, ynew);
        if (cfg_.sample_interval <= 0.0)
            push_sample(ynew, t_new);

        t = t_new;
        y = ynew;
        k1 = k7;

        if (model_.is_autonomous()) {
            // Scaled by the terms being cancelled: near an escape |V| grows like
            // e^|Im x| and E = p^2/2 + V keeps only rel_tol * |V| absolute digits.
            const PhaseState s = to_phase(y, t);
            const double kin = 0.5 * std::norm(s.p);
            const double pot = std::abs(potential(model_, s.x, t));
            const double scale = std::max({1.0, std::abs(e0_), kin, pot});
            const double drift = std::abs(energy(model_, s) - e0_) / scale;
            traj_.max_energy_drift = std::max(traj_.max_energy_drift, drift);
        }

        if (max_abs_component(y) > cfg_.overflow_guard) {
            push_sample(y, t);
            return finish(Classification::BlowUp, Termination::Overflow);
        }
        if (last) {
            push_sample(y, t);
            return finish(Classification::Open, Termination::Horizon);
        }

        double fac = fac11 / std::pow(facold, kBeta);
        fac = std::clamp(fac / kSafety, 1.0 / kFacMax, 1.0 / kFacMin);
        facold = std::max(err, 1e-4);
        h = std::min(h / fac, cfg_.max_step);
    }
}

}  // namespace

void IntegratorConfig::validate() const
{
    if (!(rel_tol > 0.0))
        throw std::invalid_argument("integrator: rel_tol must be > 0");
    if (!(abs_tol > 0.0))
        throw std::invalid_argument("integrator: abs_tol must be > 0");
    if (!(min_step > 0.0))
        throw std::invalid_argument("integrator: min_step must be > 0");
    if (!(max_step >= min_step))
        throw std::invalid_argument("integrator: max_step must be >= min_step");
    if (!(escape_radius > 0.0))
        throw std::invalid_argument("integrator: escape_radius must be > 0");
    if (!(max_time >= 0.0) || !std::isfinite(max_time))
        throw std::invalid_argument("integrator: max_time must be finite and >= 0");
    if (!(sample_interval >= 0.0))
        throw std::invalid_argument("integrator: sample_interval must be >= 0");
    if (!(overflow_guard > 0.0))
        throw std::invalid_argument("integrator: overflow_guard must be > 0");
    if (max_steps == 0)
        throw std::invalid_argument("integrator: max_steps must be > 0");
    if (direction != 1 && direction != -1)
        throw std::invalid_argument("integrator: direction must be +1 or -1");
}

std::string to_string(Classification c)
{
    switch (c) {
    case Classification::Closed: return "closed";
    case Classification::Open: return "open";
    case Classification::Escaped: return "escaped";
    case Classification::Truncated: return "truncated";
    case Classification::BlowUp: return "blowup";
    }
    return "unknown";
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::Horizon: return "horizon";
    case Termination::Closure: return "closure";
    case Termination::Escape: return "escape";
    case Termination::Overflow: return "overflow";
    case Termination::NonFinite: return "non-finite";
    case Termination::StepUnderflow: return "step-underflow";
    case Termination::MaxSteps: return "max-steps";
    }
    return "unknown";
}

int cell_index(Complex x)
{
    return static_cast<int>(std::floor((x.real() + kPi) / (2.0 * kPi)));
}

double scaled_phase_distance(const PhaseState& s, const PhaseState& ref)
{
    const double d = std::sqrt(std::norm(s.x - ref.x) + std::norm(s.p - ref.p));
    return d / (1.0 + std::sqrt(std::norm(ref.x) + std::norm(ref.p)));
}

Trajectory integrate(const HamiltonianModel& model, const PhaseState& s0, const IntegratorConfig& cfg,
                     const EventSpec& events)
{
    cfg.validate();
    return Integrator(model, s0, cfg, events).run();
}

Trajectory integrate_driven(const HamiltonianModel& model, const PhaseState& s0, const IntegratorConfig& cfg)
{
    if (model.kind() != ModelKind::DrivenPendulum)
        throw std::invalid_argument("integrate_driven requires a driven-pendulum model");
    EventSpec events;
    events.closure = false;
    events.cells = true;
    return integrate(model, s0, cfg, events);
}

}  // namespace cpend
