#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cpend/integrator.hpp"
#include "cpend/quadrature.hpp"

using namespace cpend;

namespace {

const auto pend = HamiltonianModel::pendulum();
const auto sho = HamiltonianModel::harmonic();

PhaseState on_energy(const HamiltonianModel& m, Complex x, Complex E, Branch b = Branch::Plus)
{
    return {x, momentum_from_energy(m, x, E, b), 0.0};
}

IntegratorConfig horizon(double T)
{
    IntegratorConfig c;
    c.max_time = T;
    return c;
}

EventSpec no_events()
{
    EventSpec e;
    e.escape = false;
    e.closure = false;
    return e;
}

// Sample nearest to time t (grids are uniform, so matched times coincide).
const PhaseState& at(const Trajectory& tr, double t)
{
    const PhaseState* best = &tr.samples.front();
    for (const auto& s : tr.samples) {
        if (std::abs(s.t - t) < std::abs(best->t - t))
            best = &s;
    }
    return *best;
}

void check_structure(const Trajectory& tr, int direction)
{
    REQUIRE(tr.samples.size() >= 2);
    for (std::size_t k = 1; k < tr.samples.size(); ++k)
        CHECK(direction * (tr.samples[k].t - tr.samples[k - 1].t) > 0.0);
    CHECK(tr.samples.size() == tr.energies.size());
    CHECK((tr.classification == Classification::Closed) == tr.period.has_value());
    CHECK((tr.classification == Classification::Escaped) == tr.escape_time.has_value());
}

}  // namespace

TEST_CASE("config validation")
{
    IntegratorConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = [](auto mutate) {
        IntegratorConfig k;
        mutate(k);
        CHECK_THROWS_AS(k.validate(), std::invalid_argument);
        CHECK_THROWS_AS(integrate(sho, {1.0, 0.0}, k), std::invalid_argument);
    };
    bad([](IntegratorConfig& k) { k.rel_tol = 0.0; });
    bad([](IntegratorConfig& k) { k.abs_tol = -1.0; });
    bad([](IntegratorConfig& k) { k.min_step = 0.0; });
    bad([](IntegratorConfig& k) { k.max_step = 1e-20; });
    bad([](IntegratorConfig& k) { k.max_time = NAN; });
    bad([](IntegratorConfig& k) { k.direction = 0; });
    bad([](IntegratorConfig& k) { k.sample_interval = -1.0; });
}

TEST_CASE("harmonic orbits follow the exact solution and close at 2pi")
{
    for (const Complex x0 : {Complex(1, 1), Complex(1.2, 0.1), Complex(0, 2), Complex(-0.5, 0.3)}) {
        const PhaseState s0 = on_energy(sho, x0, 1.0);
        const Trajectory tr = integrate(sho, s0, horizon(20.0));
        check_structure(tr, +1);
        CHECK(tr.classification == Classification::Closed);
        CHECK(tr.termination == Termination::Closure);
        CHECK(*tr.period == doctest::Approx(2 * kPi).epsilon(1e-6 / (2 * kPi)));
        for (const auto& s : tr.samples) {
            const Complex exact = s0.x * std::cos(s.t) + s0.p * std::sin(s.t);
            CHECK(std::abs(s.x - exact) <= 1e-9);
        }
    }
}

TEST_CASE("E=0 pendulum orbit from the imaginary axis is closed")
{
    const Trajectory tr = integrate(pend, on_energy(pend, 0.3 * kI, 0.0), horizon(40.0));
    CHECK(tr.classification == Classification::Closed);
    CHECK(*tr.period == doctest::Approx(4 * elliptic_K(0.5)).epsilon(1e-8));
}

TEST_CASE("escape from pi+i at E=cosh 1")
{
    IntegratorConfig c = horizon(10.0);
    c.escape_radius = 30.0;
    const Trajectory tr = integrate(pend, {kPi + kI, 0.0}, c);
    check_structure(tr, +1);
    CHECK(tr.classification == Classification::Escaped);
    CHECK(tr.termination == Termination::Escape);
    CHECK(std::abs(tr.samples.back().x.imag()) == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(std::abs(*tr.escape_time - 1.97536) <= 1e-3);
    CHECK(tr.samples.back().x.imag() > 0);
}

TEST_CASE("escape time increases with the radius and converges to the quadrature value")
{
    const TurningPoint tp = refine_root(pend, std::cosh(1.0), kPi + kI);
    const double T_inf = escape_time(pend, std::cosh(1.0), tp);
    double prev = 0.0;
    for (double R : {5.0, 10.0, 20.0, 25.0, 30.0, 40.0}) {
        IntegratorConfig c = horizon(10.0);
        c.escape_radius = R;
        const Trajectory tr = integrate(pend, {kPi + kI, 0.0}, c);
        REQUIRE(tr.escape_time);
        CHECK(*tr.escape_time > prev);
        prev = *tr.escape_time;
        if (R >= 20.0)
            CHECK(std::abs(*tr.escape_time - T_inf) <= 1e-3);
    }
}

TEST_CASE("forward then backward returns to the start")
{
    const PhaseState s0 = on_energy(pend, 0.4 + 0.7 * kI, std::cosh(1.0));
    IntegratorConfig c = horizon(5.0);
    const Trajectory fwd = integrate(pend, s0, c, no_events());
    REQUIRE(fwd.termination == Termination::Horizon);
    c.direction = -1;
    const Trajectory back = integrate(pend, fwd.samples.back(), c, no_events());
    check_structure(back, -1);
    const PhaseState& end = back.samples.back();
    CHECK(end.t == doctest::Approx(0.0).epsilon(1e-12));
    // 10x the accumulated tolerance of both legs.
    const double bound = 10 * 2 * (fwd.accepted_steps + back.accepted_steps) * c.rel_tol;
    CHECK(scaled_phase_distance(end, s0) <= bound);
}

TEST_CASE("energy drift is small and converges with the tolerance")
{
    // Ten periods of an E=0 complex orbit at default tolerances.
    IntegratorConfig c = horizon(10 * 7.4162987);
    const Trajectory tr = integrate(pend, on_energy(pend, 0.6 * kI, 0.0), c, no_events());
    CHECK(tr.termination == Termination::Horizon);
    CHECK(tr.max_energy_drift <= 1e-8);

    // Tightening rel_tol 10x shrinks the drift at least 5x.
    const PhaseState s0 = on_energy(pend, 0.5 * kI, std::cosh(1.0));
    IntegratorConfig loose = horizon(30.0);
    loose.rel_tol = 1e-8;
    loose.abs_tol = 1e-10;
    IntegratorConfig tight = loose;
    tight.rel_tol = 1e-9;
    tight.abs_tol = 1e-11;
    const double d1 = integrate(pend, s0, loose, no_events()).max_energy_drift;
    const double d2 = integrate(pend, s0, tight, no_events()).max_energy_drift;
    CHECK(d1 >= 5 * d2);
}

TEST_CASE("halving max_step leaves sampled states unchanged within tolerance")
{
    const PhaseState s0 = on_energy(pend, 0.5 + 0.5 * kI, 0.0);
    IntegratorConfig a = horizon(15.0);
    IntegratorConfig b = a;
    b.max_step = a.max_step / 2;
    const Trajectory ta = integrate(pend, s0, a, no_events());
    const Trajectory tb = integrate(pend, s0, b, no_events());
    REQUIRE(ta.samples.size() == tb.samples.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < ta.samples.size(); ++k) {
        CHECK(ta.samples[k].t == tb.samples[k].t);
        worst = std::max(worst, scaled_phase_distance(ta.samples[k], tb.samples[k]));
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("blow-up and truncation are reported, not thrown")
{
    IntegratorConfig c = horizon(10.0);
    c.overflow_guard = 1e8;
    EventSpec e;
    e.escape = false;
    const Trajectory tr = integrate(pend, {kPi + kI, 0.0}, c, e);
    CHECK(tr.classification == Classification::BlowUp);
    CHECK(tr.termination == Termination::Overflow);

    IntegratorConfig t = horizon(10.0);
    t.min_step = 0.2;
    t.rel_tol = 1e-14;
    t.abs_tol = 1e-16;
    const Trajectory tt = integrate(pend, on_energy(pend, 0.3 * kI, 0.0), t);
    CHECK(tt.classification == Classification::Truncated);
    CHECK(tt.termination == Termination::StepUnderflow);
    CHECK(tt.samples.size() >= 1);

    IntegratorConfig m = horizon(10.0);
    m.max_steps = 5;
    const Trajectory tm = integrate(pend, on_energy(pend, 0.3 * kI, 0.0), m);
    CHECK(tm.classification == Classification::Truncated);
    CHECK(tm.termination == Termination::MaxSteps);
}

TEST_CASE("sampling every accepted step")
{
    IntegratorConfig c = horizon(3.0);
    c.sample_interval = 0.0;
    const Trajectory tr = integrate(sho, on_energy(sho, 1.0 + kI, 1.0), c);
    CHECK(tr.samples.size() == tr.accepted_steps + 1);
    CHECK(tr.samples.back().t == doctest::Approx(3.0));
}

TEST_CASE("integration is deterministic")
{
    const PhaseState s0 = on_energy(pend, 0.2 + 0.9 * kI, std::cosh(1.0));
    const Trajectory a = integrate(pend, s0, horizon(20.0));
    const Trajectory b = integrate(pend, s0, horizon(20.0));
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k].t == b.samples[k].t);
        CHECK(a.samples[k].x == b.samples[k].x);
        CHECK(a.samples[k].p == b.samples[k].p);
    }
}

TEST_CASE("cell index")
{
    CHECK(cell_index(0.0) == 0);
    CHECK(cell_index(-kPi) == 0);
    CHECK(cell_index(kPi - 1e-9) == 0);
    CHECK(cell_index(kPi + 1e-9) == 1);
    CHECK(cell_index(-kPi - 1e-9) == -1);
    CHECK(cell_index(2 * kPi + 5.0 * kI) == 1);
    CHECK(cell_index(-7 * kPi) == -3);
}

TEST_CASE("driven runs")
{
    CHECK_THROWS_AS(integrate_driven(pend, {0.0, 0.0}, horizon(1.0)), std::invalid_argument);

    const auto drv = HamiltonianModel::driven_pendulum(1.0, 0.2, 0.1);
    const PhaseState s0 = on_energy(drv, kPi / 2 + 0.1, 0.0);
    CHECK(s0.p.imag() > 0.0);

    const Trajectory t100 = integrate_driven(drv, s0, horizon(100.0));
    check_structure(t100, +1);
    CHECK(t100.classification != Classification::Closed);
    REQUIRE_FALSE(t100.cell_history.empty());
    for (const auto& v : t100.cell_history)
        CHECK(v.cell == 0);
    for (const auto& s : t100.samples)
        CHECK(cell_index(s.x) == 0);

    const Trajectory t650 = integrate_driven(drv, s0, horizon(650.0));
    bool left = false;
    for (const auto& v : t650.cell_history)
        left = left || v.cell != 0;
    CHECK(left);
}

TEST_CASE("zero drive reproduces the undriven flow")
{
    const auto drv = HamiltonianModel::driven_pendulum(1.0, 0.0, 0.1);
    const PhaseState s0 = on_energy(pend, 0.3 + 0.4 * kI, 0.0);
    const Trajectory a = integrate_driven(drv, s0, horizon(20.0));
    EventSpec e = no_events();
    e.cells = true;
    const Trajectory b = integrate(pend, s0, horizon(20.0), e);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k].x == b.samples[k].x);
        CHECK(a.samples[k].p == b.samples[k].p);
    }
}
