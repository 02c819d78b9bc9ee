#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cpend/models.hpp"

namespace cpend {

struct IntegratorConfig {
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
    double max_step = 0.25;
    double min_step = 1e-13;
    /// Escape event fires when |Im x| reaches this value.
    double escape_radius = 30.0;
    /// Horizon length, measured from the start time in the direction of integration.
    double max_time = 100.0;
    std::size_t max_steps = 20'000'000;
    /// Spacing of the uniform sample grid; 0 records every accepted step instead.
    double sample_interval = 0.02;
    /// Any |component| above this is classified BlowUp.
    double overflow_guard = 1e12;
    /// +1 forward in time, -1 backward.
    int direction = +1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct EventSpec {
    bool escape = true;
    /// First return to the start in phase space. Ignored for non-autonomous models.
    bool closure = true;
    /// Record 2*pi cell crossings of Re x.
    bool cells = false;
    /// Scaled phase-space distance accepted as a return.
    double closure_tol = 1e-7;
    /// The orbit must first move this far (scaled) before a return counts.
    double departure = 1e-3;
};

enum class Classification { Closed, Open, Escaped, Truncated, BlowUp };

enum class Termination { Horizon, Closure, Escape, Overflow, NonFinite, StepUnderflow, MaxSteps };

std::string to_string(Classification c);
std::string to_string(Termination t);

struct CellVisit {
    double t;
    int cell;
};

/// Samples are strictly monotone in t along the direction of integration.
/// classification == Closed  <=> period has a value;
/// classification == Escaped <=> escape_time has a value.
struct Trajectory {
    HamiltonianModel model = HamiltonianModel::pendulum();
    std::vector<PhaseState> samples;
    /// energy(model, samples[i]); the instantaneous undriven energy for driven runs.
    std::vector<Complex> energies;
    Classification classification = Classification::Open;
    Termination termination = Termination::Horizon;
    std::optional<double> period;
    std::optional<double> escape_time;
    /// Initial cell followed by every crossing, in time order.
    std::vector<CellVisit> cell_history;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    /// max |E(t) - E(0)| / max(1, |E(0)|, |p^2/2|, |V(x)|) over accepted steps;
    /// autonomous models only.
    double max_energy_drift = 0.0;
};

/// k = floor((Re x + pi) / 2pi); the central cell k = 0 holds the real segment [-pi, pi).
int cell_index(Complex x);

/// sqrt(|dx|^2 + |dp|^2) / (1 + sqrt(|x_ref|^2 + |p_ref|^2)).
double scaled_phase_distance(const PhaseState& s, const PhaseState& ref);

/// Adaptive Dormand-Prince 5(4) integration of Hamilton's equations with the
/// complex state treated as four real components. Stops at the first terminal
/// event (escape, closure, overflow, horizon). Engine failures are reported in
/// the returned trajectory rather than thrown; only an invalid config throws.
Trajectory integrate(const HamiltonianModel& model, const PhaseState& s0, const IntegratorConfig& cfg,
                     const EventSpec& events = {});

/// Driven-pendulum run: never classified Closed, always records cell history.
/// Throws std::invalid_argument for any other model kind.
Trajectory integrate_driven(const HamiltonianModel& model, const PhaseState& s0, const IntegratorConfig& cfg);

}  // namespace cpend
