#pragma once

#include <string>

#include "cpend/complex.hpp"

namespace cpend {

enum class ModelKind { Pendulum, Harmonic, CubicI, DrivenPendulum };

/// H = p^2/2 + V(x) for one of four families. m = L = 1 throughout.
///
///   Pendulum        V = -g cos x
///   Harmonic        V = x^2/2
///   CubicI          V = i x^3
///   DrivenPendulum  V = -g cos x, plus a real force eps*sin(omega t) on dp/dt
class HamiltonianModel {
public:
    static HamiltonianModel pendulum(Complex g = 1.0);
    static HamiltonianModel harmonic();
    static HamiltonianModel cubic_i();
    /// Throws std::invalid_argument unless epsilon >= 0 and omega > 0.
    static HamiltonianModel driven_pendulum(Complex g, double epsilon, double omega);

    ModelKind kind() const { return kind_; }
    Complex g() const { return g_; }
    double epsilon() const { return epsilon_; }
    double omega() const { return omega_; }

    bool is_autonomous() const { return kind_ != ModelKind::DrivenPendulum; }
    bool is_pendulum_family() const
    {
        return kind_ == ModelKind::Pendulum || kind_ == ModelKind::DrivenPendulum;
    }

    /// Short human-readable description, e.g. "pendulum(g=0+1i)".
    std::string describe() const;

    friend bool operator==(const HamiltonianModel&, const HamiltonianModel&) = default;

private:
    HamiltonianModel(ModelKind kind, Complex g, double epsilon, double omega)
        : kind_(kind), g_(g), epsilon_(epsilon), omega_(omega)
    {
    }

    ModelKind kind_;
    Complex g_;
    double epsilon_;
    double omega_;
};

std::string to_string(ModelKind kind);

/// A point of the complexified flow.
struct PhaseState {
    Complex x;
    Complex p;
    double t = 0.0;
};

struct PhaseVelocity {
    Complex dx;
    Complex dp;
};

enum class Branch { Plus, Minus };

// The drive enters as a force, so V is t-independent even for the driven kind.
Complex potential(const HamiltonianModel& model, Complex x, double t = 0.0);

/// dV/dx.
Complex potential_derivative(const HamiltonianModel& model, Complex x);

/// d^2V/dx^2.
Complex potential_second_derivative(const HamiltonianModel& model, Complex x);

/// p^2/2 + V(x). Instantaneous undriven energy for DrivenPendulum.
Complex energy(const HamiltonianModel& model, const PhaseState& s);

/// Hamilton's equations: dx/dt = p, dp/dt = -V'(x) [+ eps sin(omega t)].
PhaseVelocity vector_field(const HamiltonianModel& model, const PhaseState& s);

/// p = +/- sqrt(2(E - V(x))) on the principal root.
Complex momentum_from_energy(const HamiltonianModel& model, Complex x, Complex E, Branch branch);

}  // namespace cpend
