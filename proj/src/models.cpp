#include "cpend/models.hpp"

#include <sstream>
#include <stdexcept>

namespace cpend {

HamiltonianModel HamiltonianModel::pendulum(Complex g)
{
    return {ModelKind::Pendulum, g, 0.0, 0.0};
}

HamiltonianModel HamiltonianModel::harmonic()
{
    return {ModelKind::Harmonic, 0.0, 0.0, 0.0};
}

HamiltonianModel HamiltonianModel::cubic_i()
{
    return {ModelKind::CubicI, 0.0, 0.0, 0.0};
}

HamiltonianModel HamiltonianModel::driven_pendulum(Complex g, double epsilon, double omega)
{
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("driven pendulum requires epsilon >= 0");
    if (!(omega > 0.0))
        throw std::invalid_argument("driven pendulum requires omega > 0");
    return {ModelKind::DrivenPendulum, g, epsilon, omega};
}

std::string to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::Pendulum: return "pendulum";
    case ModelKind::Harmonic: return "harmonic";
    case ModelKind::CubicI: return "cubic-i";
    case ModelKind::DrivenPendulum: return "driven-pendulum";
    }
    return "unknown";
}

std::string HamiltonianModel::describe() const
{
    std::ostringstream os;
    os << to_string(kind_);
    if (is_pendulum_family()) {
        os << "(g=" << g_.real() << (g_.imag() < 0 ? "-" : "+") << std::abs(g_.imag()) << "i";
        if (kind_ == ModelKind::DrivenPendulum)
            os << ", eps=" << epsilon_ << ", omega=" << omega_;
        os << ")";
    }
    return os.str();
}

Complex potential(const HamiltonianModel& model, Complex x, double /*t*/)
{
    switch (model.kind()) {
    case ModelKind::Pendulum:
    case ModelKind::DrivenPendulum: return -model.g() * ccos(x);
    case ModelKind::Harmonic: return 0.5 * x * x;
    case ModelKind::CubicI: return kI * x * x * x;
    }
    return 0.0;
}

Complex potential_derivative(const HamiltonianModel& model, Complex x)
{
    switch (model.kind()) {
    case ModelKind::Pendulum:
    case ModelKind::DrivenPendulum: return model.g() * csin(x);
    case ModelKind::Harmonic: return x;
    case ModelKind::CubicI: return 3.0 * kI * x * x;
    }
    return 0.0;
}

Complex potential_second_derivative(const HamiltonianModel& model, Complex x)
{
    switch (model.kind()) {
    case ModelKind::Pendulum:
    case ModelKind::DrivenPendulum: return model.g() * ccos(x);
    case ModelKind::Harmonic: return 1.0;
    case ModelKind::CubicI: return 6.0 * kI * x;
    }
    return 0.0;
}

Complex energy(const HamiltonianModel& model, const PhaseState& s)
{
    return 0.5 * s.p * s.p + potential(model, s.x, s.t);
}

PhaseVelocity vector_field(const HamiltonianModel& model, const PhaseState& s)
{
    Complex dp = -potential_derivative(model, s.x);
    if (model.kind() == ModelKind::DrivenPendulum)
        dp += model.epsilon() * std::sin(model.omega() * s.t);
    return {s.p, dp};
}

Complex momentum_from_energy(const HamiltonianModel& model, Complex x, Complex E, Branch branch)
{
    const Complex p = principal_sqrt(2.0 * (E - potential(model, x)));
    return branch == Branch::Plus ? p : -p;
}

}  // namespace cpend
