#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpend/error.hpp"
#include "cpend/integrator.hpp"
#include "cpend/models.hpp"
#include "cpend/turning.hpp"

namespace cpend {

/// File-system failure while reading a config or writing results.
class IoError : public Error {
public:
    using Error::Error;
};

enum class Analysis { Closure, Pt, Ellipse, Cells, EscapeTime, Period };

std::string to_string(Analysis a);

struct StartSpec {
    enum class Kind {
        Explicit,      // x and p given
        EnergyBranch,  // x given, p = +/- sqrt(2(E - V(x)))
        TurningPoint,  // x refined to a root of V(x) = E, p = 0
        TurningIndex,  // k-th entry of the scenario's turning-point window list, p = 0
    };
    Kind kind = Kind::Explicit;
    Complex x;
    Complex p;
    Branch branch = Branch::Plus;
    int index = 0;
    std::string label;
};

struct QuadratureSpec {
    /// Seeds for turning points from which escape_time is evaluated.
    std::vector<Complex> escape_from;
    double cutoff = 60.0;
    /// Seeds for the two turning points enclosed by the period contour.
    std::optional<std::pair<Complex, Complex>> period_pair;
    std::vector<double> offsets{0.5};
    /// Parameters m at which the complete elliptic integral K(m) is reported.
    std::vector<double> elliptic_K;
};

struct Scenario {
    std::string name;
    std::string anchor;
    HamiltonianModel model = HamiltonianModel::pendulum();
    std::optional<Complex> energy;
    std::vector<StartSpec> starts;
    IntegratorConfig integrator;
    EventSpec events;
    std::vector<Analysis> analyses;
    double pt_tol = 1e-6;
    QuadratureSpec quadrature;
    std::optional<Window> turning_window;
    TurningPointOptions turning_options;
    /// Relative to the working directory; empty means out/<name>.
    std::string output_directory;

    bool wants(Analysis a) const;
};

/// Parses a scenario document (JSON). Throws ConfigError naming the offending key.
Scenario parse_scenario(std::string_view text);

/// A bundled scenario name, or a path to a config file. Throws IoError when the
/// file cannot be read and ConfigError when it does not parse.
Scenario load_scenario(std::string_view name_or_path);

/// Command-line overrides applied on top of a parsed scenario.
struct ScenarioOverrides {
    std::optional<double> tol;
    std::optional<double> horizon;
    bool seed_grid = false;
    std::optional<std::filesystem::path> out_dir;
};

void apply_overrides(Scenario& scenario, const ScenarioOverrides& overrides);

/// Throws ConfigError when the start cannot be turned into a finite state.
PhaseState resolve_start(const Scenario& scenario, const StartSpec& start);

struct ScenarioOutput {
    std::filesystem::path directory;
    std::filesystem::path summary;
    std::vector<std::filesystem::path> trajectories;
};

/// Integrates every start, runs the requested analyses and writes one CSV per
/// start plus summary.json into `directory`. Engine failures are recorded in
/// the summary; only ConfigError and IoError propagate.
ScenarioOutput run_scenario(const Scenario& scenario, const std::filesystem::path& directory);

/// The `run` subcommand: load, override, run. Returns the process exit code
/// (0 success, 2 config error, 3 I/O error) after reporting to `out` / `err`.
int run_scenario_command(std::string_view name_or_path, const ScenarioOverrides& overrides, std::ostream& out,
                         std::ostream& err);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

struct BundledScenario {
    std::string_view name;
    std::string_view text;
};

/// Scenario files compiled into the library, sorted by name.
std::span<const BundledScenario> bundled_scenarios();

/// (name, anchor) for every bundled scenario.
std::vector<std::pair<std::string, std::string>> list_scenarios();

/// "pendulum", "pendulum:g=i", "harmonic", "cubic", "driven:g=1,eps=0.2,omega=0.1".
HamiltonianModel parse_model_spec(std::string_view spec);

/// "re_min,re_max,im_min,im_max", each an expression.
Window parse_window(std::string_view spec);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Header `t,re_x,im_x,re_p,im_p,re_E,im_E`, plus `,cell` when with_cell.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool with_cell);

}  // namespace cpend
