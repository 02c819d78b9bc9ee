// Command-line front end: scenario runner plus direct access to the
// turning-point, escape-time and period computations.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cpend/expression.hpp"
#include "cpend/quadrature.hpp"
#include "cpend/scenario.hpp"
#include "cpend/turning.hpp"

namespace {

std::string fmt_complex(cpend::Complex z)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.15g%+.15gi", z.real(), z.imag());
    return buf;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Complex classical trajectories of the pendulum and related Hamiltonians"};
    app.require_subcommand(1);

    cpend::ScenarioOverrides overrides;
    std::string config;
    std::optional<double> tol, horizon;
    std::string out_dir;
    bool seed_grid = false;

    auto* run = app.add_subcommand("run", "Run a scenario file or bundled scenario");
    run->add_option("config", config, "Path to a scenario file, or a bundled scenario name")->required();
    run->add_option("--tol", tol, "Integrator relative tolerance (absolute = tol/100)");
    run->add_option("--horizon", horizon, "Integration horizon");
    run->add_option("--out", out_dir, "Output directory (default out/<name>)");
    run->add_flag("--seed-grid", seed_grid, "Locate turning points by the Newton seed grid only");

    auto* list = app.add_subcommand("list", "List bundled scenarios");
    std::string show_name;
    list->add_option("name", show_name, "Print the bundled scenario file with this name");

    std::string model_spec, energy_text, window_text, tp_text;
    double cutoff = cpend::kDefaultEscapeCutoff;
    double spacing = 0.5;

    auto* tps = app.add_subcommand("turning-points", "Turning points of a model at energy E inside a window");
    tps->add_option("model", model_spec, "pendulum[:g=..], harmonic, cubic, driven:g=..,eps=..,omega=..")->required();
    tps->add_option("E", energy_text, "Energy expression, e.g. cosh(1)")->required();
    tps->add_option("window", window_text, "re_min,re_max,im_min,im_max")->required();
    tps->add_flag("--seed-grid", seed_grid, "Skip closed forms");
    tps->add_option("--spacing", spacing, "Seed grid spacing");

    auto* esc = app.add_subcommand("escape-time", "Time to run from a turning point to |Im x| = cutoff");
    esc->add_option("model", model_spec)->required();
    esc->add_option("E", energy_text)->required();
    esc->add_option("tp", tp_text, "Turning point seed, refined by Newton")->required();
    esc->add_option("--cutoff", cutoff, "Absolute |Im x| at which the ray ends");

    std::string left_text = "-pi/2", right_text = "pi/2";
    std::vector<double> offsets{0.25, 0.5, 1.0};
    auto* per = app.add_subcommand("period", "Period as a loop integral around a pair of turning points");
    per->add_option("model", model_spec)->required();
    per->add_option("E", energy_text)->required();
    per->add_option("--left", left_text, "Seed of the left turning point");
    per->add_option("--right", right_text, "Seed of the right turning point");
    per->add_option("--offset", offsets, "Contour offsets")->expected(1, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cpend::kExitConfig;
    }

    if (*run) {
        overrides.tol = tol;
        overrides.horizon = horizon;
        overrides.seed_grid = seed_grid;
        if (!out_dir.empty())
            overrides.out_dir = out_dir;
        return cpend::run_scenario_command(config, overrides, std::cout, std::cerr);
    }

    if (*list) {
        if (!show_name.empty()) {
            for (const auto& b : cpend::bundled_scenarios()) {
                if (b.name == show_name) {
                    std::cout << b.text;
                    return cpend::kExitOk;
                }
            }
            std::cerr << "no bundled scenario named '" << show_name << "'\n";
            return cpend::kExitConfig;
        }
        for (const auto& [name, anchor] : cpend::list_scenarios())
            std::printf("%-10s %s\n", name.c_str(), anchor.c_str());
        return cpend::kExitOk;
    }

    try {
        const cpend::HamiltonianModel model = cpend::parse_model_spec(model_spec);
        const cpend::Complex E = cpend::parse_complex(energy_text);

        if (*tps) {
            cpend::TurningPointOptions opts;
            opts.force_seed_grid = seed_grid;
            opts.seed_spacing = spacing;
            const auto set = cpend::turning_points(model, E, cpend::parse_window(window_text), opts);
            std::cout << "# " << model.describe() << "  E=" << fmt_complex(E) << "  "
                      << (set.used_closed_form ? "closed form" : "seed grid") << "\n";
            for (const auto& tp : set.points) {
                std::printf("%s  n=%d  sign=%+d  |V-E|=%.2e\n", fmt_complex(tp.x0).c_str(), tp.lattice_index,
                            tp.branch_sign, std::abs(cpend::potential(model, tp.x0, 0.0) - E));
            }
            for (const auto& w : set.warnings)
                std::cerr << "warning: " << w << "\n";
            return cpend::kExitOk;
        }

        if (*esc) {
            const auto tp = cpend::refine_root(model, E, cpend::parse_complex(tp_text));
            const double T = cpend::escape_time(model, E, tp, cutoff);
            std::printf("turning point %s\nescape time %.15g  (|Im x| = %g)\n", fmt_complex(tp.x0).c_str(), T, cutoff);
            return cpend::kExitOk;
        }

        if (*per) {
            const auto a = cpend::refine_root(model, E, cpend::parse_complex(left_text));
            const auto b = cpend::refine_root(model, E, cpend::parse_complex(right_text));
            std::printf("turning points %s  %s\n", fmt_complex(a.x0).c_str(), fmt_complex(b.x0).c_str());
            for (double d : offsets) {
                const auto cp = cpend::period_contour(model, E, a, b, d);
                std::printf("offset %-6g period %.15g  |Im| %.2e\n", d, cp.period, cp.imaginary_part);
            }
            return cpend::kExitOk;
        }
    } catch (const cpend::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cpend::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return cpend::kExitOk;
}
