#include "cpend/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cpend/analysis.hpp"
#include "cpend/expression.hpp"
#include "cpend/quadrature.hpp"

namespace cpend {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + (where.empty() ? "" : ".") + key + ": unknown key");
    }
}

std::string join(const std::string& where, std::string_view key)
{
    return where.empty() ? std::string(key) : where + "." + std::string(key);
}

Complex as_complex(const json& v, const std::string& where)
{
    try {
        if (v.is_number())
            return v.get<double>();
        if (v.is_string())
            return parse_complex(v.get<std::string>());
        if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
            return {v[0].get<double>(), v[1].get<double>()};
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": expected a number, an expression string or [re, im]");
}

double as_real(const json& v, const std::string& where)
{
    const Complex c = as_complex(v, where);
    if (c.imag() != 0.0)
        throw ConfigError(where + ": must be real");
    if (!std::isfinite(c.real()))
        throw ConfigError(where + ": must be finite");
    return c.real();
}

bool as_bool(const json& v, const std::string& where)
{
    if (!v.is_boolean())
        throw ConfigError(where + ": expected true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where)
{
    if (!v.is_string())
        throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
}

HamiltonianModel model_from(ModelKind kind, Complex g, double eps, double omega, const std::string& where)
{
    switch (kind) {
    case ModelKind::Pendulum: return HamiltonianModel::pendulum(g);
    case ModelKind::Harmonic: return HamiltonianModel::harmonic();
    case ModelKind::CubicI: return HamiltonianModel::cubic_i();
    case ModelKind::DrivenPendulum:
        try {
            return HamiltonianModel::driven_pendulum(g, eps, omega);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    throw ConfigError(where + ": unknown model");
}

ModelKind kind_from_name(std::string_view name, const std::string& where)
{
    if (name == "pendulum")
        return ModelKind::Pendulum;
    if (name == "harmonic")
        return ModelKind::Harmonic;
    if (name == "cubic" || name == "cubic-i")
        return ModelKind::CubicI;
    if (name == "driven" || name == "driven-pendulum")
        return ModelKind::DrivenPendulum;
    throw ConfigError(where + ": unknown model kind '" + std::string(name) + "'");
}

HamiltonianModel parse_model(const json& v)
{
    check_keys(v, {"kind", "g", "epsilon", "omega"}, "model");
    if (!v.contains("kind"))
        throw ConfigError("model.kind: missing");
    const ModelKind kind = kind_from_name(as_string(v["kind"], "model.kind"), "model.kind");
    const Complex g = v.contains("g") ? as_complex(v["g"], "model.g") : Complex(1.0);
    const double eps = v.contains("epsilon") ? as_real(v["epsilon"], "model.epsilon") : 0.0;
    const double omega = v.contains("omega") ? as_real(v["omega"], "model.omega") : 1.0;
    return model_from(kind, g, eps, omega, "model");
}

StartSpec parse_start(const json& v, const std::string& where)
{
    check_keys(v, {"x", "p", "branch", "turning_point", "turning_index", "label"}, where);
    StartSpec s;
    if (v.contains("label"))
        s.label = as_string(v["label"], join(where, "label"));
    const int forms = int(v.contains("p")) + int(v.contains("branch")) + int(v.contains("turning_point")) +
                      int(v.contains("turning_index"));
    if (forms != 1)
        throw ConfigError(where + ": give exactly one of p, branch, turning_point, turning_index");
    if (v.contains("turning_point")) {
        if (v.contains("x"))
            throw ConfigError(join(where, "x") + ": not allowed with turning_point");
        s.kind = StartSpec::Kind::TurningPoint;
        s.x = as_complex(v["turning_point"], join(where, "turning_point"));
        return s;
    }
    if (v.contains("turning_index")) {
        if (v.contains("x"))
            throw ConfigError(join(where, "x") + ": not allowed with turning_index");
        if (!v["turning_index"].is_number_integer())
            throw ConfigError(join(where, "turning_index") + ": expected an integer");
        s.kind = StartSpec::Kind::TurningIndex;
        s.index = v["turning_index"].get<int>();
        return s;
    }
    if (!v.contains("x"))
        throw ConfigError(join(where, "x") + ": missing");
    s.x = as_complex(v["x"], join(where, "x"));
    if (v.contains("p")) {
        s.kind = StartSpec::Kind::Explicit;
        s.p = as_complex(v["p"], join(where, "p"));
    } else {
        s.kind = StartSpec::Kind::EnergyBranch;
        const std::string b = as_string(v["branch"], join(where, "branch"));
        if (b == "+" || b == "plus")
            s.branch = Branch::Plus;
        else if (b == "-" || b == "minus")
            s.branch = Branch::Minus;
        else
            throw ConfigError(join(where, "branch") + ": expected \"+\" or \"-\"");
    }
    return s;
}

void parse_integrator(const json& v, IntegratorConfig& cfg)
{
    check_keys(v,
               {"rel_tol", "abs_tol", "max_step", "min_step", "escape_radius", "horizon", "max_steps",
                "sample_interval", "overflow_guard", "direction"},
               "integrator");
    auto real = [&](const char* key, double& dst) {
        if (v.contains(key))
            dst = as_real(v[key], join("integrator", key));
    };
    real("rel_tol", cfg.rel_tol);
    real("abs_tol", cfg.abs_tol);
    real("max_step", cfg.max_step);
    real("min_step", cfg.min_step);
    real("escape_radius", cfg.escape_radius);
    real("horizon", cfg.max_time);
    real("sample_interval", cfg.sample_interval);
    real("overflow_guard", cfg.overflow_guard);
    if (v.contains("max_steps")) {
        if (!v["max_steps"].is_number_unsigned())
            throw ConfigError("integrator.max_steps: expected a positive integer");
        cfg.max_steps = v["max_steps"].get<std::size_t>();
    }
    if (v.contains("direction")) {
        if (!v["direction"].is_number_integer())
            throw ConfigError("integrator.direction: expected 1 or -1");
        cfg.direction = v["direction"].get<int>();
    }
}

void parse_events(const json& v, EventSpec& ev)
{
    check_keys(v, {"escape", "closure", "cells", "closure_tol", "departure"}, "events");
    if (v.contains("escape"))
        ev.escape = as_bool(v["escape"], "events.escape");
    if (v.contains("closure"))
        ev.closure = as_bool(v["closure"], "events.closure");
    if (v.contains("cells"))
        ev.cells = as_bool(v["cells"], "events.cells");
    if (v.contains("closure_tol"))
        ev.closure_tol = as_real(v["closure_tol"], "events.closure_tol");
    if (v.contains("departure"))
        ev.departure = as_real(v["departure"], "events.departure");
    if (!(ev.closure_tol > 0.0))
        throw ConfigError("events.closure_tol: must be positive");
    if (!(ev.departure > 0.0))
        throw ConfigError("events.departure: must be positive");
}

Analysis analysis_from_name(const std::string& name, const std::string& where)
{
    for (Analysis a : {Analysis::Closure, Analysis::Pt, Analysis::Ellipse, Analysis::Cells, Analysis::EscapeTime,
                       Analysis::Period}) {
        if (to_string(a) == name)
            return a;
    }
    throw ConfigError(where + ": unknown analysis '" + name + "'");
}

void parse_quadrature(const json& v, QuadratureSpec& q)
{
    check_keys(v, {"escape_from", "cutoff", "period_pair", "offsets", "elliptic_K"}, "quadrature");
    auto list = [&](const char* key) -> const json& {
        const json& arr = v[key];
        if (!arr.is_array())
            throw ConfigError(join("quadrature", key) + ": expected a list");
        return arr;
    };
    if (v.contains("escape_from")) {
        const json& arr = list("escape_from");
        for (std::size_t i = 0; i < arr.size(); ++i)
            q.escape_from.push_back(as_complex(arr[i], "quadrature.escape_from[" + std::to_string(i) + "]"));
    }
    if (v.contains("cutoff"))
        q.cutoff = as_real(v["cutoff"], "quadrature.cutoff");
    if (!(q.cutoff > 0.0))
        throw ConfigError("quadrature.cutoff: must be positive");
    if (v.contains("period_pair")) {
        const json& arr = list("period_pair");
        if (arr.size() != 2)
            throw ConfigError("quadrature.period_pair: expected two turning-point seeds");
        q.period_pair = std::pair{as_complex(arr[0], "quadrature.period_pair[0]"),
                                  as_complex(arr[1], "quadrature.period_pair[1]")};
    }
    if (v.contains("offsets")) {
        const json& arr = list("offsets");
        q.offsets.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string where = "quadrature.offsets[" + std::to_string(i) + "]";
            const double d = as_real(arr[i], where);
            if (!(d > 0.0))
                throw ConfigError(where + ": must be positive");
            q.offsets.push_back(d);
        }
    }
    if (v.contains("elliptic_K")) {
        const json& arr = list("elliptic_K");
        for (std::size_t i = 0; i < arr.size(); ++i)
            q.elliptic_K.push_back(as_real(arr[i], "quadrature.elliptic_K[" + std::to_string(i) + "]"));
    }
}

Window window_from(const json& v, const std::string& where)
{
    if (v.is_string())
        return parse_window(v.get<std::string>());
    if (!v.is_array() || v.size() != 4)
        throw ConfigError(where + ": expected [re_min, re_max, im_min, im_max]");
    Window w{as_real(v[0], where + "[0]"), as_real(v[1], where + "[1]"), as_real(v[2], where + "[2]"),
             as_real(v[3], where + "[3]")};
    if (!w.has_area())
        throw ConfigError(where + ": window has no area");
    return w;
}

// ---------------------------------------------------------------------------
// Output

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json turning_point_json(const TurningPoint& tp)
{
    return {{"x0", complex_json(tp.x0)}, {"lattice_index", tp.lattice_index}, {"branch_sign", tp.branch_sign}};
}

std::string trajectory_file_name(const Scenario& s, std::size_t i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return s.name + "_" + buf + ".csv";
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    os << text;
    os.flush();
    if (!os)
        throw IoError("write failed: " + path.string());
}

TurningPoint locate(const Scenario& s, Complex seed)
{
    return refine_root(s.model, *s.energy, seed, s.turning_options.max_iterations);
}

json run_one(const Scenario& s, std::size_t index, const PhaseState& s0, const std::filesystem::path& dir)
{
    const bool driven = !s.model.is_autonomous();
    const Trajectory traj = driven ? integrate_driven(s.model, s0, s.integrator)
                                   : integrate(s.model, s0, s.integrator, s.events);

    std::ostringstream csv;
    write_trajectory_csv(csv, traj, driven);
    const std::string file = trajectory_file_name(s, index);
    write_text(dir / file, csv.str());

    double max_abs_x = 0.0;
    for (const auto& smp : traj.samples)
        max_abs_x = std::max(max_abs_x, std::abs(smp.x));

    json rec;
    rec["index"] = index;
    rec["label"] = s.starts[index].label;
    rec["file"] = file;
    rec["start"] = {{"x", complex_json(s0.x)}, {"p", complex_json(s0.p)}, {"E", complex_json(energy(s.model, s0))}};
    rec["classification"] = to_string(traj.classification);
    rec["termination"] = to_string(traj.termination);
    rec["period"] = optional_json(traj.period);
    rec["escape_time"] = optional_json(traj.escape_time);
    rec["final_time"] = traj.samples.empty() ? 0.0 : traj.samples.back().t;
    rec["samples"] = traj.samples.size();
    rec["accepted_steps"] = traj.accepted_steps;
    rec["rejected_steps"] = traj.rejected_steps;
    rec["max_abs_x"] = max_abs_x;
    if (driven) {
        double max_im_E = 0.0;
        for (const Complex& e : traj.energies)
            max_im_E = std::max(max_im_E, std::abs(e.imag()));
        rec["max_abs_im_energy"] = max_im_E;
    } else {
        rec["energy_drift"] = traj.max_energy_drift;
    }

    json errors = json::array();
    auto guarded = [&](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            errors.push_back(std::string(what) + ": " + e.what());
        }
    };

    if (s.wants(Analysis::Closure)) {
        guarded("closure", [&] {
            const ClosureReport c = detect_closure(traj, s.events.closure_tol);
            rec["closure"] = {{"closed", c.closed},
                              {"period", optional_json(c.period)},
                              {"return_distance", c.return_distance},
                              {"windings", c.windings}};
        });
    }
    if (s.wants(Analysis::Pt)) {
        guarded("pt", [&] {
            const SymmetryReport r = verify_pt_symmetry(s.model, traj, s.pt_tol, s.integrator);
            rec["pt"] = {{"map", r.map_kind == SymmetryMap::RealG_PT ? "x->-conj(x)" : "x->pi-conj(x)"},
                         {"max_deviation", r.max_deviation},
                         {"verified", r.verified}};
        });
    }
    if (s.wants(Analysis::Ellipse)) {
        guarded("ellipse", [&] {
            const EllipseFit f = fit_ellipse(traj);
            rec["ellipse"] = {{"center", complex_json(f.center)},
                              {"semi_axes", {f.semi_axes[0], f.semi_axes[1]}},
                              {"orientation", f.orientation},
                              {"residual", f.residual}};
        });
    }
    if (s.wants(Analysis::Cells) || driven) {
        guarded("cells", [&] {
            json tr = json::array();
            for (const CellTransition& c : cell_escape_summary(traj))
                tr.push_back({{"t_exit", c.t_exit}, {"from", c.from_cell}, {"to", c.to_cell}});
            rec["cells"] = {{"initial", traj.samples.empty() ? 0 : cell_index(traj.samples.front().x)},
                            {"transition_count", tr.size()},
                            {"first_exit", tr.empty() ? json(nullptr) : tr.front()["t_exit"]},
                            {"transitions", std::move(tr)}};
        });
    }
    rec["errors"] = std::move(errors);
    return rec;
}

json scenario_quadrature(const Scenario& s)
{
    json out = json::object();
    if (s.wants(Analysis::EscapeTime) && !s.quadrature.escape_from.empty()) {
        json list = json::array();
        for (const Complex seed : s.quadrature.escape_from) {
            json rec = {{"seed", complex_json(seed)}, {"cutoff", s.quadrature.cutoff}};
            try {
                const TurningPoint tp = locate(s, seed);
                rec["turning_point"] = complex_json(tp.x0);
                rec["value"] = escape_time(s.model, *s.energy, tp, s.quadrature.cutoff);
            } catch (const std::exception& e) {
                rec["value"] = nullptr;
                rec["error"] = e.what();
            }
            list.push_back(std::move(rec));
        }
        out["escape_times"] = std::move(list);
    }
    if (s.wants(Analysis::Period) && s.quadrature.period_pair) {
        json list = json::array();
        for (const double offset : s.quadrature.offsets) {
            json rec = {{"offset", offset}};
            try {
                const TurningPoint a = locate(s, s.quadrature.period_pair->first);
                const TurningPoint b = locate(s, s.quadrature.period_pair->second);
                rec["turning_points"] = {complex_json(a.x0), complex_json(b.x0)};
                const ContourPeriod cp = period_contour(s.model, *s.energy, a, b, offset);
                rec["value"] = cp.period;
                rec["imaginary_part"] = cp.imaginary_part;
            } catch (const std::exception& e) {
                rec["value"] = nullptr;
                rec["error"] = e.what();
            }
            list.push_back(std::move(rec));
        }
        out["periods"] = std::move(list);
    }
    if (!s.quadrature.elliptic_K.empty()) {
        json list = json::array();
        for (const double m : s.quadrature.elliptic_K) {
            json rec = {{"m", m}};
            try {
                rec["value"] = elliptic_K(m);
            } catch (const std::exception& e) {
                rec["value"] = nullptr;
                rec["error"] = e.what();
            }
            list.push_back(std::move(rec));
        }
        out["elliptic_K"] = std::move(list);
    }
    return out;
}

std::vector<std::string_view> split_commas(std::string_view text)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        parts.push_back(text.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos)
            return parts;
        start = comma + 1;
    }
}

}  // namespace

std::string to_string(Analysis a)
{
    switch (a) {
    case Analysis::Closure: return "closure";
    case Analysis::Pt: return "pt";
    case Analysis::Ellipse: return "ellipse";
    case Analysis::Cells: return "cells";
    case Analysis::EscapeTime: return "escape_time";
    case Analysis::Period: return "period";
    }
    return "unknown";
}

bool Scenario::wants(Analysis a) const { return std::find(analyses.begin(), analyses.end(), a) != analyses.end(); }

Scenario parse_scenario(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed document: ") + e.what());
    }
    check_keys(doc,
               {"name", "anchor", "model", "energy", "starts", "integrator", "events", "analyses", "pt_tol",
                "quadrature", "turning_window", "turning", "output"},
               "");

    Scenario s;
    if (!doc.contains("name"))
        throw ConfigError("name: missing");
    s.name = as_string(doc["name"], "name");
    if (s.name.empty() || s.name.find_first_of("/\\") != std::string::npos)
        throw ConfigError("name: must be a non-empty file-name-safe string");
    if (doc.contains("anchor"))
        s.anchor = as_string(doc["anchor"], "anchor");
    if (!doc.contains("model"))
        throw ConfigError("model: missing");
    s.model = parse_model(doc["model"]);
    if (doc.contains("energy"))
        s.energy = as_complex(doc["energy"], "energy");
    if (doc.contains("integrator"))
        parse_integrator(doc["integrator"], s.integrator);
    try {
        s.integrator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("integrator: ") + e.what());
    }
    if (doc.contains("events"))
        parse_events(doc["events"], s.events);
    if (doc.contains("analyses")) {
        const json& arr = doc["analyses"];
        if (!arr.is_array())
            throw ConfigError("analyses: expected a list");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string where = "analyses[" + std::to_string(i) + "]";
            s.analyses.push_back(analysis_from_name(as_string(arr[i], where), where));
        }
    }
    if (doc.contains("pt_tol"))
        s.pt_tol = as_real(doc["pt_tol"], "pt_tol");
    if (doc.contains("quadrature"))
        parse_quadrature(doc["quadrature"], s.quadrature);
    if (doc.contains("turning_window"))
        s.turning_window = window_from(doc["turning_window"], "turning_window");
    if (doc.contains("turning")) {
        const json& t = doc["turning"];
        check_keys(t, {"seed_grid", "seed_spacing"}, "turning");
        if (t.contains("seed_grid"))
            s.turning_options.force_seed_grid = as_bool(t["seed_grid"], "turning.seed_grid");
        if (t.contains("seed_spacing"))
            s.turning_options.seed_spacing = as_real(t["seed_spacing"], "turning.seed_spacing");
        if (!(s.turning_options.seed_spacing > 0.0))
            throw ConfigError("turning.seed_spacing: must be positive");
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        check_keys(o, {"directory", "format"}, "output");
        if (o.contains("directory"))
            s.output_directory = as_string(o["directory"], "output.directory");
        if (o.contains("format") && as_string(o["format"], "output.format") != "csv")
            throw ConfigError("output.format: only \"csv\" is supported");
    }

    if (!doc.contains("starts") || !doc["starts"].is_array())
        throw ConfigError("starts: expected a list");
    const json& starts = doc["starts"];
    for (std::size_t i = 0; i < starts.size(); ++i)
        s.starts.push_back(parse_start(starts[i], "starts[" + std::to_string(i) + "]"));

    const bool needs_energy =
        std::any_of(s.starts.begin(), s.starts.end(), [](const StartSpec& st) { return st.kind != StartSpec::Kind::Explicit; }) ||
        (s.wants(Analysis::EscapeTime) && !s.quadrature.escape_from.empty()) ||
        (s.wants(Analysis::Period) && s.quadrature.period_pair) || s.turning_window.has_value();
    if (needs_energy && !s.energy)
        throw ConfigError("energy: required by the starts or analyses of this scenario");

    // Resolve now so that a bad start fails before any integration.
    for (std::size_t i = 0; i < s.starts.size(); ++i) {
        try {
            (void)resolve_start(s, s.starts[i]);
        } catch (const ConfigError& e) {
            throw ConfigError("starts[" + std::to_string(i) + "]: " + e.what());
        }
    }
    return s;
}

Scenario load_scenario(std::string_view name_or_path)
{
    for (const BundledScenario& b : bundled_scenarios()) {
        if (b.name == name_or_path)
            return parse_scenario(b.text);
    }
    const std::filesystem::path path{std::string(name_or_path)};
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot read config '" + path.string() + "' (not a file or bundled scenario name)");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str());
}

void apply_overrides(Scenario& s, const ScenarioOverrides& o)
{
    if (o.tol) {
        if (!(*o.tol > 0.0))
            throw ConfigError("--tol: must be positive");
        s.integrator.rel_tol = *o.tol;
        s.integrator.abs_tol = *o.tol * 1e-2;
    }
    if (o.horizon) {
        if (!(*o.horizon > 0.0))
            throw ConfigError("--horizon: must be positive");
        s.integrator.max_time = *o.horizon;
    }
    if (o.seed_grid)
        s.turning_options.force_seed_grid = true;
    if (o.out_dir)
        s.output_directory = o.out_dir->string();
}

PhaseState resolve_start(const Scenario& s, const StartSpec& st)
{
    PhaseState out{st.x, st.p, 0.0};
    try {
        switch (st.kind) {
        case StartSpec::Kind::Explicit: break;
        case StartSpec::Kind::EnergyBranch: out.p = momentum_from_energy(s.model, st.x, *s.energy, st.branch); break;
        case StartSpec::Kind::TurningPoint:
            out.x = locate(s, st.x).x0;
            out.p = 0.0;
            break;
        case StartSpec::Kind::TurningIndex: {
            if (!s.turning_window)
                throw ConfigError("turning_index needs a turning_window");
            const TurningPointSet set = turning_points(s.model, *s.energy, *s.turning_window, s.turning_options);
            if (st.index < 0 || static_cast<std::size_t>(st.index) >= set.points.size())
                throw ConfigError("turning_index " + std::to_string(st.index) + " out of range (window holds " +
                                  std::to_string(set.points.size()) + ")");
            out.x = set.points[static_cast<std::size_t>(st.index)].x0;
            out.p = 0.0;
            break;
        }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!is_finite(out.x) || !is_finite(out.p))
        throw ConfigError("start does not resolve to a finite state");
    return out;
}

ScenarioOutput run_scenario(const Scenario& s, const std::filesystem::path& directory)
{
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec)
        throw IoError("cannot create " + directory.string() + ": " + ec.message());

    ScenarioOutput out;
    out.directory = directory;

    json summary;
    summary["scenario"] = s.name;
    summary["anchor"] = s.anchor;
    summary["model"] = {{"kind", to_string(s.model.kind())},
                        {"g", complex_json(s.model.g())},
                        {"epsilon", s.model.epsilon()},
                        {"omega", s.model.omega()},
                        {"description", s.model.describe()}};
    summary["energy"] = s.energy ? complex_json(*s.energy) : json(nullptr);
    summary["integrator"] = {{"rel_tol", s.integrator.rel_tol},
                             {"abs_tol", s.integrator.abs_tol},
                             {"horizon", s.integrator.max_time},
                             {"escape_radius", s.integrator.escape_radius},
                             {"sample_interval", s.integrator.sample_interval}};
    json analyses = json::array();
    for (Analysis a : s.analyses)
        analyses.push_back(to_string(a));
    summary["analyses"] = std::move(analyses);

    if (s.turning_window) {
        json tps;
        try {
            const TurningPointSet set = turning_points(s.model, *s.energy, *s.turning_window, s.turning_options);
            json pts = json::array();
            for (const TurningPoint& tp : set.points)
                pts.push_back(turning_point_json(tp));
            tps = {{"closed_form", set.used_closed_form}, {"points", std::move(pts)}, {"warnings", set.warnings}};
        } catch (const std::exception& e) {
            tps = {{"error", e.what()}};
        }
        summary["turning_points"] = std::move(tps);
    }

    json records = json::array();
    for (std::size_t i = 0; i < s.starts.size(); ++i) {
        const PhaseState s0 = resolve_start(s, s.starts[i]);
        records.push_back(run_one(s, i, s0, directory));
        out.trajectories.push_back(directory / trajectory_file_name(s, i));
    }
    summary["trajectories"] = std::move(records);
    summary["quadrature"] = scenario_quadrature(s);

    out.summary = directory / "summary.json";
    write_text(out.summary, summary.dump(2) + "\n");
    return out;
}

int run_scenario_command(std::string_view name_or_path, const ScenarioOverrides& overrides, std::ostream& out,
                         std::ostream& err)
{
    try {
        Scenario s = load_scenario(name_or_path);
        apply_overrides(s, overrides);
        const std::filesystem::path dir =
            s.output_directory.empty() ? std::filesystem::path("out") / s.name : std::filesystem::path(s.output_directory);
        const ScenarioOutput res = run_scenario(s, dir);
        out << s.name << ": " << res.trajectories.size() << " trajectories, summary " << res.summary.string() << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << "\n";
        return kExitIo;
    }
}

std::vector<std::pair<std::string, std::string>> list_scenarios()
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const BundledScenario& b : bundled_scenarios()) {
        const Scenario s = parse_scenario(b.text);
        out.emplace_back(s.name, s.anchor);
    }
    // Natural order, so fig2 precedes fig10.
    auto key = [](const std::string& n) {
        const std::size_t d = n.find_first_of("0123456789");
        const int num = d == std::string::npos ? -1 : std::atoi(n.c_str() + d);
        return std::pair{n.substr(0, d), num};
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a.first) < key(b.first); });
    return out;
}

HamiltonianModel parse_model_spec(std::string_view spec)
{
    const std::size_t colon = spec.find(':');
    const std::string_view name = spec.substr(0, colon);
    const ModelKind kind = kind_from_name(name, "model");
    Complex g = 1.0;
    double eps = 0.0;
    double omega = 1.0;
    if (colon != std::string_view::npos) {
        for (std::string_view kv : split_commas(spec.substr(colon + 1))) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("model: expected key=value, got '" + std::string(kv) + "'");
            const std::string_view key = kv.substr(0, eq);
            const std::string_view value = kv.substr(eq + 1);
            if (key == "g")
                g = parse_complex(value);
            else if (key == "eps" || key == "epsilon")
                eps = parse_real(value);
            else if (key == "omega")
                omega = parse_real(value);
            else
                throw ConfigError("model: unknown parameter '" + std::string(key) + "'");
        }
    }
    return model_from(kind, g, eps, omega, "model");
}

Window parse_window(std::string_view spec)
{
    const auto parts = split_commas(spec);
    if (parts.size() != 4)
        throw ConfigError("window: expected re_min,re_max,im_min,im_max");
    Window w{parse_real(parts[0]), parse_real(parts[1]), parse_real(parts[2]), parse_real(parts[3])};
    if (!w.has_area())
        throw ConfigError("window: no area");
    return w;
}

std::string format_double(double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        return "nan";
    return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool with_cell)
{
    os << "t,re_x,im_x,re_p,im_p,re_E,im_E" << (with_cell ? ",cell" : "") << "\n";
    std::string line;
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const PhaseState& s = traj.samples[i];
        const Complex e = i < traj.energies.size() ? traj.energies[i] : energy(traj.model, s);
        line.clear();
        for (double v : {s.t, s.x.real(), s.x.imag(), s.p.real(), s.p.imag(), e.real(), e.imag()}) {
            if (!line.empty())
                line += ',';
            line += format_double(v);
        }
        if (with_cell) {
            line += ',';
            line += std::to_string(cell_index(s.x));
        }
        os << line << '\n';
    }
}

}  // namespace cpend
