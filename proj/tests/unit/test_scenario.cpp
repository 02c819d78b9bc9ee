#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cpend/scenario.hpp"

using namespace cpend;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("cpend_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

nlohmann::json summary_of(const ScenarioOutput& out) { return nlohmann::json::parse(slurp(out.summary)); }

const char* kMinimal = R"({
  "name": "mini",
  "model": {"kind": "pendulum"},
  "energy": 0,
  "starts": [{"x": "0.2i", "branch": "+"}]
})";

std::string with(const std::string& key_json)
{
    std::string s = kMinimal;
    s.insert(s.rfind('}'), ",\n" + key_json);
    return s;
}

}  // namespace

TEST_CASE("bundled catalog")
{
    const auto list = list_scenarios();
    CHECK(list.size() == 14);
    std::set<std::string> names;
    for (const auto& [n, a] : list) {
        names.insert(n);
        CHECK_FALSE(a.empty());
    }
    for (const char* n : {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12",
                          "eq10", "eq14", "period-e0"})
        CHECK(names.count(n) == 1);
    for (const auto& [n, a] : list) {
        if (n == "fig7")
            CHECK(a.find("g=i, E=sinh 1") != std::string::npos);
        if (n == "fig6")
            CHECK(a.find("E=-cosh 1") != std::string::npos);
    }
    for (const auto& b : bundled_scenarios())
        CHECK(parse_scenario(b.text).name == std::string(b.name));
}

TEST_CASE("parsing a full document")
{
    const Scenario s = parse_scenario(R"({
      // comments are allowed
      "name": "demo",
      "anchor": "a demo",
      "model": {"kind": "driven", "g": "1", "epsilon": 0.2, "omega": "1/10"},
      "energy": [0, 0],
      "starts": [
        {"x": "pi/2+0.1", "branch": "-", "label": "minus"},
        {"x": 1, "p": "2i"}
      ],
      "integrator": {"horizon": 5, "rel_tol": 1e-10, "sample_interval": 0.1},
      "events": {"closure": false, "closure_tol": 1e-6},
      "analyses": ["cells"],
      "output": {"directory": "somewhere", "format": "csv"}
    })");
    CHECK(s.name == "demo");
    CHECK(s.model.kind() == ModelKind::DrivenPendulum);
    CHECK(s.model.omega() == doctest::Approx(0.1));
    CHECK(s.starts.size() == 2);
    CHECK(s.starts[0].branch == Branch::Minus);
    CHECK(s.starts[1].kind == StartSpec::Kind::Explicit);
    CHECK(s.integrator.max_time == 5.0);
    CHECK(s.events.closure_tol == 1e-6);
    CHECK(s.wants(Analysis::Cells));
    CHECK_FALSE(s.wants(Analysis::Pt));
    CHECK(s.output_directory == "somewhere");
    const PhaseState p0 = resolve_start(s, s.starts[0]);
    CHECK(p0.p.imag() < 0.0);
}

TEST_CASE("config errors name the offending key")
{
    auto fails_with = [](const std::string& text, const std::string& key) {
        CHECK_THROWS_WITH_AS(parse_scenario(text), doctest::Contains(key.c_str()), ConfigError);
    };
    fails_with("{", "malformed");
    fails_with(R"({"model": {"kind": "pendulum"}, "starts": []})", "name");
    fails_with(with(R"("integrator": {"horizn": 3})"), "integrator.horizn");
    fails_with(with(R"("integrator": {"rel_tol": -1})"), "integrator");
    fails_with(with(R"("analyses": ["closure", "spectrum"])"), "analyses[1]");
    fails_with(with(R"("events": {"closure_tol": "1+"})"), "events.closure_tol");
    fails_with(with(R"("quadrature": {"offsets": [0.5, -1]})"), "quadrature.offsets[1]");
    fails_with(with(R"("output": {"format": "hdf5"})"), "output.format");
    fails_with(with(R"("turning_window": [0, 0, -1, 1])"), "turning_window");
    fails_with(R"({"name": "x", "model": {"kind": "quartic"}, "starts": []})", "model.kind");
    fails_with(R"({"name": "x", "model": {"kind": "driven", "omega": 0}, "starts": []})", "model");
    fails_with(R"({"name": "x", "model": {"kind": "pendulum"}, "starts": [{"x": 1, "branch": "+"}]})", "energy");
    fails_with(R"({"name": "x", "model": {"kind": "pendulum"}, "energy": 0,
                  "starts": [{"x": 1, "branch": "up"}]})", "starts[0].branch");
    fails_with(R"({"name": "x", "model": {"kind": "pendulum"}, "energy": 0,
                  "starts": [{"x": 1, "p": 0, "branch": "+"}]})", "starts[0]");
    fails_with(R"({"name": "x", "model": {"kind": "pendulum"}, "energy": 0,
                  "starts": [{"turning_index": 3}]})", "starts[0]");
    fails_with(R"({"name": "x", "model": {"kind": "pendulum"}, "energy": 0, "turning_window": "-1,1,-1,1",
                  "starts": [{"turning_index": 0}]})", "out of range");
    fails_with(R"({"name": "x", "model": {"kind": "pendulum"}, "energy": 0,
                  "starts": [{"x": "1/0", "p": 0}]})", "starts[0]");
}

TEST_CASE("turning-point starts")
{
    const Scenario s = parse_scenario(R"json({
      "name": "tp", "model": {"kind": "pendulum"}, "energy": "cosh(1)",
      "turning_window": "0,2pi,-2,2",
      "starts": [{"turning_point": "3.1+0.9i"}, {"turning_index": 1}]
    })json");
    const PhaseState a = resolve_start(s, s.starts[0]);
    CHECK(std::abs(a.x - (kPi + kI)) <= 1e-12);
    CHECK(a.p == Complex(0.0));
    const PhaseState b = resolve_start(s, s.starts[1]);
    CHECK(std::abs(b.x - (kPi + kI)) <= 1e-12);
}

TEST_CASE("overrides")
{
    Scenario s = parse_scenario(kMinimal);
    ScenarioOverrides o;
    o.tol = 1e-9;
    o.horizon = 3.0;
    o.seed_grid = true;
    o.out_dir = "elsewhere";
    apply_overrides(s, o);
    CHECK(s.integrator.rel_tol == 1e-9);
    CHECK(s.integrator.max_time == 3.0);
    CHECK(s.turning_options.force_seed_grid);
    CHECK(s.output_directory == "elsewhere");
    o.horizon = -1.0;
    CHECK_THROWS_AS(apply_overrides(s, o), ConfigError);
}

TEST_CASE("model and window specs")
{
    CHECK(parse_model_spec("pendulum") == HamiltonianModel::pendulum());
    CHECK(parse_model_spec("pendulum:g=i") == HamiltonianModel::pendulum(kI));
    CHECK(parse_model_spec("cubic") == HamiltonianModel::cubic_i());
    CHECK(parse_model_spec("harmonic") == HamiltonianModel::harmonic());
    CHECK(parse_model_spec("driven:g=1,eps=0.2,omega=0.1") == HamiltonianModel::driven_pendulum(1.0, 0.2, 0.1));
    CHECK_THROWS_AS(parse_model_spec("pendulum:h=2"), ConfigError);
    CHECK_THROWS_AS(parse_model_spec("rotor"), ConfigError);
    const Window w = parse_window("-3pi,3pi,-2,2");
    CHECK(w.re_min == doctest::Approx(-3 * kPi));
    CHECK(w.im_max == 2.0);
    CHECK_THROWS_AS(parse_window("0,1,0"), ConfigError);
}

TEST_CASE("shortest round-trip formatting")
{
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.0) == "-2");
    CHECK(format_double(1e-300) == "1e-300");
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int k = 0; k < 1000; ++k) {
        const double v = u(rng) * std::pow(10.0, (k % 40) - 20);
        const std::string s = format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    }
}

TEST_CASE("trajectory CSV layout")
{
    Trajectory tr;
    tr.model = HamiltonianModel::harmonic();
    tr.samples = {{1.0, kI, 0.0}, {Complex(0.5, 0.25), Complex(-1, 2), 0.02}};
    tr.energies = {energy(tr.model, tr.samples[0]), energy(tr.model, tr.samples[1])};
    std::ostringstream os;
    write_trajectory_csv(os, tr, false);
    CHECK(os.str() == "t,re_x,im_x,re_p,im_p,re_E,im_E\n0,1,0,0,1,0,0\n0.02,0.5,0.25,-1,2,-1.40625,-1.875\n");
    std::ostringstream oc;
    write_trajectory_csv(oc, tr, true);
    CHECK(oc.str().substr(0, oc.str().find('\n')) == "t,re_x,im_x,re_p,im_p,re_E,im_E,cell");
    CHECK(oc.str().find("0,1,0,0,1,0,0,0\n") != std::string::npos);
}

TEST_CASE("running fig2 and eq10")
{
    const fs::path dir = scratch("fig2");
    const ScenarioOutput out = run_scenario(load_scenario("fig2"), dir);
    const auto sum = summary_of(out);
    CHECK(out.trajectories.size() == sum["trajectories"].size());
    double p0 = 0.0;
    for (const auto& t : sum["trajectories"]) {
        CHECK(t["classification"] == "closed");
        CHECK(t["errors"].empty());
        const double p = t["period"].get<double>();
        if (p0 == 0.0)
            p0 = p;
        CHECK(std::abs(p - p0) <= 1e-8);
        CHECK(fs::exists(dir / t["file"].get<std::string>()));
    }
    CHECK(sum["turning_points"]["points"].size() == 6);

    const ScenarioOutput e = run_scenario(load_scenario("eq10"), scratch("eq10"));
    const auto es = summary_of(e);
    const double T = es["quadrature"]["escape_times"][0]["value"].get<double>();
    CHECK(std::abs(T - 1.97536) <= 1e-4);
    CHECK(es["trajectories"][0]["classification"] == "escaped");
    fs::remove_all(dir);
    fs::remove_all(e.directory);
}

TEST_CASE("fig12 wanders across cells with large excursions")
{
    const ScenarioOutput out = run_scenario(load_scenario("fig12"), scratch("fig12"));
    const auto t = summary_of(out)["trajectories"][0];
    CHECK(t["cells"]["transition_count"].get<int>() > 0);
    CHECK(t["max_abs_x"].get<double>() > 10 * kPi);
    const std::string csv = slurp(out.trajectories[0]);
    CHECK(csv.substr(0, csv.find('\n')) == "t,re_x,im_x,re_p,im_p,re_E,im_E,cell");
    fs::remove_all(out.directory);
}

TEST_CASE("engine errors are recorded, not fatal")
{
    // PT verification is undefined for the harmonic model; the run still succeeds.
    const Scenario s = parse_scenario(R"json({
      "name": "recorded", "model": {"kind": "harmonic"}, "energy": 1,
      "starts": [{"x": "1", "p": "0"}, {"x": "1+i", "branch": "+"}],
      "integrator": {"horizon": 8},
      "analyses": ["pt", "ellipse", "escape_time"],
      "quadrature": {"escape_from": ["sqrt(2)"]}
    })json");
    const ScenarioOutput out = run_scenario(s, scratch("recorded"));
    const auto sum = summary_of(out);
    CHECK_FALSE(sum["trajectories"][0]["errors"].empty());  // pt + degenerate ellipse
    CHECK(sum["trajectories"][1].contains("ellipse"));
    CHECK(sum["quadrature"]["escape_times"][0]["value"].is_null());
    CHECK(sum["quadrature"]["escape_times"][0].contains("error"));
    fs::remove_all(out.directory);
}

TEST_CASE("identical configs give identical files")
{
    const Scenario s = load_scenario("fig5");
    const ScenarioOutput a = run_scenario(s, scratch("det_a"));
    const ScenarioOutput b = run_scenario(s, scratch("det_b"));
    REQUIRE(a.trajectories.size() == b.trajectories.size());
    for (std::size_t k = 0; k < a.trajectories.size(); ++k)
        CHECK(slurp(a.trajectories[k]) == slurp(b.trajectories[k]));
    CHECK(slurp(a.summary) == slurp(b.summary));
    fs::remove_all(a.directory);
    fs::remove_all(b.directory);
}

TEST_CASE("command exit codes")
{
    std::ostringstream out, err;
    const fs::path bad = scratch("bad.json");
    {
        std::ofstream(bad) << with(R"("integrator": {"horizn": 1})");
    }
    CHECK(run_scenario_command(bad.string(), {}, out, err) == kExitConfig);
    CHECK(err.str().find("integrator.horizn") != std::string::npos);

    CHECK(run_scenario_command((scratch("none") / "missing.json").string(), {}, out, err) == kExitIo);

    // Output directory blocked by a regular file.
    const fs::path blocker = scratch("blocker");
    {
        std::ofstream(blocker) << "x";
    }
    ScenarioOverrides o;
    o.out_dir = blocker / "sub";
    const fs::path good = scratch("good.json");
    {
        std::ofstream(good) << kMinimal;
    }
    CHECK(run_scenario_command(good.string(), o, out, err) == kExitIo);

    o.out_dir = scratch("good_out");
    o.horizon = 2.0;
    CHECK(run_scenario_command(good.string(), o, out, err) == kExitOk);
    CHECK(fs::exists(*o.out_dir / "summary.json"));
    CHECK(fs::exists(*o.out_dir / "mini_000.csv"));

    for (const auto& p : {bad, blocker, good, *o.out_dir})
        fs::remove_all(p);
}
