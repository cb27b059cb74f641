// One PASS/FAIL line per acceptance criterion. Scenario files are read from
// REFLECTSIM_SOURCE_DIR/scenarios; closed forms are computed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "reflectsim/analysis.hpp"
#include "reflectsim/app.hpp"
#include "reflectsim/counterexample.hpp"
#include "reflectsim/exact_solver.hpp"
#include "reflectsim/io.hpp"
#include "reflectsim/penalty_solver.hpp"

using namespace reflectsim;
namespace fs = std::filesystem;

namespace
{

fs::path scenario(const std::string& name) { return fs::path(REFLECTSIM_SOURCE_DIR) / "scenarios" / name; }

struct Outcome
{
    bool pass = true;
    std::string detail;
    void need(bool ok, const std::string& what)
    {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string g6(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome geometry_identities()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Ball ball((Vec(2) << 0.2, -0.1).finished(), 1.5);
    const Interval iv(0.0, 10.0);
    const Annulus ann((Vec(3) << 0, 0, 0).finished(), 1.0, 2.0);
    for (const Domain* d : std::initializer_list<const Domain*>{&ball, &iv, &ann})
    {
        const GeometryReport r = validate_geometry(*d, 10000, 7, 1e-8);
        double worst = 0.0;
        for (const auto& c : r.checks)
            worst = std::max(worst, c.max_residual);
        o.need(r.pass(), d->kind() + " " + g6(worst));
    }
    // 2000 samples: the finite-difference surface costs ~0.2 ms per point
    const ScenarioConfig ec = load_config(scenario("validate_ellipse.json"), false);
    const GeometryReport r = validate_geometry(*ec.domain, ec.validate.geometry_samples, 7, 1e-5);
    double worst = 0.0;
    for (const auto& c : r.checks)
        worst = std::max(worst, c.max_residual);
    o.need(r.pass(), "ellipse(" + std::to_string(ec.validate.geometry_samples) + ") " + g6(worst));
    const double secs = seconds_since(t0);
    o.need(secs < 1.0, "time " + g6(secs) + " s");
    return o;
}

Outcome reflection_invariants()
{
    Outcome o;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n01;
    double speed = 0.0, tangential = 0.0, involution = 0.0;
    for (int j = 0; j < 100000; ++j)
    {
        Vec v(3), nu(3);
        for (int c = 0; c < 3; ++c)
        {
            v[c] = n01(rng);
            nu[c] = n01(rng);
        }
        nu.normalize();
        const Vec w = reflect(v, nu);
        const double scale = std::max(1.0, v.norm());
        speed = std::max(speed, std::abs(w.norm() - v.norm()) / scale);
        tangential = std::max(tangential, ((w - w.dot(nu) * nu) - (v - v.dot(nu) * nu)).norm() / scale);
        involution = std::max(involution, (reflect(w, nu) - v).norm() / scale);
    }
    o.need(speed <= 1e-12, "speed " + g6(speed));
    o.need(tangential <= 1e-12, "tangential " + g6(tangential));
    o.need(involution <= 1e-12, "involution " + g6(involution));
    return o;
}

Outcome bouncing_ball()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioConfig c = load_config(scenario("bouncing_ball.json"));
    const Trajectory tr = simulate_exact(*c.domain, *c.force, c.initial, c.T, c.exact);
    std::vector<double> bounces;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::bounce) bounces.push_back(e.t_event);
    double terr = bounces.size() >= 10 ? 0.0 : kInf;
    for (std::size_t j = 0; j < std::min<std::size_t>(10, bounces.size()); ++j)
        terr = std::max(terr, std::abs(bounces[j] - std::sqrt(2.0) * (2.0 * j + 1.0)));
    o.need(terr <= 1e-8, std::to_string(bounces.size()) + " bounces, time error " + g6(terr));
    double drift = 0.0;
    for (const auto& s : tr.samples)
        drift = std::max(drift, std::abs(0.5 * s.V(0, 0) * s.V(0, 0) + s.X(0, 0) - 1.0));
    o.need(drift <= 1e-8, "energy drift " + g6(drift));
    const double secs = seconds_since(t0);
    o.need(secs < 1.0, "time " + g6(secs) + " s");
    return o;
}

struct SweepFixture
{
    ScenarioConfig c = load_config(scenario("bouncing_ball_sweep.json"));
    Trajectory ref = simulate_exact(*c.domain, *c.force, c.initial, c.T, c.exact);
};

Outcome penetration_rate(const SweepFixture& f, SweepReport& rep)
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    rep = convergence_sweep(*f.c.domain, *f.c.force, f.c.initial, f.c.T, f.c.ks, f.ref, f.c.penalty);
    std::vector<double> k, pen;
    for (const auto& r : rep.rows)
    {
        o.need(r.valid, "k=" + g6(r.k) + " pen " + g6(r.max_penetration));
        k.push_back(std::log(r.k));
        pen.push_back(std::log(r.max_penetration));
    }
    // least squares done here, not by the library
    double mk = 0, mp = 0;
    for (std::size_t j = 0; j < k.size(); ++j)
    {
        mk += k[j] / k.size();
        mp += pen[j] / k.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t j = 0; j < k.size(); ++j)
    {
        sxy += (k[j] - mk) * (pen[j] - mp);
        sxx += (k[j] - mk) * (k[j] - mk);
    }
    const double slope = sxy / sxx;
    o.need(slope >= -0.55 && slope <= -0.45, "slope " + g6(slope));
    const double secs = seconds_since(t0);
    o.need(secs < 30.0, "time " + g6(secs) + " s");
    return o;
}

Outcome excursion_duration()
{
    Outcome o;
    const ScenarioConfig c = load_config(scenario("impact_free.json"));
    for (double k : {1e4, 1e6})
    {
        const PenaltyRun run = simulate_penalty(*c.domain, *c.force, c.initial, c.T, k, c.penalty);
        if (run.excursions.size() != 1 || !run.excursions[0].complete)
        {
            o.need(false, "k=" + g6(k) + " excursions " + std::to_string(run.excursions.size()));
            continue;
        }
        const double exact = M_PI / std::sqrt(k);
        const double rel = std::abs(run.excursions[0].duration() - exact) / exact;
        o.need(rel <= 1e-3, "k=" + g6(k) + " rel " + g6(rel));
    }
    return o;
}

Outcome measure_concentration(const SweepFixture& f)
{
    Outcome o;
    const PenaltyRun run = simulate_penalty(*f.c.domain, *f.c.force, f.c.initial, f.c.T, 1e6, f.c.penalty);
    const double mass = extract_measure_penalty(run, std::sqrt(2.0) - 0.1, std::sqrt(2.0) + 0.1);
    const double err = std::abs(mass - 2.0 * std::sqrt(2.0));
    o.need(err <= 1e-2, "mass " + g6(mass) + " error " + g6(err));
    return o;
}

Outcome penalty_convergence(const SweepReport& rep)
{
    Outcome o;
    bool strict = true;
    for (std::size_t j = 1; j < rep.rows.size(); ++j)
        strict = strict && rep.rows[j].sup_gap < rep.rows[j - 1].sup_gap;
    const double last = rep.rows.back().sup_gap;
    o.need(last <= 1e-2, "sup gap at k=" + g6(rep.rows.back().k) + " " + g6(last));
    o.need(last < rep.rows.front().sup_gap, "last < first (" + g6(rep.rows.front().sup_gap) + ")");
    o.detail += std::string("; strictly decreasing: ") + (strict ? "yes" : "no");
    return o;
}

Outcome weak_form()
{
    Outcome o;
    const ScenarioConfig c = load_config(scenario("bouncing_ball.json"));
    const Trajectory tr = simulate_exact(*c.domain, *c.force, c.initial, c.T, c.exact);
    const auto fns = make_test_functions(tr, 20);
    const BoundaryMeasure m = extract_measure(tr);
    BoundaryMeasure zero;
    zero.particles.resize(m.particles.size());
    const double r = weak_form_residual(tr, m, *c.force, fns).max_residual;
    const double z = weak_form_residual(tr, zero, *c.force, fns).max_residual;
    o.need(fns.size() == 20, std::to_string(fns.size()) + " bumps");
    o.need(r <= 1e-6, "residual " + g6(r));
    o.need(z >= 1e-2, "zeroed measure " + g6(z));
    return o;
}

Outcome billiard()
{
    Outcome o;
    const ScenarioConfig c = load_config(scenario("billiard_disk.json"));
    const Trajectory tr = simulate_exact(*c.domain, *c.force, c.initial, c.T, c.exact);
    const double v0 = c.initial.V.col(0).norm();
    double dspeed = 0.0, dangle = 0.0;
    int bounces = 0;
    for (const auto& s : tr.samples)
        dspeed = std::max(dspeed, std::abs(s.V.col(0).norm() - v0));
    for (const auto& e : tr.events)
    {
        if (e.kind != EventKind::bounce) continue;
        ++bounces;
        const double in_n = -e.v_minus.dot(e.normal), out_n = e.v_plus.dot(e.normal);
        const double in = std::atan2((e.v_minus + in_n * e.normal).norm(), in_n);
        const double out = std::atan2((e.v_plus - out_n * e.normal).norm(), out_n);
        dangle = std::max(dangle, std::abs(in - out));
    }
    o.need(bounces >= 20, std::to_string(bounces) + " bounces");
    o.need(dspeed <= 1e-10, "speed drift " + g6(dspeed));
    o.need(dangle <= 1e-8, "angle mismatch " + g6(dangle));
    return o;
}

Outcome sliding()
{
    Outcome o;
    const ScenarioConfig c = load_config(scenario("sliding.json"));
    const Trajectory tr = simulate_exact(*c.domain, *c.force, c.initial, c.T, c.exact);
    double pos = 0.0;
    for (const auto& s : tr.samples)
        if (s.t <= 1.0) pos = std::max(pos, std::abs(s.X(0, 0)));
    o.need(pos <= 1e-10, "|x| on [0,1] " + g6(pos));
    const BoundaryMeasure m = extract_measure(tr);
    double derr = 0.0;
    int n = 0;
    for (const auto& d : m.particles[0].density)
        if (d.t <= 1.0)
        {
            derr = std::max(derr, std::abs(d.value - 1.0));
            ++n;
        }
    o.need(n > 0 && derr <= 1e-8, "density error " + g6(derr));
    std::optional<double> lift;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::slide_end && !lift) lift = e.t_event;
    const double err = lift ? std::abs(*lift - 1.05) : kInf;
    o.need(err <= c.exact.time_tol, "lift-off error " + g6(err));
    return o;
}

Outcome counterexample()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const CertificateReport rep = verify_counterexample(make_params(2), 10);
    for (const auto& ch : rep.checks)
        o.need(ch.pass, ch.name + " " + g6(ch.value));
    const double secs = seconds_since(t0);
    o.need(secs < 5.0, "time " + g6(secs) + " s");
    return o;
}

Outcome grazing_horizon()
{
    Outcome o;
    const ScenarioConfig c = load_config(scenario("tangential_landing.json"));
    const Trajectory tr = simulate_exact(*c.domain, *c.force, c.initial, c.T, c.exact);
    // x = 2 - 2t + t^2/2 touches down at t = 2
    const auto g = first_grazing_time(tr);
    const double err = g ? std::abs(*g - 2.0) : kInf;
    o.need(err <= 1e-6, "T0 error " + g6(err));
    o.need(tr.termination == "graze_stop" && std::abs(tr.t_reached - 2.0) <= 1e-6,
           tr.termination + " at " + g6(tr.t_reached));
    return o;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    Outcome o;
    const fs::path root = fs::temp_directory_path() / "reflectsim_acceptance";
    fs::remove_all(root);
    struct Job
    {
        std::string command, config;
    };
    const std::vector<Job> jobs{
        {"validate", "validate_ball.json"},       {"validate", "validate_annulus.json"},
        {"validate", "validate_ellipse.json"},    {"simulate", "bouncing_ball.json"},
        {"penalty-sweep", "bouncing_ball_sweep.json"}, {"simulate", "bouncing_ball_sweep.json"},
        {"simulate", "impact_free.json"},         {"compare", "bouncing_ball_sweep.json"},
        {"simulate", "billiard_disk.json"},       {"simulate", "sliding.json"},
        {"simulate", "tangential_landing.json"},  {"counterexample", ""},
    };
    std::ostringstream sink;
    std::size_t files = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j)
    {
        std::string runs[2];
        for (int rep = 0; rep < 2; ++rep)
        {
            CommandOptions opt;
            opt.command = jobs[j].command;
            if (!jobs[j].config.empty()) opt.config = scenario(jobs[j].config);
            opt.out = root / std::to_string(rep) / std::to_string(j);
            opt.quiet = true;
            const int code = run_command(opt, sink);
            if (code != exit_pass) o.need(false, jobs[j].command + " " + jobs[j].config + " exit " + std::to_string(code));
        }
        for (const auto& e : fs::directory_iterator(root / "0" / std::to_string(j)))
        {
            ++files;
            const fs::path twin = root / "1" / std::to_string(j) / e.path().filename();
            if (!fs::exists(twin) || slurp(e.path()) != slurp(twin))
                o.need(false, jobs[j].config + "/" + e.path().filename().string() + " differs");
        }
    }
    if (o.pass) o.need(true, std::to_string(files) + " artifacts identical over " + std::to_string(jobs.size()) + " runs");
    fs::remove_all(root);
    return o;
}

} // namespace

int main()
{
    apply_thread_cap();
    SweepFixture sweep;
    SweepReport rep;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"geometry identities", geometry_identities},
        {"reflection invariants", reflection_invariants},
        {"bouncing ball", bouncing_ball},
        {"penalty penetration rate", [&] { return penetration_rate(sweep, rep); }},
        {"excursion duration", excursion_duration},
        {"measure concentration", [&] { return measure_concentration(sweep); }},
        {"penalty to exact convergence", [&] { return penalty_convergence(rep); }},
        {"weak-form residual", weak_form},
        {"disk billiard", billiard},
        {"sliding mode", sliding},
        {"counterexample certificate", counterexample},
        {"grazing horizon", grazing_horizon},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t j = 0; j < criteria.size(); ++j)
    {
        Outcome o;
        try
        {
            o = criteria[j].second();
        }
        catch (const std::exception& e)
        {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", j + 1, criteria[j].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
