#include "doctest.h"

#include <cmath>

#include "reflectsim/analysis.hpp"
#include "reflectsim/exact_solver.hpp"

using namespace reflectsim;

namespace
{
Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }

SystemState state1(double x, double v)
{
    SystemState s;
    s.X = Configuration::Constant(1, 1, x);
    s.V = Configuration::Constant(1, 1, v);
    return s;
}

std::vector<Event> of_kind(const Trajectory& tr, EventKind k)
{
    std::vector<Event> out;
    for (const auto& e : tr.events)
        if (e.kind == k) out.push_back(e);
    return out;
}

// closed-form ball dropped from 1 under g = -1 on the floor x = 0
double ball_height(double t)
{
    const double period = 2.0 * std::sqrt(2.0);
    if (t < std::sqrt(2.0)) return 1.0 - 0.5 * t * t;
    const double s = std::fmod(t - std::sqrt(2.0), period);
    return std::sqrt(2.0) * s - 0.5 * s * s;
}
} // namespace

TEST_SUITE("exact_solver")
{
    TEST_CASE("reflection keeps the tangential part and flips the normal part")
    {
        CHECK((reflect(v2(1, -1), v2(0, -1)) - v2(1, 1)).norm() == 0.0);
        CHECK((reflect(v2(0, -2), v2(0, -1)) - v2(0, 2)).norm() == 0.0);
        CHECK((reflect(v2(1, 0), v2(0, -1)) - v2(1, 0)).norm() == 0.0);
        CHECK((reflect(v2(1, -1), v2(0, -1.0000001)) - v2(1, 1)).norm() < 1e-12);
        CHECK_THROWS_AS((void)reflect(v2(1, -1), v2(0, -2)), GeometryError);
    }

    TEST_CASE("crossing times on closed-form paths")
    {
        Interval iv(0.0, 10.0);
        auto line = [](double t) { return std::pair{Vec::Constant(1, 1.0 - t), Vec::Constant(1, -1.0)}; };
        CHECK(locate_crossing(line, iv, 0.0, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
        auto drop = [](double t) { return std::pair{Vec::Constant(1, 1.0 - 0.5 * t * t), Vec::Constant(1, -t)}; };
        CHECK(std::abs(locate_crossing(drop, iv, 0.0, 2.0) - std::sqrt(2.0)) < 1e-11);
        auto wave = [](double t) { return std::pair{Vec::Constant(1, std::sin(t) + 1.0), Vec::Constant(1, std::cos(t))}; };
        CHECK(std::abs(locate_crossing(wave, iv, M_PI / 2, 6.0) - 1.5 * M_PI) < 1e-6);
        auto rest = [](double) { return std::pair{Vec::Constant(1, 5.0), Vec::Constant(1, 0.0)}; };
        CHECK_THROWS_AS((void)locate_crossing(rest, iv, 0.0, 1.0), BracketError);
        CHECK_FALSE(find_boundary_contact(rest, iv, 0.0, 1.0, {}).has_value());
    }

    TEST_CASE("sliding density from force and curvature")
    {
        Interval iv(0.0, 10.0);
        CHECK(sliding_density(Vec::Zero(1), Vec::Zero(1), Vec::Constant(1, -1.0), iv) == doctest::Approx(1.0));
        CHECK(sliding_density(Vec::Zero(1), Vec::Zero(1), Vec::Constant(1, 1.0), iv) == doctest::Approx(-1.0));
        // circular motion at speed s on the unit circle needs s^2 inward
        Ball ball(Vec::Zero(2), 1.0);
        CHECK(sliding_density(v2(1, 0), v2(0, 3), Vec::Zero(2), ball) == doctest::Approx(9.0));
        CHECK_THROWS_AS((void)sliding_density(Vec::Constant(1, 0.5), Vec::Zero(1), Vec::Zero(1), iv), ModeError);
        CHECK_THROWS_AS((void)sliding_density(Vec::Zero(1), Vec::Constant(1, 1.0), Vec::Zero(1), iv), ModeError);
    }

    TEST_CASE("bouncing ball matches the ballistic closed form")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity g(1, Vec::Constant(1, -1.0));
        const Trajectory tr = simulate_exact(iv, g, state1(1.0, 0.0), 5.0);
        const auto b = of_kind(tr, EventKind::bounce);
        REQUIRE(b.size() == 2);
        CHECK(std::abs(b[0].t_event - std::sqrt(2.0)) < 1e-10);
        CHECK(std::abs(b[1].t_event - 3.0 * std::sqrt(2.0)) < 1e-10);
        for (const auto& e : b)
        {
            CHECK(std::abs(e.v_minus[0] + std::sqrt(2.0)) < 1e-10);
            CHECK(std::abs(e.v_plus[0] - std::sqrt(2.0)) < 1e-10);
            CHECK(std::abs(e.atom_mass - 2.0 * std::sqrt(2.0)) < 1e-10);
        }
        double worst = 0.0;
        for (const auto& s : tr.samples)
            worst = std::max(worst, std::abs(s.X(0, 0) - ball_height(s.t)));
        CHECK(worst < 1e-8);
        CHECK(tr.termination == "horizon");
    }

    TEST_CASE("disk billiard: chords, equal angles, constant speed")
    {
        Ball disk(Vec::Zero(2), 1.0);
        ZeroForce z(1, 2);
        SystemState s;
        s.X = Configuration::Zero(2, 1);
        s.V = v2(1.0, 0.5).normalized();
        const Trajectory tr = simulate_exact(disk, z, s, 12.0);
        REQUIRE(tr.events.size() >= 5);
        for (const auto& e : tr.events)
        {
            CHECK(e.kind == EventKind::bounce);
            CHECK(std::abs(e.v_plus.norm() - 1.0) < 1e-12);
            // angle of incidence = angle of reflection
            CHECK(std::abs(e.v_minus.dot(e.normal) + e.v_plus.dot(e.normal)) < 1e-12);
        }
        for (const auto& st : tr.samples)
            CHECK(std::abs(st.V.col(0).norm() - 1.0) < 1e-12);
        // from the centre every chord is a diameter: time 2 between bounces
        for (std::size_t j = 1; j < tr.events.size(); ++j)
            CHECK(tr.events[j].t_event - tr.events[j - 1].t_event == doctest::Approx(2.0).epsilon(1e-9));
    }

    TEST_CASE("resting particle stays put")
    {
        Ball disk(Vec::Zero(2), 1.0);
        ZeroForce z(1, 2);
        SystemState s;
        s.X = v2(0.3, 0.2);
        s.V = Configuration::Zero(2, 1);
        const Trajectory tr = simulate_exact(disk, z, s, 3.0);
        CHECK(tr.events.empty());
        for (const auto& st : tr.samples)
            CHECK((st.X.col(0) - v2(0.3, 0.2)).norm() == 0.0);
    }

    TEST_CASE("pinned particle slides, then detaches where the force turns")
    {
        Interval iv(0.0, 10.0);
        TimeScalar f(1, ScalarProfile::table({{0.0, -1.0}, {1.0, -1.0}, {1.1, 1.0}}), Vec::Constant(1, 1.0));
        SystemState s = state1(0.0, 0.0);
        s.modes = {Mode::sliding};
        SolverOptions o;
        const Trajectory tr = simulate_exact(iv, f, s, 1.5, o);
        for (const auto& st : tr.samples)
            if (st.t <= 1.0) CHECK(std::abs(st.X(0, 0)) <= 1e-10);
        for (const auto& d : tr.sliding_rho)
            if (d.t <= 1.0) CHECK(std::abs(d.rho - 1.0) <= 1e-8);
        const auto end = of_kind(tr, EventKind::slide_end);
        REQUIRE(end.size() == 1);
        CHECK(std::abs(end[0].t_event - 1.05) <= o.time_tol);
        CHECK(first_grazing_time(tr).value() == 0.0);
        // lift-off: x = 10 (t - 1.05)^3 / 3 on the ramp, then unit acceleration
        const double x1 = 10.0 * std::pow(0.05, 3) / 3.0, v1 = 10.0 * 0.05 * 0.05;
        CHECK(tr.state_at(1.5).X(0, 0) == doctest::Approx(x1 + 0.4 * v1 + 0.08).epsilon(1e-6));
    }

    TEST_CASE("tangential landing under each graze policy")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity up(1, Vec::Constant(1, 1.0));
        const SystemState s = state1(2.0, -2.0);

        SolverOptions stop;
        const Trajectory a = simulate_exact(iv, up, s, 5.0, stop);
        CHECK(a.termination == "graze_stop");
        CHECK(std::abs(a.t_reached - 2.0) < 1e-6);
        CHECK(std::abs(first_grazing_time(a).value() - 2.0) < 1e-6);

        SolverOptions refl;
        refl.graze_policy = GrazePolicy::reflect;
        const Trajectory b = simulate_exact(iv, up, s, 5.0, refl);
        CHECK(b.termination == "horizon");
        REQUIRE(of_kind(b, EventKind::graze).size() == 1);
        CHECK(b.state_at(4.0).X(0, 0) == doctest::Approx(2.0).epsilon(1e-6));

        // F points into the domain, so sticking is refused and the particle lifts off
        SolverOptions stick;
        stick.graze_policy = GrazePolicy::stick;
        const Trajectory c = simulate_exact(iv, up, s, 5.0, stick);
        CHECK(of_kind(c, EventKind::slide_start).empty());
        CHECK(c.state_at(4.0).X(0, 0) == doctest::Approx(2.0).epsilon(1e-6));
    }

    TEST_CASE("too many events in a short window abort with a typed event")
    {
        Ball disk(Vec::Zero(2), 1.0);
        ZeroForce z(1, 2);
        SystemState s;
        s.X = Configuration::Zero(2, 1);
        s.V = v2(1.0, 0.0);
        SolverOptions o;
        o.time_tol = 10.0;
        o.max_events_per_window = 3;
        const Trajectory tr = simulate_exact(disk, z, s, 40.0, o);
        CHECK(tr.termination == "zeno_abort");
        CHECK(tr.events.back().kind == EventKind::zeno_abort);
        CHECK(tr.t_reached < 40.0);
    }

    TEST_CASE("interacting particles: identical event logs on repeat runs")
    {
        Ball disk(Vec::Zero(2), 1.0);
        PairwiseSpring spring(2, 2, 4.0, 0.3);
        SystemState s;
        s.X = Configuration(2, 2);
        s.X << 0.1, -0.2, 0.0, 0.3;
        s.V = Configuration(2, 2);
        s.V << 1.0, 0.3, -0.5, 0.8;
        const Trajectory a = simulate_exact(disk, spring, s, 6.0);
        const Trajectory b = simulate_exact(disk, spring, s, 6.0);
        REQUIRE(a.events.size() == b.events.size());
        CHECK(a.events.size() > 3);
        for (std::size_t j = 0; j < a.events.size(); ++j)
        {
            CHECK(a.events[j].t_event == b.events[j].t_event);
            CHECK(a.events[j].v_plus == b.events[j].v_plus);
        }
        const EventAudit audit = audit_events(a, disk);
        CHECK(audit.max_confinement <= 1e-10);
        CHECK(audit.max_reflection_error <= 1e-10);
        CHECK(audit.max_speed_jump <= 1e-10);
        CHECK(audit.min_incoming_normal >= 0.0);
        CHECK(audit.max_outgoing_normal <= 0.0);
    }

    TEST_CASE("free arcs satisfy the ODE: finite-difference acceleration equals the force")
    {
        Ball disk(Vec::Zero(2), 1.0);
        PairwiseSpring spring(2, 2, 4.0, 0.0);
        SystemState s;
        s.X = Configuration(2, 2);
        s.X << 0.1, -0.2, 0.0, 0.3;
        s.V = Configuration(2, 2);
        s.V << 0.3, 0.1, -0.2, 0.2;
        const Trajectory tr = simulate_exact(disk, spring, s, 1.0);
        REQUIRE(tr.events.empty());
        // fourth-order stencil of the velocity on the sample grid, no interpolation
        const double h = 1e-2;
        for (double t : {0.2, 0.5, 0.8})
        {
            auto V = [&](double u) { return tr.state_at(u).V; };
            const Configuration acc = (-V(t + 2 * h) + 8.0 * V(t + h) - 8.0 * V(t - h) + V(t - 2 * h)) / (12.0 * h);
            CHECK((acc - spring.evaluate(t, tr.state_at(t).X)).norm() < 1e-6);
        }
    }

    TEST_CASE("invalid starts are rejected with typed errors")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity g(1, Vec::Constant(1, -1.0));
        CHECK_THROWS_AS((void)simulate_exact(iv, g, state1(-1.0, 0.0), 1.0), InputError);
        CHECK_THROWS_AS((void)simulate_exact(iv, g, state1(1.0, 0.0), 0.0), InputError);
        SystemState s = state1(1.0, 0.0);
        s.modes = {Mode::sliding};
        CHECK_THROWS_AS((void)simulate_exact(iv, g, s, 1.0), ModeError);
        ConstantGravity limited(1, Vec::Constant(1, -1.0));
        limited.set_horizon({0.0, 1.0});
        CHECK_THROWS_AS((void)simulate_exact(iv, limited, state1(1.0, 0.0), 2.0), HorizonError);
    }
}
