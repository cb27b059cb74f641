#include "doctest.h"

#include <cmath>

#include "reflectsim/analysis.hpp"
#include "reflectsim/exact_solver.hpp"
#include "reflectsim/penalty_solver.hpp"

using namespace reflectsim;

namespace
{
SystemState state1(double x, double v)
{
    SystemState s;
    s.X = Configuration::Constant(1, 1, x);
    s.V = Configuration::Constant(1, 1, v);
    return s;
}
} // namespace

TEST_SUITE("penalty_solver")
{
    TEST_CASE("restoring force closed forms")
    {
        Interval iv(0.0, 10.0);
        CHECK(penalty_force(iv, Vec::Constant(1, 5.0), 1e4)[0] == 0.0);
        CHECK(penalty_force(iv, Vec::Constant(1, -0.01), 1e4)[0] == doctest::Approx(100.0));
        Ball ball(Vec::Zero(2), 1.0);
        const Vec f = penalty_force(ball, (Vec(2) << 1.1, 0.0).finished(), 100.0);
        CHECK(f[0] == doctest::Approx(-10.0));
        CHECK(f[1] == doctest::Approx(0.0));
    }

    TEST_CASE("force-free impact is an exact half sinusoid")
    {
        // r(t) = (v/sqrt k) sin(sqrt k (t - a)): depth v/sqrt k, duration pi/sqrt k, exit speed -v
        Interval iv(0.0, 10.0);
        ZeroForce z(1, 1);
        for (double v : {1.0, 2.5})
            for (double k : {1e4, 1e6})
            {
                const PenaltyRun run = simulate_penalty(iv, z, state1(1.0, -v), 2.0, k);
                REQUIRE(run.excursions.size() == 1);
                const Excursion& e = run.excursions[0];
                CHECK(e.complete);
                CHECK(e.a == doctest::Approx(1.0 / v).epsilon(1e-9));
                CHECK(std::abs(e.duration() * std::sqrt(k) / M_PI - 1.0) < 1e-6);
                CHECK(std::abs(e.max_depth * std::sqrt(k) / v - 1.0) < 1e-6);
                CHECK(std::abs(e.entry_speed + e.exit_speed) < 1e-6 * v);
                CHECK(std::abs(run.max_penetration * std::sqrt(k) / v - 1.0) < 1e-6);

                // 1/2 r'^2 + k/2 r^2 is conserved inside the excursion
                for (const auto& s : run.trajectory.samples)
                {
                    if (s.t <= e.a || s.t >= e.b) continue;
                    const double r = -s.X(0, 0);
                    const double energy = 0.5 * s.V(0, 0) * s.V(0, 0) + 0.5 * k * r * r;
                    CHECK(std::abs(energy / (0.5 * v * v) - 1.0) < 1e-7);
                }
            }
    }

    TEST_CASE("bouncing ball penetration scales like impact speed over sqrt k")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity g(1, Vec::Constant(1, -1.0));
        const PenaltyRun run = simulate_penalty(iv, g, state1(1.0, 0.0), 3.0, 1e6);
        CHECK(run.max_penetration == doctest::Approx(std::sqrt(2.0) / 1000.0).epsilon(0.01));
        // mass of k d(x) near the first bounce approaches twice the impact speed
        const double mass = extract_measure_penalty(run, std::sqrt(2.0) - 0.1, std::sqrt(2.0) + 0.1);
        CHECK(std::abs(mass - 2.0 * std::sqrt(2.0)) < 1e-2);
        CHECK(extract_measure_penalty(run, 0.1, 1.0) == 0.0);
    }

    TEST_CASE("resting particle: nothing happens for any k")
    {
        Interval iv(0.0, 10.0);
        ZeroForce z(1, 1);
        const SystemState s = state1(3.0, 0.0);
        const Trajectory ref = simulate_exact(iv, z, s, 1.0);
        const SweepReport rep = convergence_sweep(iv, z, s, 1.0, {1.0, 10.0, 100.0}, ref);
        for (const auto& row : rep.rows)
        {
            CHECK(row.valid);
            CHECK(row.max_penetration == 0.0);
            CHECK(row.sup_gap == 0.0);
            CHECK(row.l1_vel_gap == 0.0);
        }
    }

    TEST_CASE("sweep: slope, monotone gaps, exit-speed reversal")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity g(1, Vec::Constant(1, -1.0));
        const SystemState s = state1(1.0, 0.0);
        const Trajectory ref = simulate_exact(iv, g, s, 3.0);
        const std::vector<double> ks{1e2, 1e3, 1e4, 1e5, 1e6};
        const SweepReport rep = convergence_sweep(iv, g, s, 3.0, ks, ref);
        REQUIRE(rep.penetration_slope);
        CHECK(*rep.penetration_slope >= -0.55);
        CHECK(*rep.penetration_slope <= -0.45);
        CHECK(rep.sup_gap_monotone);
        CHECK(rep.sup_gap_improved);
        CHECK(rep.rows.back().sup_gap <= 1e-2);
        for (std::size_t j = 0; j < rep.rows.size(); ++j)
        {
            // gravity pushes into the wall: (pi + 2 atan(g / (w v))) / w with w = sqrt k, v = sqrt 2
            const double w = std::sqrt(ks[j]);
            CHECK(rep.rows[j].max_excursion_duration ==
                  doctest::Approx((M_PI + 2.0 * std::atan(1.0 / (w * std::sqrt(2.0)))) / w).epsilon(1e-6));
            if (j > 0) CHECK(rep.rows[j].rho_mass_error < rep.rows[j - 1].rho_mass_error);
        }

        // the penalty flow is conservative, so every excursion returns its entry speed
        for (double k : ks)
        {
            const PenaltyRun run = simulate_penalty(iv, g, s, 3.0, k);
            REQUIRE(!run.excursions.empty());
            for (const auto& e : run.excursions)
                if (e.complete) CHECK(std::abs(e.entry_speed + e.exit_speed) <= 1e-6);
        }
    }

    TEST_CASE("serial and parallel sweeps agree exactly")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity g(1, Vec::Constant(1, -1.0));
        const SystemState s = state1(1.0, 0.0);
        const Trajectory ref = simulate_exact(iv, g, s, 2.0);
        const std::vector<double> ks{1e2, 1e3, 1e4};
        const SweepReport a = convergence_sweep(iv, g, s, 2.0, ks, ref, {}, Execution::serial);
        const SweepReport b = convergence_sweep(iv, g, s, 2.0, ks, ref, {}, Execution::parallel);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t j = 0; j < a.rows.size(); ++j)
        {
            CHECK(a.rows[j].max_penetration == b.rows[j].max_penetration);
            CHECK(a.rows[j].sup_gap == b.rows[j].sup_gap);
            CHECK(a.rows[j].rho_mass == b.rows[j].rho_mass);
        }
        CHECK(*a.penetration_slope == *b.penetration_slope);
    }

    TEST_CASE("stiffness below the heuristic minimum is refused")
    {
        Interval iv(0.0, 10.0);
        ConstantGravity g(1, Vec::Constant(1, -1.0));
        const SystemState s = state1(1.0, 0.0);
        // s = 0 + 1 * 3, eps = 5: k_min = 4 * 9 / 25
        CHECK(k_min(iv, g, s, 3.0) == doctest::Approx(1.44));
        CHECK_THROWS_AS((void)simulate_penalty(iv, g, s, 3.0, 1.0), InputError);
        PenaltyOptions loose;
        loose.enforce_k_min = false;
        CHECK_NOTHROW((void)simulate_penalty(iv, g, s, 3.0, 1.0, loose));
    }

    TEST_CASE("leaving the tube invalidates the run")
    {
        Interval iv(0.0, 1.0);
        ZeroForce z(1, 1);
        PenaltyOptions loose;
        loose.enforce_k_min = false;
        // depth v / sqrt k = 10 > tube radius 0.5
        CHECK_THROWS_AS((void)simulate_penalty(iv, z, state1(0.5, -10.0), 1.0, 1.0, loose), InvalidRunError);
    }

    TEST_CASE("log-log slope of an exact power law")
    {
        CHECK(loglog_slope({1.0, 10.0, 100.0}, {1.0, 0.1, 0.01}) == doctest::Approx(-1.0));
        CHECK_THROWS_AS((void)loglog_slope({1.0}, {1.0}), InputError);
    }
}
