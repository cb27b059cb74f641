#include "doctest.h"

#include <cmath>

#include "reflectsim/counterexample.hpp"

using namespace reflectsim;

namespace
{
// composite Simpson, independent of the library's Gauss panels
template <class G>
double simpson(G g, double lo, double hi, int n = 200000)
{
    const double h = (hi - lo) / n;
    double s = g(lo) + g(hi);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * g(lo + i * h);
    return s * h / 3.0;
}
} // namespace

TEST_SUITE("counterexample")
{
    TEST_CASE("bump profile")
    {
        CHECK(default_bump(0.25) == 0.0);
        CHECK(default_bump(0.5) == 0.0);
        CHECK(default_bump(1.0) == 0.0);
        CHECK(default_bump(0.75) == doctest::Approx(std::exp(-16.0)));
    }

    TEST_CASE("auxiliary bounce against an independent quadrature")
    {
        const AuxiliaryBounce aux = auxiliary_bounce(default_bump, 0.5, 1.0);
        const double v0 = simpson([](double s) { return (1 - s) * default_bump(s); }, 0.5, 1.0);
        const double v1 = simpson([](double s) { return s * default_bump(s); }, 0.5, 1.0);
        const double gap = simpson([](double s) { return (2 * s - 1) * default_bump(s); }, 0.5, 1.0);
        CHECK(aux.v0 == doctest::Approx(v0).epsilon(1e-9));
        CHECK(aux.v1 == doctest::Approx(v1).epsilon(1e-9));
        CHECK(aux.moment_gap == doctest::Approx(gap).epsilon(1e-9));
        CHECK(aux.moment_gap > 0.0);
        CHECK(std::abs(aux.z(0.0)) == 0.0);
        CHECK(std::abs(aux.z(1.0)) <= 1e-13 * aux.v1);
        CHECK(aux.dz(0.0) == doctest::Approx(aux.v0));
        CHECK(aux.dz(1.0) == doctest::Approx(-aux.v1).epsilon(1e-12));
        // z'' = -f by central differences away from the support edge
        const double t = 0.8, h = 1e-4;
        CHECK((aux.z(t + h) - 2 * aux.z(t) + aux.z(t - h)) / (h * h) ==
              doctest::Approx(-default_bump(t)).epsilon(1e-5));
    }

    TEST_CASE("symmetric profile violates the moment condition")
    {
        auto sym = [](double s) { return std::sin(M_PI * s); };
        CHECK_THROWS_AS((void)make_params(auxiliary_bounce(sym, 0.0, 1.0), 2), ConstructionError);
    }

    TEST_CASE("scaling")
    {
        const Scaling s = choose_scaling(0.5, 1.0, 2);
        CHECK(s.a == doctest::Approx(0.75));
        CHECK(s.b == doctest::Approx(0.375));
        CHECK_THROWS_AS((void)choose_scaling(1.0, 0.5, 2), ConstructionError);
        CHECK_THROWS_AS((void)choose_scaling(0.5, 1.0, 0), ConstructionError);

        const CounterexampleParams p = make_params(2);
        CHECK(p.a == doctest::Approx(2.0 / 3.0));
        CHECK(p.b == doctest::Approx(2.0 / 9.0));
        CHECK(p.T_mid() == doctest::Approx(2.5));
    }

    TEST_CASE("force and solution on the interval ladder")
    {
        const CounterexampleParams p = make_params(2);
        CHECK(counterexample_force(-0.5, p) == 0.0);
        CHECK(counterexample_force(0.0, p) == 0.0);
        CHECK(p.interval_of(2.2) == 0);
        CHECK(p.interval_of(1.5) == 1);
        // I_0 = [2, 3), I_1 = [4/3, 2)
        // the bump half of I_0 lies past T_mid
        CHECK(counterexample_force(2.25, p) == 0.0);
        const double t1 = 4.0 / 3.0 + 0.75 * (2.0 / 3.0);
        CHECK(counterexample_force(t1, p) == doctest::Approx(-0.5 * default_bump(0.75)).epsilon(1e-12));
        CHECK(counterexample_solution(t1, p).x == doctest::Approx(p.b * p.aux.z(0.75)).epsilon(1e-12));
        CHECK_THROWS_AS((void)counterexample_force(3.0, p), HorizonError);

        // |x| on I_n is at most b^n max z
        double zmax = 0.0;
        for (int i = 0; i <= 100; ++i)
            zmax = std::max(zmax, p.aux.z(i / 100.0));
        for (int n = 0; n < 12; ++n)
        {
            const double t = p.t_left(n) + 0.5 * std::pow(p.a, n);
            CHECK(counterexample_solution(t, p).x <= std::pow(p.b, n) * zmax * (1 + 1e-12));
            CHECK(counterexample_solution(t, p).x >= 0.0);
        }
        CHECK(counterexample_solution(-1.0, p).x == 0.0);
    }

    TEST_CASE("certificate")
    {
        const CounterexampleParams p = make_params(2);
        const CertificateReport rep = verify_counterexample(p, 10);
        for (const auto& c : rep.checks)
        {
            INFO(c.name << " " << c.value << " " << c.detail);
            CHECK(c.pass);
        }
        REQUIRE(rep.derivative_growth.size() == 3);
        CHECK(rep.derivative_growth[0] == doctest::Approx(0.5));
        CHECK(rep.derivative_growth[1] == doctest::Approx(0.75));
        CHECK(rep.derivative_growth[2] == doctest::Approx(1.125));

        CHECK(verify_counterexample(p, 0).pass());
        CHECK_THROWS_AS((void)verify_counterexample(p, -1), InputError);
    }

    TEST_CASE("a wrong scale breaks the reflection law")
    {
        CounterexampleParams p = make_params(2);
        p.b *= 1.01;
        const CertificateReport rep = verify_counterexample(p, 6);
        CHECK_FALSE(rep.pass());
        CHECK_FALSE(rep.check("reflection").pass);
    }

    TEST_CASE("serial and parallel certificates agree")
    {
        const CounterexampleParams p = make_params(2);
        const auto a = verify_counterexample(p, 8, {}, Execution::serial);
        const auto b = verify_counterexample(p, 8, {}, Execution::parallel);
        CHECK(a.ode_residual_per_interval == b.ode_residual_per_interval);
        for (std::size_t i = 0; i < a.checks.size(); ++i)
            CHECK(a.checks[i].value == b.checks[i].value);
    }

    TEST_CASE("samples")
    {
        const CounterexampleParams p = make_params(2);
        const auto s = sample_counterexample(p, -0.25, p.T_mid(), 11);
        REQUIRE(s.size() == 11);
        CHECK(s.back().t == p.T_mid());
        CHECK(s.front().x == 0.0);
        CHECK_THROWS_AS((void)sample_counterexample(p, 1.0, 0.0, 11), InputError);
    }
}
