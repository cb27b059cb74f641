#include "doctest.h"

#include <cmath>
#include <random>

#include "reflectsim/geometry.hpp"

using namespace reflectsim;

namespace
{
Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }
Vec v1(double x) { return Vec::Constant(1, x); }
} // namespace

TEST_SUITE("geometry")
{
    TEST_CASE("signed and unconstrained distance on simple domains")
    {
        Ball ball(Vec::Zero(2), 1.0);
        Interval iv(0.0, 10.0);
        CHECK(signed_distance(ball, v2(0, 0)) == doctest::Approx(-1.0));
        CHECK(signed_distance(ball, v2(2, 0)) == doctest::Approx(1.0));
        CHECK(signed_distance(iv, v1(0.3)) == doctest::Approx(-0.3));
        CHECK(unconstrained_distance(ball, v2(0.5, 0)) == 0.0);
        CHECK(unconstrained_distance(ball, v2(1.5, 0)) == doctest::Approx(0.5));
        CHECK(unconstrained_distance(iv, v1(-0.2)) == doctest::Approx(0.2));
    }

    TEST_CASE("d grad d is zero inside and radial outside")
    {
        Ball ball(Vec::Zero(2), 1.0);
        Interval iv(0.0, 10.0);
        CHECK(d_grad_d(iv, v1(5.0))[0] == 0.0);
        CHECK(d_grad_d(iv, v1(-0.3))[0] == doctest::Approx(-0.3));
        const Vec r = d_grad_d(ball, v2(1.2, 0));
        CHECK(r[0] == doctest::Approx(0.2));
        CHECK(r[1] == doctest::Approx(0.0));
        CHECK_THROWS_AS((void)d_grad_d(iv, v1(-6.0)), DomainQueryError);
        // the box edge sits exactly one tube radius out
        CHECK_THROWS_AS((void)d_grad_d(iv, v1(-5.0)), TubeViolation);
    }

    TEST_CASE("projection onto the boundary")
    {
        Ball ball(Vec::Zero(2), 1.0);
        Interval iv(0.0, 10.0);
        CHECK((project_to_boundary(ball, v2(0.5, 0)) - v2(1, 0)).norm() < 1e-15);
        CHECK((project_to_boundary(ball, v2(0, 0.999)) - v2(0, 1)).norm() < 1e-15);
        CHECK(project_to_boundary(iv, v1(0.3))[0] == doctest::Approx(0.0));
        CHECK_THROWS_AS((void)project_to_boundary(ball, v2(0, 0)), TubeViolation);
    }

    TEST_CASE("queries outside the bounding box are rejected")
    {
        Ball ball(Vec::Zero(2), 1.0);
        CHECK_THROWS_AS((void)signed_distance(ball, v2(10, 0)), DomainQueryError);
    }

    TEST_CASE("identities hold to round-off on analytic domains")
    {
        Ball ball(Vec::Zero(2), 1.0);
        const auto rb = validate_geometry(ball, 1000, 3);
        for (const auto& c : rb.checks)
            CHECK_MESSAGE(c.max_residual <= 1e-10, c.check_name);

        Interval iv(0.0, 10.0);
        const auto ri = validate_geometry(iv, 100, 3);
        for (const auto& c : ri.checks)
            CHECK_MESSAGE(c.max_residual <= 1e-12, c.check_name);

        Annulus an((Vec(3) << 0.5, 0, 0).finished(), 1.0, 3.0);
        const auto ra = validate_geometry(an, 2000, 3);
        CHECK(ra.pass());
        for (const auto& c : ra.checks)
            CHECK_MESSAGE(c.max_residual <= 1e-10, c.check_name);
    }

    TEST_CASE("tube samples stay in the tube and are seed-deterministic")
    {
        Annulus an(Vec::Zero(2), 1.0, 3.0);
        const auto a = sample_tube(an, 500, 9);
        const auto b = sample_tube(an, 500, 9);
        REQUIRE(a.size() == 500);
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(a[i] == b[i]);
            CHECK(std::abs(signed_distance(an, a[i])) < an.tube_radius());
        }
    }

    TEST_CASE("d grad d is first order continuous across the boundary")
    {
        // |d grad d(xb + h nu) - h nu| = O(h^2) and d grad d(xb - h nu) = 0
        Ball ball(v2(0.2, -0.1), 1.5);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
        for (int s = 0; s < 50; ++s)
        {
            const double th = angle(rng);
            const Vec nu = v2(std::cos(th), std::sin(th));
            const Vec xb = v2(0.2, -0.1) + 1.5 * nu;
            for (double h : {1e-2, 1e-3, 1e-4})
            {
                CHECK((d_grad_d(ball, xb + h * nu) - h * nu).norm() <= 10.0 * h * h);
                CHECK(d_grad_d(ball, xb - h * nu).norm() == 0.0);
            }
        }
    }

    TEST_CASE("annulus normals point out of the shell on both spheres")
    {
        Annulus an(Vec::Zero(2), 1.0, 3.0);
        CHECK((an.gradient(v2(2.9, 0)) - v2(1, 0)).norm() < 1e-15);
        CHECK((an.gradient(v2(1.1, 0)) - v2(-1, 0)).norm() < 1e-15);
        CHECK(signed_distance(an, v2(0.5, 0)) == doctest::Approx(0.5));
        CHECK(an.tube_radius() == doctest::Approx(1.0));
    }

    TEST_CASE("implicit ellipse matches refinement of its own finite differences")
    {
        // Oracle: halving the Hessian step must change the Hessian by O(h^2),
        // and the identities must hold to the finite-difference tolerance.
        const Box box{Vec::Constant(2, -3.0), Vec::Constant(2, 3.0)};
        ImplicitSurface::Options coarse;
        coarse.tube_radius = 0.25;
        coarse.hessian_step = 2e-4;
        ImplicitSurface::Options fine = coarse;
        fine.hessian_step = 1e-4;
        auto ec = make_implicit_ellipse(Vec::Zero(2), 2.0, 1.0, box, coarse);
        auto ef = make_implicit_ellipse(Vec::Zero(2), 2.0, 1.0, box, fine);

        const auto rep = validate_geometry(*ef, 1000, 4);
        for (const auto& c : rep.checks)
            CHECK_MESSAGE(c.max_residual <= 1e-6, c.check_name);

        for (const Vec& x : sample_tube(*ef, 50, 8))
        {
            const Mat diff = ec->hessian(x) - ef->hessian(x);
            CHECK(diff.norm() <= 1e-4);
        }
        // on the axes the foot point is a vertex, so the distance is exact
        CHECK(signed_distance(*ef, v2(2.1, 0)) == doctest::Approx(0.1).epsilon(1e-10));
        CHECK(signed_distance(*ef, v2(0, 0.9)) == doctest::Approx(-0.1).epsilon(1e-10));
    }

    TEST_CASE("inconsistent level-set gradient is caught by the identity checks")
    {
        const Box box{Vec::Constant(2, -3.0), Vec::Constant(2, 3.0)};
        ImplicitSurface::Options o;
        o.tube_radius = 0.25;
        auto bad = make_implicit_ellipse(Vec::Zero(2), 2.0, 1.0, box, o, std::pair{1.0, 1.0});
        const auto rep = validate_geometry(*bad, 300, 4);
        CHECK_FALSE(rep.pass());
        CHECK_FALSE(rep.check("weingarten").pass);
    }

    TEST_CASE("serial and parallel validation agree bit for bit")
    {
        Annulus an(Vec::Zero(3), 1.0, 2.0);
        const auto a = validate_geometry(an, 3000, 17, {}, Execution::serial);
        const auto b = validate_geometry(an, 3000, 17, {}, Execution::parallel);
        REQUIRE(a.checks.size() == b.checks.size());
        for (std::size_t i = 0; i < a.checks.size(); ++i)
            CHECK(a.checks[i].max_residual == b.checks[i].max_residual);
    }

    TEST_CASE("half-space boundary is the plane only")
    {
        const Box box{Vec::Constant(2, -5.0), Vec::Constant(2, 5.0)};
        HalfSpaceTruncated hs(v2(-1, 0), 0.0, box);
        CHECK(signed_distance(hs, v2(1, 2)) == doctest::Approx(-1.0));
        CHECK((hs.gradient(v2(1, 2)) - v2(-1, 0)).norm() < 1e-15);
    }
}
