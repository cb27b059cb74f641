#include "doctest.h"

#include <cmath>

#include "reflectsim/integrator.hpp"

using namespace reflectsim;

TEST_SUITE("integrator")
{
    TEST_CASE("harmonic oscillator to tolerance, with dense output")
    {
        DormandPrince dp([](double, const Vec& y, Vec& dy) {
            dy.resize(2);
            dy[0] = y[1];
            dy[1] = -y[0];
        }, IntegratorOptions{});
        dp.reset(0.0, (Vec(2) << 1.0, 0.0).finished());
        double worst = 0.0;
        while (dp.t() < 10.0)
        {
            const DenseSegment seg = dp.step(10.0);
            for (int j = 0; j <= 8; ++j)
            {
                const double t = seg.t0() + (seg.t1() - seg.t0()) * j / 8.0;
                worst = std::max(worst, std::abs(seg(t)[0] - std::cos(t)));
            }
        }
        CHECK(dp.t() == 10.0);
        CHECK(std::abs(dp.y()[0] - std::cos(10.0)) < 1e-9);
        CHECK(worst < 1e-8);
    }

    TEST_CASE("step cap and limit are honoured")
    {
        DormandPrince dp([](double, const Vec&, Vec& dy) { dy = Vec::Constant(1, 1.0); }, IntegratorOptions{});
        dp.reset(0.0, Vec::Zero(1));
        const DenseSegment s = dp.step(1.0, 0.01);
        CHECK(s.t1() - s.t0() <= 0.01 + 1e-15);
        while (dp.t() < 1.0)
            (void)dp.step(1.0);
        CHECK(dp.y()[0] == doctest::Approx(1.0));
    }
}
