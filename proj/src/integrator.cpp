#include "reflectsim/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace reflectsim
{

namespace
{

// Butcher tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
// Error weights (fifth minus fourth order).
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

} // namespace

Vec DenseSegment::operator()(double t) const
{
    const double h = t1_ - t0_;
    if (h == 0.0) return c_[0];
    const double s = (t - t0_) / h;
    const double s1 = 1.0 - s;
    return c_[0] + s * (c_[1] + s1 * (c_[2] + s * (c_[3] + s1 * c_[4])));
}

DormandPrince::DormandPrince(Rhs rhs, IntegratorOptions opts)
    : rhs_(std::move(rhs))
    , opts_(opts)
{
}

void DormandPrince::reset(double t, const Vec& y)
{
    t_ = t;
    y_ = y;
    k1_.resize(y.size());
    rhs_(t_, y_, k1_);
    if (!k1_.allFinite()) throw NumericError("right-hand side is not finite at the initial state");
}

double DormandPrince::initial_step(double t_limit) const
{
    if (opts_.initial_step > 0.0) return opts_.initial_step;
    // Hairer-Norsett-Wanner starting step heuristic.
    const Vec sc = opts_.atol + opts_.rtol * y_.array().abs();
    const double d0 = std::sqrt((y_.array() / sc.array()).square().mean());
    const double d1n = std::sqrt((k1_.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min({h0, t_limit - t_, opts_.max_step});
    Vec y1 = y_ + h0 * k1_;
    Vec k2(y_.size());
    rhs_(t_ + h0, y1, k2);
    const double d2 = std::sqrt((((k2 - k1_).array() / sc.array())).square().mean()) / h0;
    const double dmax = std::max(d1n, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, t_limit - t_, opts_.max_step});
}

DenseSegment DormandPrince::step(double t_limit, double h_cap)
{
    if (!(t_limit > t_)) throw InputError("integrator step requested with no room left");
    if (h_ <= 0.0) h_ = initial_step(t_limit);

    const Eigen::Index n = y_.size();
    Vec k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
    for (int attempt = 0;; ++attempt)
    {
        double h = std::min({h_, h_cap, opts_.max_step});
        bool last = false;
        if (t_ + h >= t_limit || t_limit - (t_ + h) < 1e-12 * std::max(1.0, std::abs(t_limit)))
        {
            h = t_limit - t_;
            last = true;
        }
        if (h < opts_.min_step && !last) throw StiffnessError("step size underflow at t = " + std::to_string(t_));

        ytmp = y_ + h * a21 * k1_;
        rhs_(t_ + c2 * h, ytmp, k2);
        ytmp = y_ + h * (a31 * k1_ + a32 * k2);
        rhs_(t_ + c3 * h, ytmp, k3);
        ytmp = y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3);
        rhs_(t_ + c4 * h, ytmp, k4);
        ytmp = y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4);
        rhs_(t_ + c5 * h, ytmp, k5);
        ytmp = y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double t_new = last ? t_limit : t_ + h;
        rhs_(t_new, ytmp, k6);
        ynew = y_ + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs_(t_new, ynew, k7);

        const Vec err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const Vec sc = opts_.atol + opts_.rtol * y_.array().abs().max(ynew.array().abs());
        double err_norm = std::sqrt((err.array() / sc.array()).square().mean());
        if (!std::isfinite(err_norm) || !ynew.allFinite()) err_norm = 1e10;

        if (err_norm <= 1.0)
        {
            const Vec ydiff = ynew - y_;
            const Vec bspl = h * k1_ - ydiff;
            std::array<Vec, 5> rc{
                y_,
                ydiff,
                bspl,
                ydiff - h * k7 - bspl,
                h * (d1 * k1_ + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7),
            };
            DenseSegment seg(t_, t_new, std::move(rc));
            const double fac = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
            // Keep the proposal of a truncated final step from collapsing.
            h_ = std::max(h * fac, last ? h_ : 0.0);
            t_ = t_new;
            y_ = ynew;
            k1_ = k7;
            ++accepted_;
            return seg;
        }
        ++rejected_;
        h_ = h * std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
        if (attempt >= opts_.max_rejections)
            throw StiffnessError("too many rejected steps at t = " + std::to_string(t_));
    }
}

} // namespace reflectsim
