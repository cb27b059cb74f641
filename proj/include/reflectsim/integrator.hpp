#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta pair with the standard
// fourth-order continuous extension.

#include <array>
#include <functional>

#include "reflectsim/types.hpp"

namespace reflectsim
{

struct IntegratorOptions
{
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = kInf;
    double min_step = 1e-14;
    double initial_step = 0.0; // 0 selects a step automatically
    int max_rejections = 60;
};

/// Dense output over one accepted step [t0, t1].
class DenseSegment
{
  public:
    DenseSegment() = default;
    DenseSegment(double t0, double t1, std::array<Vec, 5> coeffs)
        : t0_(t0)
        , t1_(t1)
        , c_(std::move(coeffs))
    {
    }

    [[nodiscard]] double t0() const { return t0_; }
    [[nodiscard]] double t1() const { return t1_; }
    [[nodiscard]] Vec operator()(double t) const;

  private:
    double t0_ = 0.0, t1_ = 0.0;
    std::array<Vec, 5> c_;
};

class DormandPrince
{
  public:
    using Rhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

    DormandPrince(Rhs rhs, IntegratorOptions opts);

    /// Restarts from (t, y); discards the first-same-as-last stage.
    void reset(double t, const Vec& y);

    /// Takes one accepted step that does not pass `t_limit`. The next trial
    /// step is capped by `h_cap` in addition to IntegratorOptions::max_step.
    DenseSegment step(double t_limit, double h_cap = kInf);

    [[nodiscard]] double t() const { return t_; }
    [[nodiscard]] const Vec& y() const { return y_; }
    [[nodiscard]] double suggested_step() const { return h_; }
    [[nodiscard]] std::size_t accepted_steps() const { return accepted_; }
    [[nodiscard]] std::size_t rejected_steps() const { return rejected_; }

    /// Shrinks the next trial step, e.g. after a step probed an invalid state.
    void shrink_step(double factor) { h_ *= factor; }

  private:
    [[nodiscard]] double initial_step(double t_limit) const;

    Rhs rhs_;
    IntegratorOptions opts_;
    double t_ = 0.0;
    double h_ = 0.0;
    Vec y_, k1_;
    std::size_t accepted_ = 0, rejected_ = 0;
};

} // namespace reflectsim
