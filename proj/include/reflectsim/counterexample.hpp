#pragma once

// Closed-form non-uniqueness example on the half-line x > 0 (outward normal
// -1): a C^L force F <= 0 for which both x = 0 and a nonzero bouncing path
// with bounces accumulating at t = 0 are solutions from rest.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reflectsim/types.hpp"

namespace reflectsim
{

using Profile = std::function<double(double)>;

/// exp(-1/((s - 1/2)(1 - s))) on (1/2, 1), zero elsewhere.
[[nodiscard]] double default_bump(double s);

/// The one-bounce path z'' = -f, z(0) = 0, z'(0) = v0 chosen so that z(1) = 0.
struct AuxiliaryBounce
{
    Profile f;
    double support_lo = 0.0, support_hi = 1.0; // f vanishes outside
    double v0 = 0.0;         // integral of (1 - s) f
    double v1 = 0.0;         // integral of s f
    double moment_gap = 0.0; // integral of (2s - 1) f, computed on its own
    double f_max = 0.0;      // sampled sup of f
    double tol = 1e-13;      // relative quadrature tolerance

    [[nodiscard]] double z(double t) const;
    [[nodiscard]] double dz(double t) const;
    [[nodiscard]] double d2z(double t) const { return -f(t); }
    /// integral of f and of s f over [0, t]
    [[nodiscard]] double F0(double t) const;
    [[nodiscard]] double F1(double t) const;

    // Cumulative panel sums of f and s f; F0/F1 add one short Gauss panel.
    std::vector<double> c0, c1;
    [[nodiscard]] double panel_width() const { return (support_hi - support_lo) / (c0.size() - 1); }
};

/// Throws NumericError when the quadrature does not converge.
[[nodiscard]] AuxiliaryBounce auxiliary_bounce(Profile f, double support_lo = 0.0, double support_hi = 1.0,
                                               double tol = 1e-13);

struct Scaling
{
    double a = 0.0;
    double b = 0.0;
};

/// L >= 2: a at the midpoint of [(v0/v1)^(1/(L-1)), 1); L = 1: midpoint of
/// (v0/v1, 1). b = a v0 / v1 in both cases.
[[nodiscard]] Scaling choose_scaling(double v0, double v1, int L);

struct CounterexampleParams
{
    AuxiliaryBounce aux;
    int L = 2;
    double a = 0.0;
    double b = 0.0;
    [[nodiscard]] double T_mid() const { return 0.5 * (1.0 + a) / (1.0 - a); }
    /// left endpoint a^(n+1)/(1-a) of I_n
    [[nodiscard]] double t_left(int n) const;
    [[nodiscard]] double t_right(int n) const { return t_left(n - 1); }
    /// Index n with t in [t_left(n), t_right(n)), or -1 for t <= 0. Also -1
    /// when t is so close to 0 that the scaled solution underflows.
    [[nodiscard]] int interval_of(double t) const;
};

/// Default bump, scaling from choose_scaling.
[[nodiscard]] CounterexampleParams make_params(int L = 2);
[[nodiscard]] CounterexampleParams make_params(AuxiliaryBounce aux, int L);

/// F(t) for t <= T_mid; HorizonError beyond.
[[nodiscard]] double counterexample_force(double t, const CounterexampleParams& p);

struct CounterexampleState
{
    double x = 0.0;
    double v = 0.0; // right-continuous
    int n = -1;
};

[[nodiscard]] CounterexampleState counterexample_solution(double t, const CounterexampleParams& p);

struct CertificateCheck
{
    std::string name;
    bool pass = false;
    double value = 0.0;     // the quantity compared with the tolerance
    double tolerance = 0.0;
    double relative = 0.0;  // value scaled by the natural magnitude of the terms
    std::optional<int> offending_n;
    std::string detail;
};

struct CertificateTolerances
{
    double ode_residual = 1e-6;
    double reflection = 1e-10; // relative
    double moment_gap = 1e-12; // relative to v1
    double derivative = 1e-4;
    double weak_form = 1e-6;
    double energy = 1e-6;
};

struct CertificateReport
{
    int L = 0;
    int n_max = 0;
    double a = 0.0, b = 0.0, v0 = 0.0, v1 = 0.0, T_mid = 0.0;
    std::vector<CertificateCheck> checks;
    std::vector<double> ode_residual_per_interval;
    std::vector<double> ode_relative_per_interval;
    std::vector<double> derivative_estimates;  // orders 0..L at t = 0
    std::vector<double> derivative_growth;     // b / a^(l+2), l = 0..L
    [[nodiscard]] bool pass() const;
    [[nodiscard]] const CertificateCheck& check(const std::string& name) const;
};

[[nodiscard]] CertificateReport verify_counterexample(const CounterexampleParams& p, int n_max,
                                                      const CertificateTolerances& tol = {},
                                                      Execution exec = Execution::parallel);

struct CounterexampleSample
{
    double t, F, x, v;
    int n;
};

[[nodiscard]] std::vector<CounterexampleSample> sample_counterexample(const CounterexampleParams& p, double t_lo,
                                                                      double t_hi, int count);

} // namespace reflectsim
