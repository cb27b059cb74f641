#include "reflectsim/counterexample.hpp"
#include "reflectsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

namespace reflectsim
{

namespace
{

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
using Panel = boost::math::quadrature::gauss<double, 20>;
constexpr int kPanels = 1024;

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double integrate(const std::function<double(double)>& g, double lo, double hi, double tol, double abs_floor = 0.0)
{
    if (!(hi > lo)) return 0.0;
    double err = 0.0, l1 = 0.0;
    const double r = GK::integrate(g, lo, hi, 20, tol, &err, &l1);
    // The error estimate is pessimistic for these very flat integrands, so
    // anything below round-off of the integrand's own scale counts as converged.
    double scale = 0.0;
    for (int j = 0; j <= 32; ++j)
        scale = std::max(scale, std::abs(g(lo + (hi - lo) * j / 32.0)));
    const double floor = std::max({1e-14 * scale * (hi - lo), abs_floor, 1e-300});
    if (!std::isfinite(r) || err > std::max(100.0 * tol * l1, floor))
        throw NumericError("quadrature did not converge on [" + std::to_string(lo) + ", " + std::to_string(hi) + "] err " + fmt(err) + " l1 " + fmt(l1) + " scale " + fmt(scale));
    return r;
}

double composite(const std::function<double(double)>& g, double lo, double hi, int panels)
{
    const double h = (hi - lo) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k)
        sum += Panel::integrate(g, lo + k * h, k + 1 == panels ? hi : lo + (k + 1) * h);
    return sum;
}

// Fixed composite Gauss rule with a doubling check; used where the adaptive
// estimate is unreliable (compressed copies of the flat bump).
double integrate_panels(const std::function<double(double)>& g, double lo, double hi, double abs_floor)
{
    if (!(hi > lo)) return 0.0;
    const double coarse = composite(g, lo, hi, 16);
    const double fine = composite(g, lo, hi, 32);
    if (!std::isfinite(fine) || std::abs(fine - coarse) > std::max(1e-11 * std::abs(fine), abs_floor))
        throw NumericError("panel quadrature did not settle on [" + fmt(lo) + ", " + fmt(hi) + "]: relative change " + fmt(std::abs(fine - coarse) / std::abs(fine)));
    return fine;
}

} // namespace

double default_bump(double s)
{
    if (!(s > 0.5 && s < 1.0)) return 0.0;
    return std::exp(-1.0 / ((s - 0.5) * (1.0 - s)));
}

namespace
{

double cumulative(const AuxiliaryBounce& aux, const std::vector<double>& table, double t, bool moment)
{
    if (t <= aux.support_lo) return 0.0;
    if (t >= aux.support_hi) return table.back();
    const double h = aux.panel_width();
    const auto k = std::min(static_cast<std::size_t>((t - aux.support_lo) / h), table.size() - 2);
    const double s0 = aux.support_lo + static_cast<double>(k) * h;
    if (t == s0) return table[k];
    auto g = [&](double s) { return moment ? s * aux.f(s) : aux.f(s); };
    return table[k] + Panel::integrate(g, s0, t);
}

} // namespace

double AuxiliaryBounce::F0(double t) const { return cumulative(*this, c0, t, false); }

double AuxiliaryBounce::F1(double t) const { return cumulative(*this, c1, t, true); }

double AuxiliaryBounce::z(double t) const { return v0 * t - t * F0(t) + F1(t); }

double AuxiliaryBounce::dz(double t) const { return v0 - F0(t); }

AuxiliaryBounce auxiliary_bounce(Profile f, double support_lo, double support_hi, double tol)
{
    if (!(support_lo >= 0.0 && support_hi <= 1.0 && support_hi > support_lo))
        throw InputError("profile support must lie in [0, 1]");
    AuxiliaryBounce aux;
    aux.f = std::move(f);
    aux.support_lo = support_lo;
    aux.support_hi = support_hi;
    aux.tol = tol;
    aux.v0 = integrate([&](double s) { return (1.0 - s) * aux.f(s); }, support_lo, support_hi, tol);
    aux.v1 = integrate([&](double s) { return s * aux.f(s); }, support_lo, support_hi, tol);
    aux.moment_gap = integrate([&](double s) { return (2.0 * s - 1.0) * aux.f(s); }, support_lo, support_hi, tol);
    for (int j = 0; j <= 4000; ++j)
        aux.f_max = std::max(aux.f_max, std::abs(aux.f(j / 4000.0)));

    aux.c0.assign(kPanels + 1, 0.0);
    aux.c1.assign(kPanels + 1, 0.0);
    const double h = (support_hi - support_lo) / kPanels;
    for (int k = 0; k < kPanels; ++k)
    {
        const double s0 = support_lo + k * h, s1 = k + 1 == kPanels ? support_hi : s0 + h;
        aux.c0[k + 1] = aux.c0[k] + Panel::integrate(aux.f, s0, s1);
        aux.c1[k + 1] = aux.c1[k] + Panel::integrate([&](double s) { return s * aux.f(s); }, s0, s1);
    }
    // The panel table and the adaptive rule must agree on the totals.
    const double scale = std::max(aux.v0 + aux.v1, 1e-300);
    if (std::abs(aux.c1.back() - aux.v1) > 1e3 * tol * scale ||
        std::abs(aux.c0.back() - (aux.v0 + aux.v1)) > 1e3 * tol * scale)
        throw NumericError("panel quadrature disagrees with the adaptive rule; the profile is too rough");
    return aux;
}

Scaling choose_scaling(double v0, double v1, int L)
{
    if (L < 1) throw ConstructionError("smoothness order L must be >= 1");
    if (!(v0 > 0.0) || !(v1 > v0))
        throw ConstructionError("need 0 < v0 < v1 for the counterexample (got v0 = " + std::to_string(v0) +
                                ", v1 = " + std::to_string(v1) + ")");
    const double q = v0 / v1;
    const double lower = L == 1 ? q : std::pow(q, 1.0 / (L - 1));
    Scaling s;
    s.a = 0.5 * (lower + 1.0);
    s.b = s.a * q;
    if (!(s.b > 0.0 && s.b < std::pow(s.a, L) && s.a < 1.0))
        throw ConstructionError("scaling violates 0 < b < a^L < 1");
    return s;
}

double CounterexampleParams::t_left(int n) const { return std::pow(a, n + 1) / (1.0 - a); }

int CounterexampleParams::interval_of(double t) const
{
    if (!(t > 0.0)) return -1;
    const double u = t * (1.0 - a);
    int n = static_cast<int>(std::ceil(std::log(u) / std::log(a))) - 1;
    n = std::max(n, 0);
    while (n > 0 && t >= t_right(n))
        --n;
    while (t < t_left(n))
        ++n;
    return n;
}

CounterexampleParams make_params(AuxiliaryBounce aux, int L)
{
    if (!(aux.moment_gap > 1e3 * aux.tol * std::max(aux.v1, 1e-300)))
        throw ConstructionError("profile violates the moment condition: integral of (2s-1) f must be positive");
    const Scaling sc = choose_scaling(aux.v0, aux.v1, L);
    CounterexampleParams p;
    p.aux = std::move(aux);
    p.L = L;
    p.a = sc.a;
    p.b = sc.b;
    return p;
}

CounterexampleParams make_params(int L) { return make_params(auxiliary_bounce(default_bump, 0.5, 1.0), L); }

namespace
{

// Local coordinate s in [0, 1) of t inside I_n.
double local_s(double t, int n, const CounterexampleParams& p)
{
    const double an = std::pow(p.a, n);
    double s;
    if (an > 1e-280)
        s = (t - p.t_left(n)) / an;
    else
        s = std::exp(std::log(t * (1.0 - p.a)) - n * std::log(p.a)) - p.a;
    return std::clamp(s, 0.0, 1.0);
}

double scaled(double ratio, int n, double value)
{
    if (value == 0.0) return 0.0;
    const double lg = n * std::log(ratio) + std::log(std::abs(value));
    return std::copysign(std::exp(lg), value);
}

void check_horizon(double t, const CounterexampleParams& p)
{
    if (!std::isfinite(t)) throw NumericError("non-finite time");
    if (t > p.T_mid() * (1.0 + 1e-15))
        throw HorizonError("time " + std::to_string(t) + " beyond the counterexample horizon " +
                           std::to_string(p.T_mid()));
}

double force_in(double t, int n, const CounterexampleParams& p)
{
    return -scaled(p.b / (p.a * p.a), n, p.aux.f(local_s(t, n, p)));
}

double velocity_in(double t, int n, const CounterexampleParams& p)
{
    return scaled(p.b / p.a, n, p.aux.dz(local_s(t, n, p)));
}

} // namespace

double counterexample_force(double t, const CounterexampleParams& p)
{
    check_horizon(t, p);
    const int n = p.interval_of(t);
    if (n < 0) return 0.0;
    return force_in(t, n, p);
}

CounterexampleState counterexample_solution(double t, const CounterexampleParams& p)
{
    check_horizon(t, p);
    CounterexampleState st;
    st.n = p.interval_of(t);
    if (st.n < 0) return st;
    st.x = scaled(p.b, st.n, p.aux.z(local_s(t, st.n, p)));
    st.v = velocity_in(t, st.n, p);
    return st;
}

bool CertificateReport::pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CertificateCheck& c) { return c.pass; });
}

const CertificateCheck& CertificateReport::check(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InputError("certificate has no check named " + name);
}

namespace
{

struct Bump
{
    double center, width;
    double value(double t) const
    {
        const double s = (t - center) / width;
        return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
    }
    double derivative(double t) const
    {
        const double s = (t - center) / width;
        if (std::abs(s) >= 1.0) return 0.0;
        const double q = 1.0 - s * s;
        return std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / width;
    }
};

class Verifier
{
  public:
    Verifier(const CounterexampleParams& p, int n_max, const CertificateTolerances& tol, Execution exec)
        : p_(p)
        , n_max_(n_max)
        , tol_(tol)
        , exec_(exec)
        , horizon_(n_max == 0 ? 0.0 : p.T_mid())
    {
        // beyond n_tail every contribution is below 1e-20 of the leading terms
        n_tail_ = static_cast<int>(std::ceil(std::log(1e-20) / std::log(p.b / p.a))) + 1;
        n_tail_ = std::clamp(n_tail_, 1, 4000);
    }

    CertificateReport run()
    {
        CertificateReport rep;
        rep.L = p_.L;
        rep.n_max = n_max_;
        rep.a = p_.a;
        rep.b = p_.b;
        rep.v0 = p_.aux.v0;
        rep.v1 = p_.aux.v1;
        rep.T_mid = p_.T_mid();

        ode_residual(rep);
        reflection(rep);
        bv_mass(rep);
        moment(rep);
        derivatives(rep);
        weak_form(rep);
        energy(rep);
        distinct(rep);
        return rep;
    }

  private:
    template <class Body>
    void for_each(long count, Body&& body) const
    {
        parallel_for(count, exec_, body);
    }

    double x_at(double t) const { return counterexample_solution(t, p_).x; }

    void ode_residual(CertificateReport& rep) const
    {
        const int count = n_max_ == 0 ? 0 : n_max_ + 1;
        rep.ode_residual_per_interval.assign(count, 0.0);
        rep.ode_relative_per_interval.assign(count, 0.0);
        for_each(count, [&](long nl) {
            const int n = static_cast<int>(nl);
            const double an = std::pow(p_.a, n);
            const double s_hi = n == 0 ? 0.48 : 0.98;
            const double scale = std::pow(p_.b / (p_.a * p_.a), n) * p_.aux.f_max;
            double worst = 0.0;
            for (int j = 0; j <= 40; ++j)
            {
                const double s = 0.02 + (s_hi - 0.02) * j / 40.0;
                const double t = p_.t_left(n) + s * an;
                auto d2 = [&](double h) { return (x_at(t + h) - 2.0 * x_at(t) + x_at(t - h)) / (h * h); };
                const double h = 1e-3 * an;
                const double fd = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
                worst = std::max(worst, std::abs(fd - counterexample_force(t, p_)));
            }
            rep.ode_residual_per_interval[n] = worst;
            rep.ode_relative_per_interval[n] = scale > 0.0 ? worst / scale : 0.0;
        });
        CertificateCheck c{"ode_residual", true, 0.0, tol_.ode_residual, 0.0, {}, ""};
        for (int n = 0; n < count; ++n)
        {
            c.relative = std::max(c.relative, rep.ode_relative_per_interval[n]);
            if (rep.ode_residual_per_interval[n] > c.value)
            {
                c.value = rep.ode_residual_per_interval[n];
                if (c.value > c.tolerance && !c.offending_n) c.offending_n = n;
            }
        }
        c.pass = c.value <= c.tolerance;
        c.detail = "max |x'' - F| over I_0..I_n_max by Richardson-extrapolated second differences";
        rep.checks.push_back(c);
    }

    void reflection(CertificateReport& rep) const
    {
        CertificateCheck c{"reflection", true, 0.0, tol_.reflection, 0.0, {}, ""};
        const double dz1 = p_.aux.dz(1.0);
        for (int n = 0; n < n_max_; ++n)
        {
            const double v_minus = scaled(p_.b / p_.a, n + 1, dz1);
            const double v_plus = counterexample_solution(p_.t_left(n), p_).v;
            const double v_plus_next = counterexample_solution(p_.t_left(n + 1), p_).v;
            // nu = -1, so the rule reads v+ = -v-
            const double mismatch = std::abs(v_plus + v_minus) / std::abs(v_plus);
            const double ratio_err = std::abs(v_plus_next / v_plus - p_.b / p_.a) / (p_.b / p_.a);
            const double atom_err =
                std::abs((v_plus - v_minus) - 2.0 * p_.aux.v0 * std::pow(p_.b / p_.a, n)) / std::abs(v_plus);
            const double worst = std::max({mismatch, ratio_err, atom_err});
            if (worst > c.value) c.value = worst;
            if (worst > c.tolerance && !c.offending_n) c.offending_n = n;
        }
        c.relative = c.value;
        c.pass = c.value <= c.tolerance;
        c.detail = "relative mismatch of v+ = -v-, of the speed ratio b/a and of the atom mass 2 v0 (b/a)^n";
        rep.checks.push_back(c);
    }

    void bv_mass(CertificateReport& rep) const
    {
        CertificateCheck c{"bv_mass", true, 0.0, tol_.reflection, 0.0, {}, ""};
        if (n_max_ == 0)
        {
            c.detail = "no intervals: x = 0 on (-1, 0]";
            rep.checks.push_back(c);
            return;
        }
        const double r = p_.b / p_.a;
        double partial = 0.0;
        for (int n = 0; n <= n_max_; ++n)
            partial += 2.0 * p_.aux.v0 * std::pow(r, n) + p_.aux.f_max * std::pow(p_.b / (p_.a * p_.a), n) * std::pow(p_.a, n);
        const double tail = (2.0 * p_.aux.v0 + p_.aux.f_max) * std::pow(r, n_max_ + 1) / (1.0 - r);

        // mu((0, T)) must equal x'(T) - x'(0+) = x'(T)
        double mu = 0.0;
        const double dz0 = p_.aux.dz(0.0), dz1 = p_.aux.dz(1.0), dzT = p_.aux.dz(local_s(p_.T_mid(), 0, p_));
        for (int n = n_tail_; n >= 0; --n)
        {
            mu += 2.0 * p_.aux.v0 * std::pow(r, n);
            mu += n == 0 ? (dzT - dz0) : std::pow(r, n) * (dz1 - dz0);
        }
        const double vT = counterexample_solution(p_.T_mid(), p_).v;
        c.value = std::abs(mu - vT) / std::abs(p_.aux.v0);
        c.relative = c.value;
        c.pass = r < 1.0 && std::isfinite(partial + tail) && c.value <= c.tolerance;
        c.detail = "total variation <= " + std::to_string(partial + tail) + " (b/a = " + std::to_string(r) +
                   "); value is |mu((0,T)) - x'(T)| / v0";
        rep.checks.push_back(c);
    }

    void moment(CertificateReport& rep) const
    {
        CertificateCheck c{"moment_gap", true, 0.0, tol_.moment_gap, 0.0, {}, ""};
        const double gap = p_.aux.v1 - p_.aux.v0;
        c.value = std::abs(gap - p_.aux.moment_gap) / p_.aux.v1;
        c.relative = c.value;
        c.pass = gap > 0.0 && p_.aux.moment_gap > 0.0 && c.value <= c.tolerance;
        c.detail = "v1 - v0 = " + std::to_string(gap) + " against the integral of (2s-1) f";
        rep.checks.push_back(c);
    }

    void derivatives(CertificateReport& rep) const
    {
        CertificateCheck c{"derivatives_at_zero", true, 0.0, tol_.derivative, 0.0, {}, ""};
        for (int l = 0; l <= p_.L; ++l)
        {
            rep.derivative_growth.push_back(p_.b / std::pow(p_.a, l + 2));
            auto D = [&](double h) {
                if (l == 0) return counterexample_force(0.0, p_);
                double sum = 0.0;
                for (int j = 0; j <= l; ++j)
                {
                    const double w = boost::math::binomial_coefficient<double>(l, j) * ((j % 2) ? -1.0 : 1.0);
                    sum += w * counterexample_force((0.5 * l - j) * h, p_);
                }
                return sum / std::pow(h, l);
            };
            double est = 0.0;
            for (int k = 2; k <= 6; ++k)
            {
                const double h = std::pow(10.0, -k);
                est = std::max(est, std::abs((4.0 * D(0.5 * h) - D(h)) / 3.0));
            }
            rep.derivative_estimates.push_back(est);
            if (est > c.value) c.value = est;
        }
        c.relative = c.value / std::max(p_.aux.f_max, 1e-300);
        c.pass = c.value <= c.tolerance;
        c.detail = "max over orders 0..L and h = 1e-2..1e-6 of Richardson central differences at t = 0";
        rep.checks.push_back(c);
    }

    // integral over (lo, hi) of g(t, n) split on the intervals I_n
    double over_intervals(double lo, double hi, const std::function<double(double, int)>& g, double abs_floor) const
    {
        hi = std::min(hi, horizon_);
        if (!(hi > std::max(lo, 0.0))) return 0.0;
        double sum = 0.0;
        for (int n = 0; n <= n_tail_; ++n)
        {
            const double l = std::max(lo, p_.t_left(n));
            const double r = std::min(hi, n == 0 ? p_.T_mid() : p_.t_right(n));
            if (p_.t_right(n) <= lo) break;
            if (!(r > l)) continue;
            sum += integrate_panels([&](double t) { return g(t, n); }, l, r, abs_floor);
        }
        return sum;
    }

    std::vector<Bump> test_functions() const
    {
        std::vector<Bump> fns;
        if (n_max_ == 0)
        {
            fns = {{-0.5, 0.4}, {-0.1, 0.09}, {-0.3, 0.25}};
            return fns;
        }
        fns.push_back({0.0, 0.5});
        fns.push_back({0.0, 0.05});
        fns.push_back({0.5 * p_.t_left(0), 0.6 * p_.t_left(0)});
        for (int n = 0; n <= n_max_; ++n)
        {
            const double an = std::pow(p_.a, n);
            fns.push_back({p_.t_left(n), 0.45 * an});
            if (n > 0) fns.push_back({p_.t_left(n) + 0.75 * an, 0.2 * an});
        }
        return fns;
    }

    void weak_form(CertificateReport& rep) const
    {
        const auto fns = test_functions();
        const long nf = static_cast<long>(fns.size());
        std::vector<double> res_zero(nf), res_x(nf), rel_zero(nf), rel_x(nf);
        for_each(nf, [&](long j) {
            const Bump& psi = fns[j];
            const double lo = psi.center - psi.width, hi = psi.center + psi.width;
            // pieces below this are round-off against the leading terms
            const double floor = 1e-16 * (p_.aux.f_max + p_.aux.v1) * (1.0 + 1.0 / psi.width);
            const double force = over_intervals(lo, hi, [&](double t, int n) {
                return force_in(t, n, p_) * psi.value(t);
            }, floor);
            // x = 0: density rho = -F against normal -1
            const double density = over_intervals(lo, hi, [&](double t, int n) {
                return (-1.0) * psi.value(t) * (-force_in(t, n, p_));
            }, floor);
            res_zero[j] = std::abs(0.0 + force - density);
            rel_zero[j] = res_zero[j] / std::max({std::abs(force), std::abs(density), 1e-300});

            const double velocity = over_intervals(lo, hi, [&](double t, int n) {
                return velocity_in(t, n, p_) * psi.derivative(t);
            }, floor);
            double atoms = 0.0;
            for (int n = 0; n <= n_tail_; ++n)
            {
                const double tn = p_.t_left(n);
                if (tn > lo && tn < hi && tn < horizon_) atoms += (-1.0) * 2.0 * p_.aux.v0 * std::pow(p_.b / p_.a, n) * psi.value(tn);
            }
            res_x[j] = std::abs(velocity + force - atoms);
            rel_x[j] = res_x[j] / std::max({std::abs(velocity), std::abs(force), std::abs(atoms), 1e-300});
        });
        auto add = [&](const std::string& name, const std::vector<double>& res, const std::vector<double>& rel,
                       const std::string& detail) {
            CertificateCheck c{name, true, 0.0, tol_.weak_form, 0.0, {}, detail};
            for (long j = 0; j < nf; ++j)
            {
                c.value = std::max(c.value, res[j]);
                c.relative = std::max(c.relative, rel[j]);
            }
            c.pass = c.value <= c.tolerance;
            rep.checks.push_back(c);
        };
        add("weak_form_zero", res_zero, rel_zero,
            std::to_string(nf) + " bump test functions; x = 0 with density -F");
        add("weak_form_nonzero", res_x, rel_x,
            std::to_string(nf) + " bump test functions; atoms 2 v0 (b/a)^n at the left endpoints");
    }

    void energy(CertificateReport& rep) const
    {
        std::vector<std::pair<double, double>> windows;
        if (n_max_ == 0)
            windows = {{-0.9, -0.1}, {-0.5, 0.0}};
        else
        {
            windows = {{-0.5, p_.T_mid()}, {-0.9, p_.t_left(0)}, {-0.5, p_.t_left(1) + 0.6 * p_.a}};
            for (int n : {2, 3, n_max_})
                if (n <= n_max_) windows.push_back({-0.25, p_.t_left(n) + 0.8 * std::pow(p_.a, n)});
        }
        double worst_x = 0.0, rel_x = 0.0, worst_zero = 0.0;
        for (const auto& [s1, s2] : windows)
        {
            const double v1 = counterexample_solution(s1, p_).v;
            const double v2 = counterexample_solution(s2, p_).v;
            const double gap = 0.5 * v2 * v2 - 0.5 * v1 * v1;
            const double work = over_intervals(s1, s2, [&](double t, int n) {
                return force_in(t, n, p_) * velocity_in(t, n, p_);
            }, 1e-16 * p_.aux.f_max * p_.aux.v1);
            const double r = std::abs(gap - work);
            worst_x = std::max(worst_x, r);
            rel_x = std::max(rel_x, r / std::max({std::abs(gap), std::abs(work), 1e-300}));
            // x = 0: no kinetic energy and no work
            worst_zero = std::max(worst_zero, 0.0);
        }
        rep.checks.push_back({"energy_zero", worst_zero <= tol_.energy, worst_zero, tol_.energy, 0.0, {},
                              std::to_string(windows.size()) + " windows straddling 0"});
        rep.checks.push_back({"energy_nonzero", worst_x <= tol_.energy, worst_x, tol_.energy, rel_x, {},
                              std::to_string(windows.size()) + " windows straddling 0, right-limit velocities"});
    }

    void distinct(CertificateReport& rep) const
    {
        CertificateCheck c{"distinct_solutions", true, 0.0, 0.0, 0.0, {}, ""};
        if (n_max_ == 0)
        {
            c.detail = "vacuous on (-1, 0]";
            rep.checks.push_back(c);
            return;
        }
        for (int j = 1; j < 50; ++j)
            c.value = std::max(c.value, x_at(p_.t_left(1) + p_.a * j / 50.0));
        c.relative = 1.0;
        c.pass = c.value > 0.0;
        c.detail = "max x on I_1; the zero path is the other solution";
        rep.checks.push_back(c);
    }

    const CounterexampleParams& p_;
    int n_max_;
    CertificateTolerances tol_;
    Execution exec_;
    double horizon_;
    int n_tail_ = 0;
};

} // namespace

CertificateReport verify_counterexample(const CounterexampleParams& p, int n_max, const CertificateTolerances& tol,
                                        Execution exec)
{
    if (n_max < 0) throw InputError("n_max must be >= 0");
    if (!(p.a > 0.0 && p.a < 1.0 && p.b > 0.0)) throw ConstructionError("need 0 < a < 1 and b > 0");
    Verifier v(p, n_max, tol, exec);
    return v.run();
}

std::vector<CounterexampleSample> sample_counterexample(const CounterexampleParams& p, double t_lo, double t_hi,
                                                        int count)
{
    if (count < 2 || !(t_hi > t_lo)) throw InputError("sampling needs count >= 2 and t_lo < t_hi");
    std::vector<CounterexampleSample> out;
    out.reserve(count);
    for (int j = 0; j < count; ++j)
    {
        const double t = j == count - 1 ? t_hi : t_lo + (t_hi - t_lo) * j / (count - 1);
        const auto st = counterexample_solution(t, p);
        out.push_back({t, counterexample_force(t, p), st.x, st.v, st.n});
    }
    return out;
}

} // namespace reflectsim
