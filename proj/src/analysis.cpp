#include "reflectsim/analysis.hpp"
#include "reflectsim/parallel.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "reflectsim/exact_solver.hpp"

namespace reflectsim
{

namespace
{

using Gauss = boost::math::quadrature::gauss<double, 7>;

bool is_contact(EventKind k) { return k == EventKind::bounce || k == EventKind::graze; }

double trapezoid(const std::vector<std::pair<double, double>>& pts, double lo, double hi)
{
    // piecewise-linear through pts (sorted by t), integrated over [lo, hi]
    double sum = 0.0;
    for (std::size_t j = 1; j < pts.size(); ++j)
    {
        const auto [t0, f0] = pts[j - 1];
        const auto [t1, f1] = pts[j];
        const double a = std::max(t0, lo), b = std::min(t1, hi);
        if (!(b > a) || !(t1 > t0)) continue;
        auto at = [&](double t) { return f0 + (f1 - f0) * (t - t0) / (t1 - t0); };
        sum += 0.5 * (b - a) * (at(a) + at(b));
    }
    return sum;
}

// Density linear between samples times a smooth weight, Gauss on each piece.
template <class W>
double weighted_density(const std::vector<DensityPoint>& d, int ax, double lo, double hi, W&& w)
{
    double sum = 0.0;
    for (std::size_t j = 1; j < d.size(); ++j)
    {
        const double t0 = d[j - 1].t, t1 = d[j].t;
        const double f0 = d[j - 1].value * d[j - 1].normal[ax], f1 = d[j].value * d[j].normal[ax];
        const double a = std::max(t0, lo), b = std::min(t1, hi);
        if (!(b > a) || !(t1 > t0)) continue;
        sum += Gauss::integrate([&](double t) { return (f0 + (f1 - f0) * (t - t0) / (t1 - t0)) * w(t); }, a, b);
    }
    return sum;
}

// Calls f(t, state) at Gauss nodes of every sample interval meeting [lo, hi];
// f returns a scalar, the sum of the weighted integrals is returned.
template <class F>
double integrate_samples(const Trajectory& traj, double lo, double hi, F&& f)
{
    const auto& s = traj.samples;
    double total = 0.0;
    auto first = std::lower_bound(s.begin(), s.end(), lo, [](const SystemState& x, double t) { return x.t < t; });
    std::size_t j = first == s.begin() ? 1 : static_cast<std::size_t>(first - s.begin());
    for (; j < s.size(); ++j)
    {
        const SystemState& a = s[j - 1];
        const SystemState& b = s[j];
        if (a.t >= hi) break;
        const double l = std::max(a.t, lo), r = std::min(b.t, hi);
        if (!(r > l) || !(b.t > a.t)) continue;
        total += Gauss::integrate([&](double t) { return f(t, interpolate(a, b, t)); }, l, r);
    }
    return total;
}

} // namespace

double ParticleMeasure::atom_mass() const
{
    double m = 0.0;
    for (const auto& a : atoms)
        m += a.mass;
    return m;
}

double ParticleMeasure::density_mass() const
{
    std::vector<std::pair<double, double>> pts;
    for (const auto& d : density)
        pts.emplace_back(d.t, d.value);
    double m = 0.0;
    for (const auto& [lo, hi] : sliding_intervals)
        m += trapezoid(pts, lo, hi);
    return m;
}

double BoundaryMeasure::total_mass() const
{
    double m = 0.0;
    for (const auto& p : particles)
        m += p.atom_mass() + p.density_mass();
    return m;
}

BoundaryMeasure extract_measure(const Trajectory& traj)
{
    if (!traj.has_event_log)
        throw InputError("trajectory has no event log; use extract_measure_penalty for penalty runs");
    BoundaryMeasure bm;
    bm.particles.resize(traj.n_particles);
    for (const auto& e : traj.events)
    {
        if (is_contact(e.kind) && e.atom_mass > 0.0) bm.particles[e.particle].atoms.push_back({e.t_event, e.atom_mass, e.normal});
    }
    for (const auto& iv : traj.mode_timeline)
    {
        if (iv.mode == Mode::sliding && iv.t_end >= iv.t_begin)
            bm.particles[iv.particle].sliding_intervals.emplace_back(iv.t_begin, iv.t_end);
    }
    for (const auto& d : traj.sliding_rho)
        bm.particles[d.particle].density.push_back({d.t, d.rho, d.normal});
    return bm;
}

double extract_measure_penalty(const PenaltyRun& run, double s1, double s2, int particle)
{
    if (!(s2 > s1)) throw InputError("measure window must have s1 < s2");
    if (particle >= static_cast<int>(run.rho_samples.size())) throw InputError("particle index out of range");
    double total = 0.0;
    for (int i = 0; i < static_cast<int>(run.rho_samples.size()); ++i)
    {
        if (particle >= 0 && i != particle) continue;
        std::vector<std::pair<double, double>> pts;
        pts.reserve(run.rho_samples[i].size());
        for (const auto& r : run.rho_samples[i])
            pts.emplace_back(r.t, r.rho);
        total += trapezoid(pts, s1, s2);
    }
    return total;
}

double EnergyReport::max_abs_residual() const
{
    double m = 0.0;
    for (const auto& r : rows)
        m = std::max(m, std::abs(r.residual));
    return m;
}

EnergyReport energy_report(const Trajectory& traj, const ForceField& ff,
                           const std::vector<std::pair<double, double>>& windows)
{
    EnergyReport rep;
    const int n = traj.n_particles;
    for (const auto& [s1, s2] : windows)
    {
        if (!(s2 > s1)) throw InputError("energy window must have s1 < s2");
        if (s1 < traj.t_begin - 1e-12 || s2 > traj.t_reached + 1e-12)
            throw InputError("energy window lies outside the trajectory");
        const SystemState a = traj.state_at(s1, true);
        const SystemState b = traj.state_at(s2, true);
        for (int i = 0; i < n; ++i)
        {
            EnergyRow row;
            row.particle = i;
            row.s1 = s1;
            row.s2 = s2;
            row.kinetic_gap = 0.5 * b.V.col(i).squaredNorm() - 0.5 * a.V.col(i).squaredNorm();
            row.work = integrate_samples(traj, s1, s2, [&](double t, const SystemState& st) {
                return ff.evaluate(t, st.X).col(i).dot(st.V.col(i));
            });
            row.residual = row.kinetic_gap - row.work;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

double TestFunction::value(double t) const
{
    const double s = (t - center) / width;
    if (std::abs(s) >= 1.0) return 0.0;
    return scale * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double TestFunction::derivative(double t) const
{
    const double s = (t - center) / width;
    if (std::abs(s) >= 1.0) return 0.0;
    const double q = 1.0 - s * s;
    return scale * std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) / width;
}

std::vector<TestFunction> make_test_functions(const Trajectory& traj, int count)
{
    if (count < 1) throw InputError("test function family needs at least one member");
    const double t0 = traj.t_begin, t1 = traj.t_reached;
    const double span = t1 - t0;
    if (!(span > 0.0)) throw InputError("trajectory has zero length");

    std::vector<double> centers;
    std::vector<double> ev;
    for (const auto& e : traj.events)
        if (ev.empty() || e.t_event - ev.back() > 1e-9) ev.push_back(e.t_event);
    centers.insert(centers.end(), ev.begin(), ev.end());
    for (std::size_t j = 1; j < ev.size(); ++j)
        centers.push_back(0.5 * (ev[j - 1] + ev[j]));
    for (int j = 0; j < count; ++j)
        centers.push_back(t0 + span * (j + 0.5) / count);

    std::vector<TestFunction> fns;
    const double w_default = span / 10.0;
    for (double c : centers)
    {
        if (static_cast<int>(fns.size()) >= count) break;
        const double w = std::min({w_default, 0.999 * (c - t0), 0.999 * (t1 - c)});
        if (w < 1e-3 * span) continue;
        TestFunction f;
        f.center = c;
        f.width = w;
        f.axis = static_cast<int>(fns.size()) % traj.dim;
        fns.push_back(f);
    }
    return fns;
}

WeakFormTerms weak_form_terms(const Trajectory& traj, const BoundaryMeasure& measure, const ForceField& ff,
                              int particle, const TestFunction& psi)
{
    if (psi.lo() < traj.t_begin || psi.hi() > traj.t_reached)
        throw InputError("test function support exceeds the trajectory interval");
    if (particle < 0 || particle >= traj.n_particles) throw InputError("particle index out of range");
    if (psi.axis < 0 || psi.axis >= traj.dim) throw InputError("test function axis out of range");
    const int ax = psi.axis;
    WeakFormTerms w;
    w.velocity_term = integrate_samples(traj, psi.lo(), psi.hi(), [&](double t, const SystemState& st) {
        return st.V(ax, particle) * psi.derivative(t);
    });
    w.force_term = integrate_samples(traj, psi.lo(), psi.hi(), [&](double t, const SystemState& st) {
        return ff.evaluate(t, st.X)(ax, particle) * psi.value(t);
    });
    if (particle < static_cast<int>(measure.particles.size()))
    {
        const ParticleMeasure& pm = measure.particles[particle];
        for (const auto& a : pm.atoms)
            w.measure_term += a.mass * a.normal[ax] * psi.value(a.t);
        for (const auto& [lo, hi] : pm.sliding_intervals)
            w.measure_term += weighted_density(pm.density, ax, std::max(lo, psi.lo()), std::min(hi, psi.hi()),
                                               [&](double t) { return psi.value(t); });
    }
    return w;
}

WeakFormReport weak_form_residual(const Trajectory& traj, const BoundaryMeasure& measure, const ForceField& ff,
                                  const std::vector<TestFunction>& fns, Execution exec)
{
    if (fns.empty()) throw InputError("test function family is empty");
    for (const auto& f : fns)
        if (f.lo() < traj.t_begin || f.hi() > traj.t_reached)
            throw InputError("test function support exceeds the trajectory interval");
    WeakFormReport rep;
    rep.residuals.assign(fns.size(), 0.0);
    std::vector<int> worst(fns.size(), 0);
    const long nf = static_cast<long>(fns.size());
    auto body = [&](long j) {
        for (int i = 0; i < traj.n_particles; ++i)
        {
            const double r = std::abs(weak_form_terms(traj, measure, ff, i, fns[j]).residual());
            if (r > rep.residuals[j] || i == 0)
            {
                rep.residuals[j] = r;
                worst[j] = i;
            }
        }
    };
    parallel_for(nf, exec, body);
    for (long j = 0; j < nf; ++j)
    {
        if (rep.worst_function < 0 || rep.residuals[j] > rep.max_residual)
        {
            rep.max_residual = rep.residuals[j];
            rep.worst_function = static_cast<int>(j);
            rep.worst_particle = worst[j];
        }
    }
    return rep;
}

std::optional<double> first_grazing_time(const Trajectory& traj)
{
    if (!traj.has_event_log) throw InputError("trajectory has no event log");
    std::optional<double> t0;
    for (const auto& e : traj.events)
    {
        if (e.kind != EventKind::graze && e.kind != EventKind::slide_start) continue;
        if (!t0 || e.t_event < *t0) t0 = e.t_event;
    }
    return t0;
}

TrajectoryNorm parse_norm(const std::string& s)
{
    if (s == "sup_pos") return TrajectoryNorm::sup_pos;
    if (s == "l1_vel") return TrajectoryNorm::l1_vel;
    throw InputError("unknown trajectory norm '" + s + "'");
}

double compare_trajectories(const Trajectory& a, const Trajectory& b, TrajectoryNorm norm,
                            std::optional<std::pair<double, double>> window)
{
    if (a.n_particles != b.n_particles || a.dim != b.dim) throw InputError("trajectories differ in shape");
    if (std::abs(a.t_begin - b.t_begin) > 1e-12 || std::abs(a.t_end - b.t_end) > 1e-12)
        throw InputError("trajectories have different horizons");
    if (a.samples.empty() || b.samples.empty()) throw InputError("trajectory has no samples");
    double lo = a.t_begin;
    double hi = std::min(a.t_reached, b.t_reached);
    if (window)
    {
        if (window->first < lo - 1e-12 || window->second > hi + 1e-12 || !(window->second > window->first))
            throw InputError("comparison window lies outside the common interval");
        lo = window->first;
        hi = window->second;
    }

    std::vector<double> grid{lo, hi};
    for (const auto* tr : {&a, &b})
        for (const auto& s : tr->samples)
            if (s.t > lo && s.t < hi) grid.push_back(s.t);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    auto gap = [&](double t, bool right, bool pos) {
        const SystemState sa = a.state_at(t, right);
        const SystemState sb = b.state_at(t, right);
        const Configuration d = pos ? Configuration(sa.X - sb.X) : Configuration(sa.V - sb.V);
        return config_norm(d);
    };

    double out = 0.0;
    if (norm == TrajectoryNorm::sup_pos)
    {
        for (double t : grid)
            out = std::max(out, gap(t, true, true));
        return out;
    }
    for (std::size_t j = 1; j < grid.size(); ++j)
        out += 0.5 * (grid[j] - grid[j - 1]) * (gap(grid[j - 1], true, false) + gap(grid[j], false, false));
    return out;
}

EventAudit audit_events(const Trajectory& traj, const Domain& dom)
{
    EventAudit au;
    bool any_contact = false;
    for (const auto& e : traj.events)
    {
        if (e.kind == EventKind::zeno_abort) continue;
        ++au.events;
        au.max_speed_jump = std::max(au.max_speed_jump, std::abs(e.v_plus.norm() - e.v_minus.norm()));
        if (!is_contact(e.kind)) continue;
        const double in = e.v_minus.dot(e.normal);
        const double out = e.v_plus.dot(e.normal);
        au.min_incoming_normal = any_contact ? std::min(au.min_incoming_normal, in) : in;
        au.max_outgoing_normal = any_contact ? std::max(au.max_outgoing_normal, out) : out;
        any_contact = true;
        if (e.kind == EventKind::bounce)
            au.max_reflection_error =
                std::max(au.max_reflection_error, (e.v_plus - reflect(e.v_minus, e.normal)).norm());
    }
    for (const auto& s : traj.samples)
        for (int i = 0; i < s.n_particles(); ++i)
            au.max_confinement = std::max(au.max_confinement, dom.signed_distance(s.X.col(i)));
    return au;
}

double measure_support_gap(const Trajectory& traj, const BoundaryMeasure& measure)
{
    double worst = 0.0;
    for (int i = 0; i < static_cast<int>(measure.particles.size()); ++i)
    {
        std::vector<double> contacts;
        for (const auto& e : traj.events)
            if (e.particle == i && e.kind != EventKind::zeno_abort) contacts.push_back(e.t_event);
        const auto& pm = measure.particles[i];
        auto dist_to_contact = [&](double t) {
            double d = kInf;
            for (double c : contacts)
                d = std::min(d, std::abs(t - c));
            for (const auto& [lo, hi] : pm.sliding_intervals)
                d = std::min(d, t < lo ? lo - t : (t > hi ? t - hi : 0.0));
            return d;
        };
        for (const auto& a : pm.atoms)
            worst = std::max(worst, dist_to_contact(a.t));
        for (const auto& d : pm.density)
            worst = std::max(worst, dist_to_contact(d.t));
    }
    return worst;
}

} // namespace reflectsim
