#include "reflectsim/penalty_solver.hpp"
#include "reflectsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "reflectsim/analysis.hpp"
#include "reflectsim/integrator.hpp"

namespace reflectsim
{

Vec penalty_force(const Domain& dom, const Vec& x, double k) { return -k * d_grad_d(dom, x); }

double speed_bound(const ForceField& ff, const SystemState& initial, double T)
{
    double vmax = 0.0;
    for (int i = 0; i < initial.n_particles(); ++i)
        vmax = std::max(vmax, initial.V.col(i).norm());
    const double fmax = ff.sup_norm_bound().value_or(config_norm(ff.evaluate(initial.t, initial.X)));
    return vmax + fmax * (T - initial.t);
}

double k_min(const Domain& dom, const ForceField& ff, const SystemState& initial, double T)
{
    const double s = speed_bound(ff, initial, T);
    const double eps = dom.tube_radius();
    return 4.0 * s * s / (eps * eps);
}

namespace
{

class PenaltyIntegration
{
  public:
    PenaltyIntegration(const Domain& dom, const ForceField& ff, const SystemState& initial, double T, double k,
                       const PenaltyOptions& opts)
        : dom_(dom)
        , ff_(ff)
        , opts_(opts)
        , T_(T)
        , k_(k)
        , n_(initial.n_particles())
        , m_(initial.dim())
        , h_cap_(2.0 * std::numbers::pi / (20.0 * std::sqrt(k)))
        , integ_([this](double t, const Vec& y, Vec& dy) { rhs(t, y, dy); },
                 IntegratorOptions{opts.rtol, opts.atol, 2.0 * std::numbers::pi / (20.0 * std::sqrt(k))})
    {
        run_.k = k;
        run_.rho_samples.resize(n_);
        auto& tr = run_.trajectory;
        tr.n_particles = n_;
        tr.dim = m_;
        tr.t_begin = initial.t;
        tr.t_end = T;
        tr.has_event_log = false;

        y_.resize(2 * n_ * m_);
        for (int i = 0; i < n_; ++i)
        {
            y_.segment(i * m_, m_) = initial.X.col(i);
            y_.segment(n_ * m_ + i * m_, m_) = initial.V.col(i);
        }
        open_.assign(n_, -1);
    }

    PenaltyRun run()
    {
        auto& tr = run_.trajectory;
        double t = tr.t_begin;
        tr.samples.push_back(state(t, y_));
        integ_.reset(t, y_);
        std::size_t grid_index = 1;
        int retries = 0;

        while (t < T_)
        {
            DenseSegment seg;
            try
            {
                seg = integ_.step(T_, h_cap_);
            }
            catch (const TubeViolation&)
            {
                fail_or_retry(retries);
                continue;
            }
            catch (const DomainQueryError&)
            {
                fail_or_retry(retries);
                continue;
            }
            catch (const StiffnessError&)
            {
                // shrinking after a tube exit ran into the step floor: the
                // path itself leaves the tube
                if (retries == 0) throw;
                retries = opts_.max_retries;
                fail_or_retry(retries);
            }
            retries = 0;
            ++run_.steps;

            std::vector<double> extra = track(seg);
            for (;;)
            {
                const double tg = std::min(tr.t_begin + static_cast<double>(grid_index) * opts_.sample_dt, T_);
                if (tg > seg.t1()) break;
                extra.push_back(tg);
                if (tg >= T_) break;
                ++grid_index;
            }
            std::sort(extra.begin(), extra.end());
            for (double ts : extra)
            {
                if (ts <= tr.samples.back().t) continue;
                tr.samples.push_back(state(ts, seg(ts)));
            }
            t = seg.t1();
        }

        for (int i = 0; i < n_; ++i)
        {
            if (open_[i] < 0) continue;
            Excursion& e = run_.excursions[open_[i]];
            e.b = T_;
            e.complete = false;
        }
        tr.t_reached = T_;
        std::stable_sort(run_.excursions.begin(), run_.excursions.end(),
                         [](const Excursion& a, const Excursion& b) { return a.a < b.a; });
        return std::move(run_);
    }

  private:
    void rhs(double t, const Vec& y, Vec& dy)
    {
        const Configuration X = Eigen::Map<const Configuration>(y.data(), m_, n_);
        const Configuration F = ff_.evaluate(t, X);
        dy.head(n_ * m_) = y.tail(n_ * m_);
        for (int i = 0; i < n_; ++i)
            dy.segment(n_ * m_ + i * m_, m_) = F.col(i) + penalty_force(dom_, X.col(i), k_);
    }

    void fail_or_retry(int& retries)
    {
        if (++retries > opts_.max_retries)
        {
            throw InvalidRunError("penalty run left the tube near t = " + std::to_string(integ_.t()) +
                                      " (k = " + std::to_string(k_) + " is too small)",
                                  std::max(run_.max_penetration, dom_.tube_radius()));
        }
        integ_.shrink_step(0.5);
    }

    SystemState state(double t, const Vec& y) const
    {
        SystemState s;
        s.t = t;
        s.X = Eigen::Map<const Configuration>(y.data(), m_, n_);
        s.V = Eigen::Map<const Configuration>(y.data() + n_ * m_, m_, n_);
        return s;
    }

    // d_s and its time derivative along particle i
    std::pair<double, double> probe(const DenseSegment& seg, int i, double s) const
    {
        const Vec y = seg(s);
        const Vec x = y.segment(i * m_, m_);
        return {dom_.signed_distance(x), dom_.gradient(x).dot(y.segment(n_ * m_ + i * m_, m_))};
    }

    double bisect(const DenseSegment& seg, int i, double lo, double hi, bool on_speed) const
    {
        // sign at lo differs from sign at hi; returns the end on the "positive" side of lo
        auto val = [&](double s) {
            auto [g, gd] = probe(seg, i, s);
            return on_speed ? gd : g;
        };
        const bool lo_pos = val(lo) > 0.0;
        for (int it = 0; it < 200; ++it)
        {
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(hi))) break;
            const double mid = 0.5 * (lo + hi);
            ((val(mid) > 0.0) == lo_pos ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    void note_depth(int i, double depth)
    {
        run_.max_penetration = std::max(run_.max_penetration, depth);
        if (open_[i] >= 0)
        {
            Excursion& e = run_.excursions[open_[i]];
            e.max_depth = std::max(e.max_depth, depth);
        }
    }

    // Excursion bookkeeping over one step; returns extra sample times.
    std::vector<double> track(const DenseSegment& seg)
    {
        std::vector<double> extra;
        const int N = std::max(2, opts_.dense_points);
        const double t0 = seg.t0(), h = seg.t1() - seg.t0();
        for (int i = 0; i < n_; ++i)
        {
            auto& rho = run_.rho_samples[i];
            auto [g0, gd0] = probe(seg, i, t0);
            for (int j = 1; j <= N; ++j)
            {
                const double s0 = t0 + h * (j - 1) / N;
                const double s1 = j == N ? seg.t1() : t0 + h * j / N;
                auto [g1, gd1] = probe(seg, i, s1);
                double peak = -1.0;
                if (gd0 > 0.0 && gd1 <= 0.0 && std::max(g0, g1) > -dom_.tube_radius())
                    peak = bisect(seg, i, s0, s1, true);

                if (open_[i] < 0 && g1 > 0.0)
                {
                    const double a = g0 > 0.0 ? s0 : bisect(seg, i, s0, s1, false);
                    Excursion e;
                    e.particle = i;
                    e.a = a;
                    e.entry_speed = probe(seg, i, a).second;
                    open_[i] = static_cast<int>(run_.excursions.size());
                    run_.excursions.push_back(e);
                    rho.push_back({a, 0.0});
                    extra.push_back(a);
                }
                if (open_[i] >= 0 && peak > 0.0)
                {
                    const double depth = probe(seg, i, peak).first;
                    if (depth > 0.0 && peak > rho.back().t && peak < s1)
                    {
                        note_depth(i, depth);
                        rho.push_back({peak, k_ * depth});
                        extra.push_back(peak);
                    }
                }
                if (open_[i] >= 0 && g1 <= 0.0)
                {
                    const double b = bisect(seg, i, s0, s1, false);
                    Excursion& e = run_.excursions[open_[i]];
                    e.b = b;
                    e.exit_speed = probe(seg, i, b).second;
                    if (b > rho.back().t) rho.push_back({b, 0.0});
                    extra.push_back(b);
                    open_[i] = -1;
                }
                if (open_[i] >= 0 && g1 > 0.0)
                {
                    note_depth(i, g1);
                    if (s1 > rho.back().t) rho.push_back({s1, k_ * g1});
                }
                g0 = g1;
                gd0 = gd1;
            }
        }
        return extra;
    }

    const Domain& dom_;
    const ForceField& ff_;
    PenaltyOptions opts_;
    double T_;
    double k_;
    int n_, m_;
    double h_cap_;
    DormandPrince integ_;
    Vec y_;
    std::vector<int> open_; // index of the open excursion per particle
    PenaltyRun run_;
};

} // namespace

PenaltyRun simulate_penalty(const Domain& dom, const ForceField& ff, const SystemState& initial, double T, double k,
                            const PenaltyOptions& opts)
{
    if (!(k > 0.0) || !std::isfinite(k)) throw InputError("penalty stiffness must be positive and finite");
    if (!(T > initial.t)) throw InputError("horizon must exceed the initial time");
    if (initial.X.rows() != dom.dim() || initial.V.rows() != dom.dim() || initial.X.cols() != initial.V.cols())
        throw InputError("initial state shape does not match the domain");
    if (initial.X.cols() != ff.n_particles() || initial.X.rows() != ff.dim())
        throw InputError("initial state shape does not match the force field");
    if (!ff.horizon().contains(initial.t) || !ff.horizon().contains(T))
        throw HorizonError("simulation window exceeds the force horizon");
    if (!(opts.sample_dt > 0.0)) throw InputError("sample_dt must be positive");
    for (int i = 0; i < initial.n_particles(); ++i)
        if (dom.signed_distance(initial.X.col(i)) > 0.0)
            throw InputError("initial position of particle " + std::to_string(i) + " lies outside the domain");
    if (opts.enforce_k_min)
    {
        const double kmin = k_min(dom, ff, initial, T);
        if (k < kmin)
            throw InputError("k = " + std::to_string(k) + " is below k_min = " + std::to_string(kmin));
    }
    PenaltyIntegration integration(dom, ff, initial, T, k, opts);
    return integration.run();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw InputError("slope fit needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InputError("log-log fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw InputError("slope fit needs distinct abscissae");
    return (n * sxy - sx * sy) / den;
}

namespace
{

SweepRow sweep_row(const Domain& dom, const ForceField& ff, const SystemState& initial, double T, double k,
                   const Trajectory& reference, double reference_mass, const PenaltyOptions& opts)
{
    SweepRow row;
    row.k = k;
    try
    {
        const PenaltyRun run = simulate_penalty(dom, ff, initial, T, k, opts);
        row.valid = true;
        row.max_penetration = run.max_penetration;
        row.sup_gap = compare_trajectories(run.trajectory, reference, TrajectoryNorm::sup_pos);
        row.l1_vel_gap = compare_trajectories(run.trajectory, reference, TrajectoryNorm::l1_vel);
        row.rho_mass = extract_measure_penalty(run, initial.t, T);
        row.rho_mass_error = std::abs(row.rho_mass - reference_mass);
        row.excursion_count = run.excursions.size();
        for (const auto& e : run.excursions)
            if (e.complete) row.max_excursion_duration = std::max(row.max_excursion_duration, e.duration());
    }
    catch (const InvalidRunError& e)
    {
        row.valid = false;
        row.error = e.what();
        row.max_penetration = e.achieved_penetration;
    }
    catch (const Error& e)
    {
        row.valid = false;
        row.error = e.what();
    }
    return row;
}

} // namespace

SweepReport convergence_sweep(const Domain& dom, const ForceField& ff, const SystemState& initial, double T,
                              const std::vector<double>& ks, const Trajectory& reference, const PenaltyOptions& opts,
                              Execution exec)
{
    if (ks.empty()) throw InputError("k list is empty");
    for (std::size_t i = 1; i < ks.size(); ++i)
        if (!(ks[i] > ks[i - 1])) throw InputError("k list must be strictly increasing");
    if (opts.enforce_k_min)
    {
        const double kmin = k_min(dom, ff, initial, T);
        if (ks.front() < kmin) throw InputError("smallest k is below k_min = " + std::to_string(kmin));
    }
    if (std::abs(reference.t_end - T) > 1e-12 || std::abs(reference.t_begin - initial.t) > 1e-12)
        throw InputError("reference trajectory horizon does not match the sweep");

    double reference_mass = std::numeric_limits<double>::quiet_NaN();
    if (reference.has_event_log) reference_mass = extract_measure(reference).total_mass();

    SweepReport rep;
    rep.rows.resize(ks.size());
    const long n = static_cast<long>(ks.size());
    parallel_for(n, exec, [&](long i) { rep.rows[i] = sweep_row(dom, ff, initial, T, ks[i], reference, reference_mass, opts); });

    std::vector<double> kx, py;
    const SweepRow* prev = nullptr;
    const SweepRow* first = nullptr;
    const SweepRow* last = nullptr;
    for (auto& r : rep.rows)
    {
        if (!r.valid) continue;
        if (r.max_penetration > 0.0)
        {
            kx.push_back(r.k);
            py.push_back(r.max_penetration);
        }
        if (prev)
        {
            if (prev->max_penetration > 0.0 && r.max_penetration > 0.0)
                r.slope_contribution = std::log(r.max_penetration / prev->max_penetration) / std::log(r.k / prev->k);
            if (r.sup_gap > prev->sup_gap) rep.sup_gap_monotone = false;
        }
        if (!first) first = &r;
        last = &r;
        prev = &r;
    }
    if (kx.size() >= 2) rep.penetration_slope = loglog_slope(kx, py);
    rep.sup_gap_improved = first && last && first != last && last->sup_gap < first->sup_gap;
    return rep;
}

} // namespace reflectsim
