#include "reflectsim/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace reflectsim
{

GrazePolicy parse_graze_policy(const std::string& s)
{
    if (s == "stop") return GrazePolicy::stop;
    if (s == "stick") return GrazePolicy::stick;
    if (s == "reflect") return GrazePolicy::reflect;
    throw InputError("unknown graze policy '" + s + "'");
}

const char* to_string(GrazePolicy p)
{
    switch (p)
    {
    case GrazePolicy::stop: return "stop";
    case GrazePolicy::stick: return "stick";
    case GrazePolicy::reflect: return "reflect";
    }
    return "unknown";
}

Vec reflect(const Vec& v, const Vec& normal)
{
    if (v.size() != normal.size()) throw InputError("reflect: dimension mismatch");
    const double len = normal.norm();
    if (std::abs(len - 1.0) > 1e-6) throw GeometryError("reflect: normal is not a unit vector");
    const Vec nu = normal / len;
    return v - 2.0 * v.dot(nu) * nu;
}

namespace
{

struct Probe
{
    double g;  // d_s(x(t))
    double gd; // d/dt d_s(x(t))
};

Probe probe(const ParticlePath& path, const Domain& dom, double t)
{
    const auto [x, v] = path(t);
    return {dom.signed_distance(x), dom.gradient(x).dot(v)};
}

double root_of_distance(const ParticlePath& path, const Domain& dom, double lo, double hi, double time_tol)
{
    // Illinois regula falsi with a bisection fallback; g(lo) < 0 <= g(hi).
    double glo = probe(path, dom, lo).g;
    double ghi = probe(path, dom, hi).g;
    int side = 0;
    for (int it = 0; it < 200; ++it)
    {
        const double width = hi - lo;
        if (width <= std::max(time_tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))) break;
        double t = (glo * hi - ghi * lo) / (glo - ghi);
        if (!(t > lo && t < hi) || it % 4 == 3) t = 0.5 * (lo + hi);
        const double g = probe(path, dom, t).g;
        if (g >= 0.0)
        {
            hi = t;
            ghi = g;
            if (side == 1) glo *= 0.5;
            side = 1;
        }
        else
        {
            lo = t;
            glo = g;
            if (side == -1) ghi *= 0.5;
            side = -1;
        }
        if (g == 0.0) break;
    }
    return hi;
}

double root_of_normal_speed(const ParticlePath& path, const Domain& dom, double lo, double hi, double time_tol)
{
    // gd(lo) > 0 >= gd(hi)
    for (int it = 0; it < 200; ++it)
    {
        if (hi - lo <= std::max(time_tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi))) break;
        const double t = 0.5 * (lo + hi);
        if (probe(path, dom, t).gd > 0.0)
            lo = t;
        else
            hi = t;
    }
    return 0.5 * (lo + hi);
}

struct ScanOptions
{
    CrossingOptions base;
    bool just_contacted = false;
    double start_speed = 0.0;
};

std::optional<double> scan_contact(const ParticlePath& path, const Domain& dom, double ta, double tb,
                                   const ScanOptions& so, int scan_points)
{
    const double pos_tol = so.base.pos_tol;
    Probe p0 = probe(path, dom, ta);
    if (so.just_contacted)
        p0.gd = std::min(p0.gd, 0.0);
    else if (p0.g >= -pos_tol && p0.gd > so.start_speed)
        return ta;

    double s0 = ta;
    for (int j = 1; j <= scan_points; ++j)
    {
        const double s1 = j == scan_points ? tb : ta + (tb - ta) * j / scan_points;
        const Probe p1 = probe(path, dom, s1);
        if (p0.gd > 0.0 && p1.gd <= 0.0)
        {
            const double tm = root_of_normal_speed(path, dom, s0, s1, so.base.time_tol);
            const double gm = probe(path, dom, tm).g;
            if (gm > pos_tol)
            {
                if (p0.g < 0.0) return root_of_distance(path, dom, s0, tm, so.base.time_tol);
                return s0;
            }
            if (gm >= -pos_tol) return tm;
        }
        else if (p0.g < 0.0 && p1.g >= 0.0)
        {
            return root_of_distance(path, dom, s0, s1, so.base.time_tol);
        }
        s0 = s1;
        p0 = p1;
    }
    return std::nullopt;
}

} // namespace

std::optional<double> find_boundary_contact(const ParticlePath& path, const Domain& dom, double t_begin, double t_end,
                                            const CrossingOptions& opts)
{
    return scan_contact(path, dom, t_begin, t_end, ScanOptions{opts, false, 0.0}, std::max(1, opts.scan_points));
}

double locate_crossing(const ParticlePath& path, const Domain& dom, double t_begin, double t_end,
                       const CrossingOptions& opts)
{
    if (!(t_end > t_begin)) throw InputError("locate_crossing: empty segment");
    if (!(probe(path, dom, t_begin).g < 0.0)) throw BracketError("locate_crossing: segment does not start inside");
    int points = std::max(1, opts.scan_points);
    for (int halving = 0; halving <= 10; ++halving, points *= 2)
    {
        if (auto t = scan_contact(path, dom, t_begin, t_end, ScanOptions{opts, false, 0.0}, points)) return *t;
    }
    throw BracketError("locate_crossing: no boundary contact in [" + std::to_string(t_begin) + ", " +
                       std::to_string(t_end) + "]");
}

namespace
{

double raw_sliding_density(const Vec& x, const Vec& v, const Vec& force, const Domain& dom)
{
    const Vec nu = dom.gradient(x);
    return force.dot(nu) + v.dot(dom.hessian(x) * v);
}

} // namespace

double sliding_density(const Vec& x, const Vec& v, const Vec& force, const Domain& dom, double pos_tol,
                       double graze_tol)
{
    const double ds = dom.signed_distance(x);
    if (std::abs(ds) > pos_tol) throw ModeError("sliding_density: particle is not on the boundary");
    if (std::abs(v.dot(dom.gradient(x))) > graze_tol)
        throw ModeError("sliding_density: velocity has a normal component");
    return raw_sliding_density(x, v, force, dom);
}

// ---------------------------------------------------------------------------

namespace
{

class ExactRun
{
  public:
    ExactRun(const Domain& dom, const ForceField& ff, const SystemState& initial, double T, const SolverOptions& opts)
        : dom_(dom)
        , ff_(ff)
        , opts_(opts)
        , T_(T)
        , n_(initial.n_particles())
        , m_(initial.dim())
        , integ_([this](double t, const Vec& y, Vec& dy) { rhs(t, y, dy); },
                 IntegratorOptions{opts.rtol, opts.atol, opts.max_step})
    {
        validate(initial);
        t_ = initial.t;
        y_.resize(2 * n_ * m_);
        for (int i = 0; i < n_; ++i)
        {
            y_.segment(i * m_, m_) = initial.X.col(i);
            y_.segment(n_ * m_ + i * m_, m_) = initial.V.col(i);
        }
        modes_ = initial.modes.empty() ? std::vector<Mode>(n_, Mode::free) : initial.modes;
        just_contacted_.assign(n_, false);
        mode_since_.assign(n_, t_);

        double vmax = 0.0;
        for (int i = 0; i < n_; ++i)
            vmax = std::max(vmax, initial.V.col(i).norm());
        const double fmax = ff.sup_norm_bound().value_or(config_norm(ff.evaluate(t_, initial.X)));
        double char_speed = std::max(vmax, std::sqrt(fmax * dom.tube_radius()));
        if (!(char_speed > 0.0)) char_speed = 1.0;
        graze_tol_ = opts.graze_tol.value_or(1e-8 * char_speed);

        traj_.n_particles = n_;
        traj_.dim = m_;
        traj_.t_begin = t_;
        traj_.t_end = T;
        traj_.has_event_log = true;
    }

    Trajectory run()
    {
        next_grid_index_ = 1;
        push_sample(t_, y_);
        record_sliding_rho(t_, y_);
        handle_initial_sliding();
        integ_.reset(t_, y_);

        while (t_ < T_ && !stopped_)
        {
            const DenseSegment seg = integ_.step(T_, step_cap());
            const double t1 = seg.t1();

            struct Candidate
            {
                double t;
                int particle;
                bool detach;
            };
            std::vector<Candidate> found;
            for (int i = 0; i < n_; ++i)
            {
                const ParticlePath path = [&seg, this, i](double s) {
                    const Vec ys = seg(s);
                    return std::make_pair(Vec(ys.segment(i * m_, m_)), Vec(ys.segment(n_ * m_ + i * m_, m_)));
                };
                if (modes_[i] == Mode::free)
                {
                    ScanOptions so{{opts_.pos_tol, 1e-15, opts_.scan_points}, just_contacted_[i], graze_tol_};
                    if (auto tc = scan_contact(path, dom_, t_, t1, so, opts_.scan_points))
                        found.push_back({*tc, i, false});
                }
                else if (auto td = detach_time(seg, i))
                {
                    found.push_back({*td, i, true});
                }
            }

            if (found.empty())
            {
                emit_grid(seg, t1, true);
                t_ = t1;
                y_ = integ_.y();
                std::fill(just_contacted_.begin(), just_contacted_.end(), false);
                if (stabilize_sliding()) integ_.reset(t_, y_);
                continue;
            }

            double t_e = kInf;
            for (const auto& c : found)
                t_e = std::min(t_e, c.t);
            emit_grid(seg, t_e, false);
            Vec y_e = seg(t_e);
            push_sample(t_e, y_e);

            std::sort(found.begin(), found.end(),
                      [](const Candidate& a, const Candidate& b) { return a.particle < b.particle; });
            std::fill(just_contacted_.begin(), just_contacted_.end(), false);
            for (const auto& c : found)
            {
                if (c.t > t_e + opts_.time_tol || stopped_) continue;
                if (c.detach)
                    handle_detach(t_e, y_e, c.particle);
                else
                    handle_contact(t_e, y_e, c.particle);
                just_contacted_[c.particle] = true;
            }
            push_sample(t_e, y_e);
            record_sliding_rho(t_e, y_e);
            t_ = t_e;
            y_ = y_e;
            if (!stopped_) integ_.reset(t_, y_);
        }

        traj_.t_reached = t_;
        for (int i = 0; i < n_; ++i)
            traj_.mode_timeline.push_back({i, mode_since_[i], t_, modes_[i]});
        std::sort(traj_.mode_timeline.begin(), traj_.mode_timeline.end(),
                  [](const ModeInterval& a, const ModeInterval& b) {
                      return a.particle != b.particle ? a.particle < b.particle : a.t_begin < b.t_begin;
                  });
        return std::move(traj_);
    }

  private:
    Vec pos(const Vec& y, int i) const { return y.segment(i * m_, m_); }
    Vec vel(const Vec& y, int i) const { return y.segment(n_ * m_ + i * m_, m_); }

    Configuration positions(const Vec& y) const
    {
        return Eigen::Map<const Configuration>(y.data(), m_, n_);
    }
    Configuration velocities(const Vec& y) const
    {
        return Eigen::Map<const Configuration>(y.data() + n_ * m_, m_, n_);
    }

    void validate(const SystemState& s) const
    {
        if (s.X.rows() != dom_.dim() || s.V.rows() != dom_.dim() || s.X.cols() != s.V.cols())
            throw InputError("initial state shape does not match the domain");
        if (s.X.cols() != ff_.n_particles() || s.X.rows() != ff_.dim())
            throw InputError("initial state shape does not match the force field");
        if (!s.modes.empty() && static_cast<int>(s.modes.size()) != s.X.cols())
            throw InputError("initial modes must list every particle");
        if (!(T_ > s.t)) throw InputError("horizon must exceed the initial time");
        if (!ff_.horizon().contains(s.t) || !ff_.horizon().contains(T_))
            throw HorizonError("simulation window exceeds the force horizon");
        for (int i = 0; i < s.X.cols(); ++i)
        {
            const double ds = dom_.signed_distance(s.X.col(i));
            if (ds > opts_.pos_tol)
                throw InputError("initial position of particle " + std::to_string(i) + " lies outside the domain");
            const bool sliding = !s.modes.empty() && s.modes[i] == Mode::sliding;
            if (sliding && std::abs(ds) > opts_.pos_tol)
                throw ModeError("particle " + std::to_string(i) + " declared sliding but not on the boundary");
        }
    }

    void rhs(double t, const Vec& y, Vec& dy)
    {
        const Configuration X = positions(y);
        const Configuration F = ff_.evaluate(t, X);
        dy.head(n_ * m_) = y.tail(n_ * m_);
        for (int i = 0; i < n_; ++i)
        {
            Vec a = F.col(i);
            if (modes_[i] == Mode::sliding)
            {
                const Vec x = X.col(i);
                const Vec v = vel(y, i);
                const Vec nu = dom_.gradient(x);
                const double rho = F.col(i).dot(nu) + v.dot(dom_.hessian(x) * v);
                a -= rho * nu;
            }
            dy.segment(n_ * m_ + i * m_, m_) = a;
        }
    }

    double step_cap() const
    {
        double vmax = 0.0;
        for (int i = 0; i < n_; ++i)
            vmax = std::max(vmax, vel(y_, i).norm());
        const Configuration F = ff_.evaluate(t_, positions(y_));
        const double amax = config_norm(F);
        const double tube = dom_.tube_radius();
        const double scale = std::max({vmax, std::sqrt(0.2 * amax * tube), 1e-300});
        return std::max(0.1 * tube / scale, 1e-12);
    }

    std::optional<double> detach_time(const DenseSegment& seg, int i) const
    {
        auto rho_at = [&](double s) {
            const Vec ys = seg(s);
            const Configuration F = ff_.evaluate(s, positions(ys));
            return raw_sliding_density(pos(ys, i), vel(ys, i), F.col(i), dom_);
        };
        double s0 = seg.t0();
        double r0 = rho_at(s0);
        if (r0 < 0.0) return s0;
        const int N = opts_.scan_points;
        for (int j = 1; j <= N; ++j)
        {
            const double s1 = j == N ? seg.t1() : seg.t0() + (seg.t1() - seg.t0()) * j / N;
            const double r1 = rho_at(s1);
            if (r1 < 0.0)
            {
                double lo = s0, hi = s1;
                for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it)
                {
                    const double mid = 0.5 * (lo + hi);
                    (rho_at(mid) >= 0.0 ? lo : hi) = mid;
                }
                return hi;
            }
            s0 = s1;
            r0 = r1;
        }
        return std::nullopt;
    }

    void push_sample(double t, const Vec& y)
    {
        traj_.samples.push_back(SystemState{t, positions(y), velocities(y), modes_});
    }

    double grid_time(std::size_t j) const
    {
        return std::min(traj_.t_begin + static_cast<double>(j) * opts_.sample_dt, T_);
    }

    // Emits grid samples up to `t_stop` (inclusive when `inclusive`).
    void emit_grid(const DenseSegment& seg, double t_stop, bool inclusive)
    {
        for (;;)
        {
            const double tg = grid_time(next_grid_index_);
            if (tg > t_stop || (!inclusive && tg >= t_stop)) break;
            if (tg <= traj_.samples.back().t)
            {
                if (tg >= T_) break;
                ++next_grid_index_;
                continue;
            }
            const Vec y = seg(tg);
            push_sample(tg, y);
            record_sliding_rho(tg, y);
            if (tg >= T_) break;
            ++next_grid_index_;
        }
    }

    void record_sliding_rho(double t, const Vec& y)
    {
        bool any = false;
        for (int i = 0; i < n_; ++i)
            any = any || modes_[i] == Mode::sliding;
        if (!any) return;
        const Configuration F = ff_.evaluate(t, positions(y));
        for (int i = 0; i < n_; ++i)
        {
            if (modes_[i] != Mode::sliding) continue;
            const Vec x = pos(y, i);
            traj_.sliding_rho.push_back({t, i, raw_sliding_density(x, vel(y, i), F.col(i), dom_), dom_.gradient(x)});
        }
    }

    bool stabilize_sliding()
    {
        bool changed = false;
        for (int i = 0; i < n_; ++i)
        {
            if (modes_[i] != Mode::sliding) continue;
            const Vec x = project_to_boundary(dom_, pos(y_, i));
            const Vec nu = dom_.gradient(x);
            Vec v = vel(y_, i);
            v -= v.dot(nu) * nu;
            y_.segment(i * m_, m_) = x;
            y_.segment(n_ * m_ + i * m_, m_) = v;
            changed = true;
        }
        return changed;
    }

    void set_mode(int i, Mode m, double t)
    {
        if (modes_[i] == m) return;
        traj_.mode_timeline.push_back({i, mode_since_[i], t, modes_[i]});
        modes_[i] = m;
        mode_since_[i] = t;
    }

    void add_event(Event e)
    {
        const double t = e.t_event;
        traj_.events.push_back(std::move(e));
        recent_.push_back(t);
        while (!recent_.empty() && recent_.front() < t - opts_.time_tol)
            recent_.pop_front();
        if (static_cast<int>(recent_.size()) > opts_.max_events_per_window ||
            traj_.events.size() > opts_.max_events)
        {
            const Event& last = traj_.events.back();
            traj_.events.push_back(Event{t, last.particle, EventKind::zeno_abort, last.v_plus, last.v_plus,
                                         last.normal, 0.0});
            traj_.termination = "zeno_abort";
            stopped_ = true;
        }
    }

    void handle_initial_sliding()
    {
        const Configuration F = ff_.evaluate(t_, positions(y_));
        for (int i = 0; i < n_; ++i)
        {
            if (modes_[i] != Mode::sliding) continue;
            const Vec x = project_to_boundary(dom_, pos(y_, i));
            const Vec nu = dom_.gradient(x);
            Vec v = vel(y_, i);
            if (std::abs(v.dot(nu)) > graze_tol_)
                throw ModeError("particle " + std::to_string(i) + " declared sliding with a normal velocity");
            v -= v.dot(nu) * nu;
            y_.segment(i * m_, m_) = x;
            y_.segment(n_ * m_ + i * m_, m_) = v;
            add_event({t_, i, EventKind::slide_start, v, v, nu, 0.0});
            if (raw_sliding_density(x, v, F.col(i), dom_) < 0.0)
            {
                set_mode(i, Mode::free, t_);
                add_event({t_, i, EventKind::slide_end, v, v, nu, 0.0});
            }
        }
    }

    void handle_contact(double t, Vec& y, int i)
    {
        const Vec x_raw = pos(y, i);
        const Vec x = project_to_boundary(dom_, x_raw);
        const Vec nu = dom_.gradient(x);
        const Vec v_minus = vel(y, i);
        const double vn = v_minus.dot(nu);
        y.segment(i * m_, m_) = x;

        if (vn > graze_tol_)
        {
            const Vec v_plus = reflect(v_minus, nu);
            y.segment(n_ * m_ + i * m_, m_) = v_plus;
            add_event({t, i, EventKind::bounce, v_minus, v_plus, nu, 2.0 * vn});
            return;
        }

        switch (opts_.graze_policy)
        {
        case GrazePolicy::stop:
            add_event({t, i, EventKind::graze, v_minus, v_minus, nu, 0.0});
            traj_.termination = "graze_stop";
            stopped_ = true;
            return;
        case GrazePolicy::reflect: {
            const Vec v_plus = reflect(v_minus, nu);
            y.segment(n_ * m_ + i * m_, m_) = v_plus;
            add_event({t, i, EventKind::graze, v_minus, v_plus, nu, 2.0 * std::max(vn, 0.0)});
            return;
        }
        case GrazePolicy::stick: {
            const Vec v_t = v_minus - vn * nu;
            y.segment(n_ * m_ + i * m_, m_) = v_t;
            add_event({t, i, EventKind::graze, v_minus, v_t, nu, 0.0});
            const Configuration F = ff_.evaluate(t, positions(y));
            if (raw_sliding_density(x, v_t, F.col(i), dom_) >= 0.0)
            {
                set_mode(i, Mode::sliding, t);
                add_event({t, i, EventKind::slide_start, v_t, v_t, nu, 0.0});
            }
            return;
        }
        }
    }

    void handle_detach(double t, Vec& y, int i)
    {
        const Vec x = pos(y, i);
        const Vec v = vel(y, i);
        set_mode(i, Mode::free, t);
        add_event({t, i, EventKind::slide_end, v, v, dom_.gradient(x), 0.0});
    }

    const Domain& dom_;
    const ForceField& ff_;
    SolverOptions opts_;
    double T_;
    int n_, m_;
    DormandPrince integ_;
    double t_ = 0.0;
    Vec y_;
    std::vector<Mode> modes_;
    std::vector<bool> just_contacted_;
    std::vector<double> mode_since_;
    double graze_tol_ = 0.0;
    std::size_t next_grid_index_ = 1;
    std::deque<double> recent_;
    bool stopped_ = false;
    Trajectory traj_;
};

} // namespace

Trajectory simulate_exact(const Domain& dom, const ForceField& ff, const SystemState& initial, double T,
                          const SolverOptions& opts)
{
    if (!(opts.sample_dt > 0.0)) throw InputError("sample_dt must be positive");
    ExactRun run(dom, ff, initial, T, opts);
    return run.run();
}

} // namespace reflectsim
