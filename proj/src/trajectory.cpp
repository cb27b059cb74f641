#include "reflectsim/trajectory.hpp"

#include <algorithm>

namespace reflectsim
{

const char* to_string(Mode m) { return m == Mode::free ? "free" : "sliding"; }

const char* to_string(EventKind k)
{
    switch (k)
    {
    case EventKind::bounce: return "bounce";
    case EventKind::graze: return "graze";
    case EventKind::slide_start: return "slide_start";
    case EventKind::slide_end: return "slide_end";
    case EventKind::zeno_abort: return "zeno_abort";
    }
    return "unknown";
}

Mode parse_mode(const std::string& s)
{
    if (s == "free") return Mode::free;
    if (s == "sliding") return Mode::sliding;
    throw InputError("unknown mode '" + s + "'");
}

EventKind parse_event_kind(const std::string& s)
{
    for (auto k : {EventKind::bounce, EventKind::graze, EventKind::slide_start, EventKind::slide_end,
                   EventKind::zeno_abort})
        if (s == to_string(k)) return k;
    throw InputError("unknown event kind '" + s + "'");
}

SystemState Trajectory::state_at(double t, bool right) const
{
    if (samples.empty()) throw InputError("trajectory has no samples");
    if (t < samples.front().t) return samples.front();
    if (t > samples.back().t) return samples.back();
    auto cmp = [](const SystemState& s, double tt) { return s.t < tt; };
    // First sample with time >= t.
    auto it = std::lower_bound(samples.begin(), samples.end(), t, cmp);
    if (it->t == t)
    {
        if (!right) return *it;
        auto last = it;
        while (last + 1 != samples.end() && (last + 1)->t == t)
            ++last;
        return *last;
    }
    return interpolate(*(it - 1), *it, t);
}

SystemState interpolate(const SystemState& a, const SystemState& b, double t)
{
    // Cubic Hermite in position, its derivative for the velocity.
    const double h = b.t - a.t;
    const double u = (t - a.t) / h;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    const double d00 = (6 * u2 - 6 * u) / h, d10 = 3 * u2 - 4 * u + 1, d01 = (-6 * u2 + 6 * u) / h, d11 = 3 * u2 - 2 * u;
    SystemState s;
    s.t = t;
    s.X = h00 * a.X + h * h10 * a.V + h01 * b.X + h * h11 * b.V;
    s.V = d00 * a.X + d10 * a.V + d01 * b.X + d11 * b.V;
    s.modes = a.modes;
    return s;
}

} // namespace reflectsim
