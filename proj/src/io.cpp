#include "reflectsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace reflectsim
{

namespace fs = std::filesystem;

namespace
{

[[noreturn]] void bad(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

void allow_keys(const json& o, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!o.is_object()) bad(where, "expected an object");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : o.items())
        if (!ok.count(k)) bad(where, "unknown key '" + k + "'");
}

const json& need(const json& o, const char* key, const std::string& where)
{
    if (!o.contains(key)) bad(where, std::string("missing key '") + key + "'");
    return o.at(key);
}

double number(const json& v, const std::string& where)
{
    if (!v.is_number()) bad(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(where, "not finite");
    return x;
}

double number(const json& o, const char* key, const std::string& where)
{
    return number(need(o, key, where), where + "." + key);
}

double number_or(const json& o, const char* key, const std::string& where, double fallback)
{
    return o.contains(key) ? number(o.at(key), where + "." + key) : fallback;
}

double positive(const json& o, const char* key, const std::string& where, double fallback)
{
    const double x = number_or(o, key, where, fallback);
    if (!(x > 0.0)) bad(where + "." + key, "must be positive");
    return x;
}

int integer_or(const json& o, const char* key, const std::string& where, int fallback)
{
    if (!o.contains(key)) return fallback;
    const json& v = o.at(key);
    if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
    return v.get<int>();
}

std::string string_or(const json& o, const char* key, const std::string& where, std::string fallback)
{
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_string()) bad(where + "." + key, "expected a string");
    return o.at(key).get<std::string>();
}

Vec vector_of(const json& v, const std::string& where)
{
    if (v.is_number()) return Vec::Constant(1, number(v, where));
    if (!v.is_array() || v.empty()) bad(where, "expected a non-empty array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

Window window_of(const json& v, const std::string& where)
{
    const Vec w = vector_of(v, where);
    if (w.size() != 2 || !(w[1] > w[0])) bad(where, "expected [lo, hi] with lo < hi");
    return {w[0], w[1]};
}

std::vector<Window> windows_of(const json& o, const char* key, const std::string& where)
{
    std::vector<Window> out;
    if (!o.contains(key)) return out;
    const json& v = o.at(key);
    if (!v.is_array()) bad(where + "." + key, "expected a list of [lo, hi]");
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(window_of(v[i], where + "." + key + "[" + std::to_string(i) + "]"));
    return out;
}

Box box_of(const json& v, const std::string& where)
{
    allow_keys(v, where, {"lo", "hi"});
    Box b{vector_of(need(v, "lo", where), where + ".lo"), vector_of(need(v, "hi", where), where + ".hi")};
    if (b.lo.size() != b.hi.size() || !(b.hi.array() > b.lo.array()).all()) bad(where, "inconsistent box");
    return b;
}

Configuration columns(const json& v, const std::string& where)
{
    if (!v.is_array() || v.empty()) bad(where, "expected one entry per particle");
    std::vector<Vec> cols;
    for (std::size_t i = 0; i < v.size(); ++i)
        cols.push_back(vector_of(v[i], where + "[" + std::to_string(i) + "]"));
    const auto m = cols.front().size();
    Configuration X(m, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
    {
        if (cols[i].size() != m) bad(where, "particles have different dimensions");
        X.col(static_cast<Eigen::Index>(i)) = cols[i];
    }
    return X;
}

json vec_json(const Vec& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

template <class F>
DomainPtr guarded(const std::string& where, F&& make)
{
    try
    {
        return make();
    }
    catch (const ConfigError&)
    {
        throw;
    }
    catch (const Error& e)
    {
        bad(where, e.what());
    }
}

ScalarProfile make_profile(const json& p, double T, const fs::path& base_dir)
{
    const std::string w = "force.profile";
    const std::string kind = string_or(p, "kind", w, "");
    if (kind == "constant")
    {
        allow_keys(p, w, {"kind", "value"});
        return ScalarProfile::constant(number(p, "value", w));
    }
    if (kind == "linear")
    {
        allow_keys(p, w, {"kind", "c0", "c1"});
        return ScalarProfile::linear(number(p, "c0", w), number(p, "c1", w), T);
    }
    if (kind == "sine")
    {
        allow_keys(p, w, {"kind", "amplitude", "omega", "phase"});
        return ScalarProfile::sine(number(p, "amplitude", w), number(p, "omega", w), number_or(p, "phase", w, 0.0));
    }
    if (kind == "table")
    {
        allow_keys(p, w, {"kind", "nodes"});
        const json& nodes = need(p, "nodes", w);
        if (!nodes.is_array()) bad(w + ".nodes", "expected [[t, value], ...]");
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < nodes.size(); ++i)
        {
            const Vec tv = vector_of(nodes[i], w + ".nodes[" + std::to_string(i) + "]");
            if (tv.size() != 2) bad(w + ".nodes", "each node is [t, value]");
            pts.emplace_back(tv[0], tv[1]);
        }
        try
        {
            return ScalarProfile::table(std::move(pts));
        }
        catch (const InputError& e)
        {
            bad(w, e.what());
        }
    }
    if (kind == "csv")
    {
        allow_keys(p, w, {"kind", "path"});
        fs::path path = string_or(p, "path", w, "");
        if (path.is_relative()) path = base_dir / path;
        try
        {
            return load_profile_csv(path.string());
        }
        catch (const InputError& e)
        {
            bad(w, e.what());
        }
    }
    bad(w + ".kind", "expected constant, linear, sine, table or csv");
}

} // namespace

DomainPtr make_domain(const json& spec)
{
    const std::string w = "domain";
    const std::string kind = string_or(spec, "kind", w, "");
    if (kind == "interval")
    {
        allow_keys(spec, w, {"kind", "lo", "hi"});
        const double lo = number(spec, "lo", w), hi = number(spec, "hi", w);
        return guarded(w, [&] { return std::make_shared<Interval>(lo, hi); });
    }
    if (kind == "ball")
    {
        allow_keys(spec, w, {"kind", "center", "radius"});
        const Vec c = vector_of(need(spec, "center", w), w + ".center");
        const double r = number(spec, "radius", w);
        return guarded(w, [&] { return std::make_shared<Ball>(c, r); });
    }
    if (kind == "annulus")
    {
        allow_keys(spec, w, {"kind", "center", "r_in", "r_out"});
        const Vec c = vector_of(need(spec, "center", w), w + ".center");
        const double ri = number(spec, "r_in", w), ro = number(spec, "r_out", w);
        return guarded(w, [&] { return std::make_shared<Annulus>(c, ri, ro); });
    }
    if (kind == "half_space")
    {
        allow_keys(spec, w, {"kind", "normal", "offset", "box"});
        const Vec n = vector_of(need(spec, "normal", w), w + ".normal");
        const double off = number(spec, "offset", w);
        const Box box = box_of(need(spec, "box", w), w + ".box");
        return guarded(w, [&] { return std::make_shared<HalfSpaceTruncated>(n, off, box); });
    }
    if (kind == "ellipse")
    {
        allow_keys(spec, w, {"kind", "center", "a", "b", "box", "tube_radius", "gradient_axes"});
        const Vec c = vector_of(need(spec, "center", w), w + ".center");
        if (c.size() != 2) bad(w + ".center", "ellipse lives in the plane");
        const double a = positive(spec, "a", w, 1.0), b = positive(spec, "b", w, 1.0);
        const double reach = 1.5 * std::max(a, b);
        const Box box = spec.contains("box") ? box_of(spec.at("box"), w + ".box")
                                             : Box{(c.array() - reach).matrix(), (c.array() + reach).matrix()};
        ImplicitSurface::Options opts;
        // default: half the reach, i.e. half the smallest radius of curvature
        opts.tube_radius = positive(spec, "tube_radius", w, 0.5 * std::min(a, b) * std::min(a, b) / std::max(a, b));
        std::optional<std::pair<double, double>> axes;
        if (spec.contains("gradient_axes"))
        {
            const Vec g = vector_of(spec.at("gradient_axes"), w + ".gradient_axes");
            if (g.size() != 2 || !(g.array() > 0.0).all()) bad(w + ".gradient_axes", "expected [a, b] > 0");
            axes = std::pair{g[0], g[1]};
        }
        return guarded(w, [&] { return make_implicit_ellipse(c, a, b, box, opts, axes); });
    }
    bad(w + ".kind", "expected interval, ball, annulus, half_space or ellipse");
}

ForceFieldPtr make_force(const json& spec, int n, int dim, double T, const fs::path& base_dir)
{
    const std::string w = "force";
    const std::string kind = string_or(spec, "kind", w, "");
    auto wrap = [&](auto&& make) -> ForceFieldPtr {
        try
        {
            return make();
        }
        catch (const ConfigError&)
        {
            throw;
        }
        catch (const Error& e)
        {
            bad(w, e.what());
        }
    };
    if (kind == "zero")
    {
        allow_keys(spec, w, {"kind"});
        return wrap([&] { return std::make_shared<ZeroForce>(n, dim); });
    }
    if (kind == "gravity")
    {
        allow_keys(spec, w, {"kind", "g"});
        const Vec g = vector_of(need(spec, "g", w), w + ".g");
        if (g.size() != dim) bad(w + ".g", "dimension does not match the domain");
        return wrap([&] { return std::make_shared<ConstantGravity>(n, g); });
    }
    if (kind == "spring")
    {
        allow_keys(spec, w, {"kind", "stiffness", "rest_length"});
        const double s = number(spec, "stiffness", w), r = number_or(spec, "rest_length", w, 0.0);
        return wrap([&] { return std::make_shared<PairwiseSpring>(n, dim, s, r); });
    }
    if (kind == "repulsion")
    {
        allow_keys(spec, w, {"kind", "strength", "cutoff"});
        const double s = number(spec, "strength", w), c = number(spec, "cutoff", w);
        return wrap([&] { return std::make_shared<PairwiseRepulsion>(n, dim, s, c); });
    }
    if (kind == "time_scalar")
    {
        allow_keys(spec, w, {"kind", "direction", "profile"});
        const Vec d = vector_of(need(spec, "direction", w), w + ".direction");
        if (d.size() != dim) bad(w + ".direction", "dimension does not match the domain");
        ScalarProfile p = make_profile(need(spec, "profile", w), T, base_dir);
        return wrap([&] { return std::make_shared<TimeScalar>(n, std::move(p), d); });
    }
    bad(w + ".kind", "expected zero, gravity, spring, repulsion or time_scalar");
}

std::vector<Admissibility> check_initial_state(const Domain& dom, const SystemState& s, double pos_tol)
{
    std::vector<Admissibility> out;
    for (int i = 0; i < s.n_particles(); ++i)
    {
        Admissibility a{i, true, 0.0, ""};
        const Vec x = s.X.col(i);
        if (!dom.bounding_box().contains(x))
        {
            a.pass = false;
            a.signed_distance = kInf;
            a.reason = "outside the bounding box";
            out.push_back(a);
            continue;
        }
        a.signed_distance = dom.signed_distance(x);
        const bool sliding = !s.modes.empty() && s.modes[static_cast<std::size_t>(i)] == Mode::sliding;
        if (a.signed_distance > pos_tol)
        {
            a.pass = false;
            a.reason = "outside the domain";
        }
        else if (sliding && std::abs(a.signed_distance) > pos_tol)
        {
            a.pass = false;
            a.reason = "sliding but not on the boundary";
        }
        else if (!s.V.col(i).allFinite())
        {
            a.pass = false;
            a.reason = "non-finite velocity";
        }
        out.push_back(a);
    }
    return out;
}

ScenarioConfig parse_config(const json& j, const fs::path& base_dir, bool check_admissible)
{
    allow_keys(j, "scenario", {"name", "domain", "force", "initial", "horizon", "solver", "k", "options", "penalty",
                               "analysis", "checks", "validate", "seed", "output"});
    ScenarioConfig c;
    c.name = string_or(j, "name", "scenario", "scenario");
    c.domain_spec = need(j, "domain", "scenario");
    c.force_spec = need(j, "force", "scenario");
    c.domain = make_domain(c.domain_spec);
    const int m = c.domain->dim();

    const json& init = need(j, "initial", "scenario");
    allow_keys(init, "initial", {"t", "positions", "velocities", "modes"});
    c.initial.t = number_or(init, "t", "initial", 0.0);
    c.initial.X = columns(need(init, "positions", "initial"), "initial.positions");
    c.initial.V = columns(need(init, "velocities", "initial"), "initial.velocities");
    if (c.initial.X.rows() != m) bad("initial.positions", "dimension does not match the domain");
    if (c.initial.V.rows() != m || c.initial.V.cols() != c.initial.X.cols())
        bad("initial.velocities", "shape does not match positions");
    if (init.contains("modes"))
    {
        const json& modes = init.at("modes");
        if (!modes.is_array() || modes.size() != static_cast<std::size_t>(c.initial.X.cols()))
            bad("initial.modes", "expected one mode per particle");
        for (const auto& md : modes)
        {
            if (!md.is_string()) bad("initial.modes", "expected free or sliding");
            try
            {
                c.initial.modes.push_back(parse_mode(md.get<std::string>()));
            }
            catch (const Error& e)
            {
                bad("initial.modes", e.what());
            }
        }
    }
    const int n = static_cast<int>(c.initial.X.cols());

    c.T = number(j, "horizon", "scenario");
    if (!(c.T > c.initial.t)) bad("horizon", "must exceed the initial time");
    c.force = make_force(c.force_spec, n, m, c.T, base_dir);

    c.solver = string_or(j, "solver", "scenario", "exact");
    if (c.solver != "exact" && c.solver != "penalty" && c.solver != "both")
        bad("solver", "expected exact, penalty or both");
    if (j.contains("k"))
    {
        const Vec k = vector_of(j.at("k"), "k");
        for (Eigen::Index i = 0; i < k.size(); ++i)
        {
            if (!(k[i] > 0.0)) bad("k", "stiffness must be positive");
            if (i > 0 && !(k[i] > k[i - 1])) bad("k", "list must be strictly ascending");
            c.ks.push_back(k[i]);
        }
    }
    if (c.solver != "exact" && c.ks.empty()) bad("k", "penalty solver needs at least one stiffness");

    if (j.contains("options"))
    {
        const json& o = j.at("options");
        const std::string w = "options";
        allow_keys(o, w, {"rtol", "atol", "max_step", "sample_dt", "pos_tol", "time_tol", "refl_tol", "graze_tol",
                          "graze_policy", "max_events_per_window", "max_events", "scan_points"});
        SolverOptions& s = c.exact;
        s.rtol = positive(o, "rtol", w, s.rtol);
        s.atol = positive(o, "atol", w, s.atol);
        s.max_step = o.contains("max_step") ? positive(o, "max_step", w, 1.0) : s.max_step;
        s.sample_dt = positive(o, "sample_dt", w, s.sample_dt);
        s.pos_tol = positive(o, "pos_tol", w, s.pos_tol);
        s.time_tol = positive(o, "time_tol", w, s.time_tol);
        s.refl_tol = positive(o, "refl_tol", w, s.refl_tol);
        if (o.contains("graze_tol")) s.graze_tol = positive(o, "graze_tol", w, 1.0);
        try
        {
            s.graze_policy = parse_graze_policy(string_or(o, "graze_policy", w, "stop"));
        }
        catch (const InputError& e)
        {
            bad(w + ".graze_policy", e.what());
        }
        s.max_events_per_window = integer_or(o, "max_events_per_window", w, s.max_events_per_window);
        s.max_events = static_cast<std::size_t>(integer_or(o, "max_events", w, static_cast<int>(s.max_events)));
        s.scan_points = integer_or(o, "scan_points", w, s.scan_points);
        if (s.max_events_per_window < 1 || s.scan_points < 2) bad(w, "event window and scan points must be >= 1 and >= 2");
    }
    if (j.contains("penalty"))
    {
        const json& o = j.at("penalty");
        const std::string w = "penalty";
        allow_keys(o, w, {"rtol", "atol", "sample_dt", "dense_points", "max_retries", "enforce_k_min"});
        PenaltyOptions& p = c.penalty;
        p.rtol = positive(o, "rtol", w, p.rtol);
        p.atol = positive(o, "atol", w, p.atol);
        p.sample_dt = positive(o, "sample_dt", w, p.sample_dt);
        p.dense_points = integer_or(o, "dense_points", w, p.dense_points);
        p.max_retries = integer_or(o, "max_retries", w, p.max_retries);
        if (o.contains("enforce_k_min"))
        {
            if (!o.at("enforce_k_min").is_boolean()) bad(w + ".enforce_k_min", "expected a boolean");
            p.enforce_k_min = o.at("enforce_k_min").get<bool>();
        }
        if (p.dense_points < 2 || p.max_retries < 0) bad(w, "dense_points >= 2 and max_retries >= 0 required");
    }
    if (j.contains("analysis"))
    {
        const json& o = j.at("analysis");
        const std::string w = "analysis";
        allow_keys(o, w, {"energy_windows", "weak_form", "measure_windows", "compare"});
        c.analysis.energy_windows = windows_of(o, "energy_windows", w);
        c.analysis.measure_windows = windows_of(o, "measure_windows", w);
        if (o.contains("weak_form"))
        {
            const json& wf = o.at("weak_form");
            allow_keys(wf, w + ".weak_form", {"count", "control"});
            c.analysis.weak_form_count = integer_or(wf, "count", w + ".weak_form", 20);
            if (c.analysis.weak_form_count < 1) bad(w + ".weak_form.count", "must be >= 1");
            if (wf.contains("control"))
            {
                if (!wf.at("control").is_boolean()) bad(w + ".weak_form.control", "expected a boolean");
                c.analysis.weak_form_control = wf.at("control").get<bool>();
            }
        }
        if (o.contains("compare"))
        {
            const json& cmp = o.at("compare");
            allow_keys(cmp, w + ".compare", {"norm", "window"});
            try
            {
                c.analysis.compare_norm = parse_norm(string_or(cmp, "norm", w + ".compare", "sup_pos"));
            }
            catch (const InputError& e)
            {
                bad(w + ".compare.norm", e.what());
            }
            if (cmp.contains("window")) c.analysis.compare_window = window_of(cmp.at("window"), w + ".compare.window");
        }
    }
    if (j.contains("checks"))
    {
        const json& o = j.at("checks");
        const std::string w = "checks";
        allow_keys(o, w, {"energy", "weak_form", "slope_range", "sup_gap", "measure", "graze_time", "graze_time_tol"});
        c.checks.energy = positive(o, "energy", w, c.checks.energy);
        c.checks.weak_form = positive(o, "weak_form", w, c.checks.weak_form);
        if (o.contains("slope_range")) c.checks.slope_range = window_of(o.at("slope_range"), w + ".slope_range");
        if (o.contains("sup_gap")) c.checks.sup_gap = positive(o, "sup_gap", w, 1.0);
        if (o.contains("measure")) c.checks.measure = positive(o, "measure", w, 1.0);
        if (o.contains("graze_time")) c.checks.graze_time = number(o, "graze_time", w);
        c.checks.graze_time_tol = positive(o, "graze_time_tol", w, c.checks.graze_time_tol);
    }
    if (j.contains("validate"))
    {
        const json& o = j.at("validate");
        allow_keys(o, "validate", {"geometry_samples", "lipschitz_samples"});
        const int g = integer_or(o, "geometry_samples", "validate", 10000);
        const int l = integer_or(o, "lipschitz_samples", "validate", 2000);
        if (g < 1 || l < 2) bad("validate", "need >= 1 geometry and >= 2 Lipschitz samples");
        c.validate = {static_cast<std::size_t>(g), static_cast<std::size_t>(l)};
    }
    if (j.contains("seed"))
    {
        if (!j.at("seed").is_number_unsigned()) bad("seed", "expected a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.output_dir = string_or(j, "output", "scenario", "out/" + c.name);

    if (check_admissible)
        for (const auto& a : check_initial_state(*c.domain, c.initial, c.exact.pos_tol))
            if (!a.pass) bad("initial", "particle " + std::to_string(a.particle) + " " + a.reason);
    return c;
}

ScenarioConfig load_config(const fs::path& path, bool check_admissible)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    json j;
    try
    {
        j = json::parse(in, nullptr, true, true);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path(), check_admissible);
}

// ---------------------------------------------------------------------------

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_trajectory_csv(const fs::path& path, const Trajectory& traj)
{
    std::string s = "t,particle";
    for (int d = 0; d < traj.dim; ++d)
        s += ",x" + std::to_string(d);
    for (int d = 0; d < traj.dim; ++d)
        s += ",v" + std::to_string(d);
    s += ",mode\n";
    for (const SystemState& st : traj.samples)
        for (int i = 0; i < st.n_particles(); ++i)
        {
            s += fmt17(st.t) + "," + std::to_string(i);
            for (int d = 0; d < st.dim(); ++d)
                s += "," + fmt17(st.X(d, i));
            for (int d = 0; d < st.dim(); ++d)
                s += "," + fmt17(st.V(d, i));
            const Mode md = st.modes.empty() ? Mode::free : st.modes[static_cast<std::size_t>(i)];
            s += std::string(",") + to_string(md) + "\n";
        }
    write_text(path, s);
}

Trajectory read_trajectory_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot read trajectory " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    const auto fields = std::count(line.begin(), line.end(), ',') + 1;
    if (fields < 5 || (fields - 3) % 2 != 0 || line.rfind("t,particle", 0) != 0)
        throw InputError(path.string() + ": unexpected header");
    const int m = static_cast<int>((fields - 3) / 2);

    struct Row
    {
        double t;
        int i;
        Vec x, v;
        Mode mode;
    };
    std::vector<Row> rows;
    int n = 0;
    while (std::getline(in, line))
    {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (static_cast<long>(cells.size()) != fields) throw InputError(path.string() + ": ragged row: " + line);
        Row r{std::stod(cells[0]), std::stoi(cells[1]), Vec(m), Vec(m), parse_mode(cells.back())};
        for (int d = 0; d < m; ++d)
        {
            r.x[d] = std::stod(cells[static_cast<std::size_t>(2 + d)]);
            r.v[d] = std::stod(cells[static_cast<std::size_t>(2 + m + d)]);
        }
        n = std::max(n, r.i + 1);
        rows.push_back(std::move(r));
    }
    if (rows.empty() || rows.size() % static_cast<std::size_t>(n) != 0)
        throw InputError(path.string() + ": rows do not form whole samples");

    Trajectory traj;
    traj.n_particles = n;
    traj.dim = m;
    for (std::size_t k = 0; k < rows.size(); k += static_cast<std::size_t>(n))
    {
        SystemState st;
        st.t = rows[k].t;
        st.X.resize(m, n);
        st.V.resize(m, n);
        for (int i = 0; i < n; ++i)
        {
            const Row& r = rows[k + static_cast<std::size_t>(i)];
            if (r.i != i || r.t != st.t) throw InputError(path.string() + ": rows out of order near t=" + fmt17(r.t));
            st.X.col(i) = r.x;
            st.V.col(i) = r.v;
            st.modes.push_back(r.mode);
        }
        traj.samples.push_back(std::move(st));
    }
    traj.t_begin = traj.samples.front().t;
    traj.t_end = traj.t_reached = traj.samples.back().t;
    return traj;
}

json to_json(const Event& e)
{
    return {{"t_event", e.t_event}, {"particle", e.particle}, {"kind", to_string(e.kind)},
            {"v_minus", vec_json(e.v_minus)}, {"v_plus", vec_json(e.v_plus)}, {"normal", vec_json(e.normal)},
            {"atom_mass", e.atom_mass}};
}

json events_json(const Trajectory& traj)
{
    json ev = json::array();
    for (const Event& e : traj.events)
        ev.push_back(to_json(e));
    json modes = json::array();
    for (const ModeInterval& m : traj.mode_timeline)
        modes.push_back({{"particle", m.particle}, {"t_begin", m.t_begin}, {"t_end", m.t_end}, {"mode", to_string(m.mode)}});
    return {{"t_begin", traj.t_begin}, {"t_end", traj.t_end}, {"t_reached", traj.t_reached},
            {"termination", traj.termination}, {"events", ev}, {"mode_timeline", modes}};
}

json to_json(const GeometryReport& r)
{
    json checks = json::array();
    for (const GeometryCheck& c : r.checks)
        checks.push_back({{"check_name", c.check_name}, {"max_residual", c.max_residual}, {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    return {{"domain_kind", r.domain_kind}, {"n_samples", r.n_samples}, {"pass", r.pass()}, {"checks", checks}};
}

json to_json(const EnergyReport& r)
{
    json rows = json::array();
    for (const EnergyRow& e : r.rows)
        rows.push_back({{"particle", e.particle}, {"s1", e.s1}, {"s2", e.s2}, {"kinetic_gap", e.kinetic_gap},
                        {"work", e.work}, {"residual", e.residual}});
    return {{"max_abs_residual", r.max_abs_residual()}, {"rows", rows}};
}

json to_json(const BoundaryMeasure& m)
{
    json parts = json::array();
    for (std::size_t i = 0; i < m.particles.size(); ++i)
    {
        const ParticleMeasure& p = m.particles[i];
        json atoms = json::array();
        for (const Atom& a : p.atoms)
            atoms.push_back({{"t", a.t}, {"mass", a.mass}, {"normal", vec_json(a.normal)}});
        json dens = json::array();
        for (const DensityPoint& d : p.density)
            dens.push_back({{"t", d.t}, {"value", d.value}});
        json iv = json::array();
        for (const auto& [lo, hi] : p.sliding_intervals)
            iv.push_back({lo, hi});
        parts.push_back({{"particle", i}, {"atom_mass", p.atom_mass()}, {"density_mass", p.density_mass()},
                         {"atoms", atoms}, {"sliding_intervals", iv}, {"density", dens}});
    }
    return {{"total_mass", m.total_mass()}, {"particles", parts}};
}

namespace
{
json opt(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }
} // namespace

json to_json(const SweepReport& r)
{
    json rows = json::array();
    for (const SweepRow& s : r.rows)
        rows.push_back({{"k", s.k}, {"valid", s.valid}, {"error", s.error}, {"max_penetration", s.max_penetration},
                        {"sup_gap", s.sup_gap}, {"l1_vel_gap", s.l1_vel_gap}, {"rho_mass", s.rho_mass},
                        {"rho_mass_error", s.rho_mass_error}, {"excursion_count", s.excursion_count},
                        {"max_excursion_duration", s.max_excursion_duration},
                        {"slope_contribution", opt(s.slope_contribution)}});
    return {{"penetration_slope", opt(r.penetration_slope)}, {"sup_gap_monotone", r.sup_gap_monotone},
            {"sup_gap_improved", r.sup_gap_improved}, {"rows", rows}};
}

json to_json(const CertificateReport& r)
{
    json checks = json::array();
    for (const CertificateCheck& c : r.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"tolerance", c.tolerance},
                          {"relative", c.relative},
                          {"offending_n", c.offending_n ? json(*c.offending_n) : json(nullptr)},
                          {"detail", c.detail}});
    return {{"L", r.L}, {"n_max", r.n_max}, {"a", r.a}, {"b", r.b}, {"v0", r.v0}, {"v1", r.v1}, {"T_mid", r.T_mid},
            {"pass", r.pass()}, {"checks", checks}, {"ode_residual_per_interval", r.ode_residual_per_interval},
            {"ode_relative_per_interval", r.ode_relative_per_interval},
            {"derivative_estimates", r.derivative_estimates}, {"derivative_growth", r.derivative_growth}};
}

json to_json(const EventAudit& a)
{
    return {{"events", a.events}, {"max_speed_jump", a.max_speed_jump},
            {"max_reflection_error", a.max_reflection_error}, {"min_incoming_normal", a.min_incoming_normal},
            {"max_outgoing_normal", a.max_outgoing_normal}, {"max_confinement", a.max_confinement}};
}

void write_sweep_csv(const fs::path& path, const SweepReport& r)
{
    std::string s = "k,valid,max_penetration,sup_gap,l1_vel_gap,rho_mass_error,slope_contribution\n";
    for (const SweepRow& row : r.rows)
        s += fmt17(row.k) + "," + (row.valid ? "1" : "0") + "," + fmt17(row.max_penetration) + "," +
             fmt17(row.sup_gap) + "," + fmt17(row.l1_vel_gap) + "," + fmt17(row.rho_mass_error) + "," +
             (row.slope_contribution ? fmt17(*row.slope_contribution) : "") + "\n";
    write_text(path, s);
}

void write_energy_csv(const fs::path& path, const EnergyReport& r)
{
    std::string s = "particle,s1,s2,kinetic_gap,work,residual\n";
    for (const EnergyRow& e : r.rows)
        s += std::to_string(e.particle) + "," + fmt17(e.s1) + "," + fmt17(e.s2) + "," + fmt17(e.kinetic_gap) + "," +
             fmt17(e.work) + "," + fmt17(e.residual) + "\n";
    write_text(path, s);
}

void write_counterexample_csv(const fs::path& path, const std::vector<CounterexampleSample>& samples)
{
    std::string s = "t,F,x,v,n_interval\n";
    for (const auto& c : samples)
        s += fmt17(c.t) + "," + fmt17(c.F) + "," + fmt17(c.x) + "," + fmt17(c.v) + "," + std::to_string(c.n) + "\n";
    write_text(path, s);
}

} // namespace reflectsim
