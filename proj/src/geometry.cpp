#include "reflectsim/geometry.hpp"
#include "reflectsim/parallel.hpp"

#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace reflectsim
{

namespace
{

std::string format_point(const Vec& x)
{
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i)
        os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

Box centered_box(const Vec& center, double half_width)
{
    return Box{center.array() - half_width, center.array() + half_width};
}

} // namespace

Domain::Domain(int dim, double tube_radius, Box box)
    : dim_(dim)
    , tube_radius_(tube_radius)
    , box_(std::move(box))
{
    if (dim_ < 1) throw InputError("domain dimension must be >= 1");
    if (!(tube_radius_ > 0.0)) throw InputError("tube radius must be positive");
    if (box_.lo.size() != dim_ || box_.hi.size() != dim_) throw InputError("bounding box dimension mismatch");
}

void Domain::check_query(const Vec& x) const
{
    if (x.size() != dim_) throw DomainQueryError("point has dimension " + std::to_string(x.size()) + ", domain has " +
                                                 std::to_string(dim_));
    if (!x.allFinite()) throw NumericError("non-finite point " + format_point(x));
    if (!box_.contains(x)) throw DomainQueryError("point " + format_point(x) + " outside bounding box of " + kind());
}

double Domain::signed_distance(const Vec& x) const
{
    check_query(x);
    return eval_distance(x);
}

Vec Domain::gradient(const Vec& x) const
{
    check_query(x);
    return eval_gradient(x);
}

Mat Domain::hessian(const Vec& x) const
{
    check_query(x);
    return eval_hessian(x);
}

// ---------------------------------------------------------------------------

Interval::Interval(double lo, double hi)
    : Domain(1, 0.5 * (hi - lo), Box{Vec::Constant(1, lo - 0.5 * (hi - lo)), Vec::Constant(1, hi + 0.5 * (hi - lo))})
    , lo_(lo)
    , hi_(hi)
{
    if (!(hi > lo)) throw InputError("interval requires lo < hi");
}

double Interval::eval_distance(const Vec& x) const { return std::max(lo_ - x[0], x[0] - hi_); }

Vec Interval::eval_gradient(const Vec& x) const
{
    return Vec::Constant(1, x[0] < 0.5 * (lo_ + hi_) ? -1.0 : 1.0);
}

Mat Interval::eval_hessian(const Vec&) const { return Mat::Zero(1, 1); }

// ---------------------------------------------------------------------------

Ball::Ball(Vec center, double radius)
    : Domain(static_cast<int>(center.size()), radius, centered_box(center, 2.0 * radius))
    , center_(std::move(center))
    , radius_(radius)
{
    if (!(radius > 0.0)) throw InputError("ball radius must be positive");
}

double Ball::eval_distance(const Vec& x) const { return (x - center_).norm() - radius_; }

Vec Ball::eval_gradient(const Vec& x) const
{
    const Vec r = x - center_;
    const double n = r.norm();
    // The centre is outside the tube; any unit vector will do there.
    if (n == 0.0) return Vec::Unit(dim(), 0);
    return r / n;
}

Mat Ball::eval_hessian(const Vec& x) const
{
    const Vec r = x - center_;
    const double n = r.norm();
    if (n == 0.0) return Mat::Zero(dim(), dim());
    const Vec g = r / n;
    return (Mat::Identity(dim(), dim()) - g * g.transpose()) / n;
}

// ---------------------------------------------------------------------------

Annulus::Annulus(Vec center, double r_in, double r_out)
    : Domain(static_cast<int>(center.size()), std::min(r_in, 0.5 * (r_out - r_in)),
             centered_box(center, r_out + std::min(r_in, 0.5 * (r_out - r_in))))
    , center_(std::move(center))
    , r_in_(r_in)
    , r_out_(r_out)
{
    if (!(r_in > 0.0 && r_out > r_in)) throw InputError("annulus requires 0 < r_in < r_out");
}

bool Annulus::nearer_outer(const Vec& x) const { return (x - center_).norm() >= 0.5 * (r_in_ + r_out_); }

double Annulus::eval_distance(const Vec& x) const
{
    const double r = (x - center_).norm();
    return std::max(r_in_ - r, r - r_out_);
}

Vec Annulus::eval_gradient(const Vec& x) const
{
    const Vec r = x - center_;
    const double n = r.norm();
    if (n == 0.0) return Vec::Unit(dim(), 0);
    return nearer_outer(x) ? Vec(r / n) : Vec(-r / n);
}

Mat Annulus::eval_hessian(const Vec& x) const
{
    const Vec r = x - center_;
    const double n = r.norm();
    if (n == 0.0) return Mat::Zero(dim(), dim());
    const Vec g = r / n;
    const Mat h = (Mat::Identity(dim(), dim()) - g * g.transpose()) / n;
    return nearer_outer(x) ? h : Mat(-h);
}

// ---------------------------------------------------------------------------

HalfSpaceTruncated::HalfSpaceTruncated(Vec normal, double offset, Box box)
    : Domain(static_cast<int>(normal.size()), box.diagonal(), box)
    , normal_(std::move(normal))
    , offset_(offset)
{
    const double n = normal_.norm();
    if (!(n > 0.0)) throw InputError("half-space normal must be nonzero");
    normal_ /= n;
}

double HalfSpaceTruncated::eval_distance(const Vec& x) const { return normal_.dot(x) - offset_; }

Vec HalfSpaceTruncated::eval_gradient(const Vec&) const { return normal_; }

Mat HalfSpaceTruncated::eval_hessian(const Vec&) const { return Mat::Zero(dim(), dim()); }

// ---------------------------------------------------------------------------

ImplicitSurface::ImplicitSurface(LevelSet phi, std::optional<LevelSetGradient> grad_phi, Box box, Options opts)
    : Domain(static_cast<int>(box.lo.size()), opts.tube_radius.value_or(0.1 * box.diagonal()), box)
    , phi_(std::move(phi))
    , grad_phi_(std::move(grad_phi))
    , opts_(opts)
{
}

Vec ImplicitSurface::phi_gradient(const Vec& x) const
{
    if (grad_phi_) return (*grad_phi_)(x);
    const double h = opts_.gradient_step;
    Vec g(dim());
    Vec xp = x, xm = x;
    for (int i = 0; i < dim(); ++i)
    {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (phi_(xp) - phi_(xm)) / (2.0 * h);
        xp[i] = xm[i] = x[i];
    }
    return g;
}

Mat ImplicitSurface::phi_hessian(const Vec& x) const
{
    const double h = opts_.hessian_step;
    Mat H(dim(), dim());
    Vec xp = x, xm = x;
    for (int j = 0; j < dim(); ++j)
    {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        H.col(j) = (phi_gradient(xp) - phi_gradient(xm)) / (2.0 * h);
        xp[j] = xm[j] = x[j];
    }
    return 0.5 * (H + H.transpose());
}

Vec ImplicitSurface::foot_point(const Vec& x) const
{
    // Start from a few gradient-projection sweeps onto {phi = 0}.
    Vec p = x;
    for (int it = 0; it < 8; ++it)
    {
        const Vec g = phi_gradient(p);
        const double gg = g.squaredNorm();
        if (gg == 0.0) throw GeometryError("level-set gradient vanishes near the boundary");
        p -= (phi_(p) / gg) * g;
    }
    Vec g = phi_gradient(p);
    double lambda = (x - p).dot(g) / g.squaredNorm();

    // Damped Newton on the closest-point conditions
    //   p - x + lambda grad phi(p) = 0,  phi(p) = 0.
    const int m = dim();
    auto residual = [&](const Vec& pp, double lam) {
        Vec r(m + 1);
        r.head(m) = pp - x + lam * phi_gradient(pp);
        r[m] = phi_(pp);
        return r;
    };
    Vec r = residual(p, lambda);
    for (int it = 0; it < opts_.max_newton_iterations; ++it)
    {
        if (r.norm() <= opts_.newton_tolerance) break;
        g = phi_gradient(p);
        Mat J = Mat::Zero(m + 1, m + 1);
        J.topLeftCorner(m, m) = Mat::Identity(m, m) + lambda * phi_hessian(p);
        J.block(0, m, m, 1) = g;
        J.block(m, 0, 1, m) = g.transpose();
        const Vec step = J.fullPivLu().solve(-r);
        double damping = 1.0;
        for (int ls = 0; ls < 30; ++ls)
        {
            const Vec p_try = p + damping * step.head(m);
            const double l_try = lambda + damping * step[m];
            const Vec r_try = residual(p_try, l_try);
            if (r_try.norm() < r.norm() || ls == 29)
            {
                p = p_try;
                lambda = l_try;
                r = r_try;
                break;
            }
            damping *= 0.5;
        }
        if (step.norm() * damping <= opts_.newton_tolerance) break;
    }
    // Two extra full steps take the converged point to round-off; the
    // finite-difference Hessian divides its error by the step.
    for (int it = 0; it < 2; ++it)
    {
        g = phi_gradient(p);
        Mat J = Mat::Zero(m + 1, m + 1);
        J.topLeftCorner(m, m) = Mat::Identity(m, m) + lambda * phi_hessian(p);
        J.block(0, m, m, 1) = g;
        J.block(m, 0, 1, m) = g.transpose();
        const Vec step = J.fullPivLu().solve(-residual(p, lambda));
        if (!step.allFinite()) break;
        p += step.head(m);
        lambda += step[m];
    }
    return p;
}

double ImplicitSurface::eval_distance(const Vec& x) const
{
    const double dist = (x - foot_point(x)).norm();
    return phi_(x) < 0.0 ? -dist : dist;
}

Vec ImplicitSurface::eval_gradient(const Vec& x) const
{
    const double h = opts_.gradient_step;
    Vec g(dim());
    Vec xp = x, xm = x;
    for (int i = 0; i < dim(); ++i)
    {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (eval_distance(xp) - eval_distance(xm)) / (2.0 * h);
        xp[i] = xm[i] = x[i];
    }
    return g;
}

Mat ImplicitSurface::eval_hessian(const Vec& x) const
{
    const double h = opts_.hessian_step;
    const int m = dim();
    Mat H(m, m);
    const double f0 = eval_distance(x);
    Vec y = x;
    for (int i = 0; i < m; ++i)
    {
        y[i] = x[i] + h;
        const double fp = eval_distance(y);
        y[i] = x[i] - h;
        const double fm = eval_distance(y);
        y[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
        for (int j = i + 1; j < m; ++j)
        {
            double acc = 0.0;
            for (int si : {1, -1})
                for (int sj : {1, -1})
                {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    acc += si * sj * eval_distance(y);
                    y[i] = x[i];
                    y[j] = x[j];
                }
            H(i, j) = H(j, i) = acc / (4.0 * h * h);
        }
    }
    return H;
}

std::shared_ptr<ImplicitSurface> make_implicit_ellipse(const Vec& center, double a, double b, Box box,
                                                       ImplicitSurface::Options opts,
                                                       std::optional<std::pair<double, double>> gradient_axes)
{
    if (center.size() != 2) throw InputError("ellipse is two-dimensional");
    if (!(a > 0.0 && b > 0.0)) throw InputError("ellipse semi-axes must be positive");
    ImplicitSurface::LevelSet phi = [center, a, b](const Vec& x) {
        const double u = (x[0] - center[0]) / a;
        const double v = (x[1] - center[1]) / b;
        return u * u + v * v - 1.0;
    };
    std::optional<ImplicitSurface::LevelSetGradient> grad;
    if (gradient_axes)
    {
        const auto [ga, gb] = *gradient_axes;
        grad = [center, ga, gb](const Vec& x) {
            Vec g(2);
            g[0] = 2.0 * (x[0] - center[0]) / (ga * ga);
            g[1] = 2.0 * (x[1] - center[1]) / (gb * gb);
            return g;
        };
    }
    return std::make_shared<ImplicitSurface>(std::move(phi), std::move(grad), std::move(box), opts);
}

// ---------------------------------------------------------------------------

double unconstrained_distance(const Domain& dom, const Vec& x) { return std::max(dom.signed_distance(x), 0.0); }

Vec d_grad_d(const Domain& dom, const Vec& x)
{
    const double ds = dom.signed_distance(x);
    if (ds <= 0.0) return Vec::Zero(dom.dim());
    if (ds >= dom.tube_radius())
        throw TubeViolation("distance " + std::to_string(ds) + " to the domain exceeds tube radius " +
                            std::to_string(dom.tube_radius()));
    return ds * dom.gradient(x);
}

Vec project_to_boundary(const Domain& dom, const Vec& x)
{
    const double ds = dom.signed_distance(x);
    if (std::abs(ds) >= dom.tube_radius())
        throw TubeViolation("projection requested at |d_s| = " + std::to_string(std::abs(ds)) +
                            " beyond tube radius " + std::to_string(dom.tube_radius()));
    return x - ds * dom.gradient(x);
}

// ---------------------------------------------------------------------------

bool GeometryReport::pass() const
{
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const GeometryCheck& GeometryReport::check(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.check_name == name) return c;
    throw InputError("no geometry check named " + name);
}

std::vector<Vec> sample_tube(const Domain& dom, std::size_t n_samples, std::uint64_t rng_seed, double fraction)
{
    std::mt19937_64 rng(rng_seed);
    const Box& box = dom.bounding_box();
    std::vector<std::uniform_real_distribution<double>> axes;
    for (int i = 0; i < dom.dim(); ++i)
        axes.emplace_back(box.lo[i], box.hi[i]);

    const double limit = fraction * dom.tube_radius();
    std::vector<Vec> out;
    out.reserve(n_samples);
    const std::size_t max_attempts = 1000 * (n_samples + 10);
    for (std::size_t attempt = 0; out.size() < n_samples; ++attempt)
    {
        if (attempt >= max_attempts) throw GeometryError("tube sampling acceptance rate too low");
        Vec x(dom.dim());
        for (int i = 0; i < dom.dim(); ++i)
            x[i] = axes[i](rng);
        if (std::abs(dom.signed_distance(x)) < limit) out.push_back(std::move(x));
    }
    return out;
}

GeometryReport validate_geometry(const Domain& dom, std::size_t n_samples, std::uint64_t rng_seed,
                                 std::optional<double> tolerance, Execution exec)
{
    if (n_samples < 1) throw InputError("validate_geometry needs at least one sample");
    const double tol = tolerance.value_or(dom.default_tolerance());
    const std::vector<Vec> pts = sample_tube(dom, n_samples, rng_seed);

    constexpr int kChecks = 5;
    std::vector<std::array<double, kChecks>> res(pts.size());
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
    const Mat I = Mat::Identity(dom.dim(), dom.dim());

    auto evaluate = [&](std::ptrdiff_t s) {
        const Vec& x = pts[static_cast<std::size_t>(s)];
        const double ds = dom.signed_distance(x);
        const Vec g = dom.gradient(x);
        const Mat H = dom.hessian(x);
        const Vec p = x - ds * g;
        const Vec back = p + ds * dom.gradient(p);
        res[static_cast<std::size_t>(s)] = {
            std::abs(g.norm() - 1.0),
            (H * g).norm(),
            ((I - g * g.transpose() - ds * H) * g).norm(),
            std::abs(dom.signed_distance(p)),
            (back - x).norm(),
        };
    };

    parallel_for(n, exec, evaluate, 64);

    static const char* names[kChecks] = {"eikonal", "weingarten", "projection_annihilation", "projection_on_boundary",
                                         "round_trip"};
    GeometryReport report{dom.kind(), pts.size(), {}};
    for (int c = 0; c < kChecks; ++c)
    {
        double worst = 0.0;
        for (const auto& r : res)
            worst = std::isnan(r[c]) ? kInf : std::max(worst, r[c]);
        report.checks.push_back({names[c], worst, tol, worst <= tol});
    }
    return report;
}

} // namespace reflectsim
