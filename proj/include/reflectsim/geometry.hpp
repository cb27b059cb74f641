#pragma once

// Signed-distance calculus for a confinement domain.
//
// Convention: d_s < 0 inside the domain, d_s > 0 outside, and the gradient of
// d_s on the boundary is the outward unit normal. All queries are const and
// safe to call concurrently.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reflectsim/types.hpp"

namespace reflectsim
{

class Domain
{
  public:
    virtual ~Domain() = default;

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] double tube_radius() const { return tube_radius_; }
    [[nodiscard]] const Box& bounding_box() const { return box_; }
    [[nodiscard]] virtual std::string kind() const = 0;
    /// True when derivatives are obtained by finite differences.
    [[nodiscard]] virtual bool finite_difference() const { return false; }
    [[nodiscard]] double default_tolerance() const { return finite_difference() ? 1e-5 : 1e-8; }

    // Throw DomainQueryError outside the bounding box.
    [[nodiscard]] double signed_distance(const Vec& x) const;
    [[nodiscard]] Vec gradient(const Vec& x) const;
    [[nodiscard]] Mat hessian(const Vec& x) const;

  protected:
    Domain(int dim, double tube_radius, Box box);

    [[nodiscard]] virtual double eval_distance(const Vec& x) const = 0;
    [[nodiscard]] virtual Vec eval_gradient(const Vec& x) const = 0;
    [[nodiscard]] virtual Mat eval_hessian(const Vec& x) const = 0;

  private:
    void check_query(const Vec& x) const;

    int dim_;
    double tube_radius_;
    Box box_;
};

using DomainPtr = std::shared_ptr<const Domain>;

class Interval final : public Domain
{
  public:
    Interval(double lo, double hi);
    [[nodiscard]] std::string kind() const override { return "interval"; }
    [[nodiscard]] double lo() const { return lo_; }
    [[nodiscard]] double hi() const { return hi_; }

  private:
    [[nodiscard]] double eval_distance(const Vec& x) const override;
    [[nodiscard]] Vec eval_gradient(const Vec& x) const override;
    [[nodiscard]] Mat eval_hessian(const Vec& x) const override;
    double lo_, hi_;
};

class Ball final : public Domain
{
  public:
    Ball(Vec center, double radius);
    [[nodiscard]] std::string kind() const override { return "ball"; }

  private:
    [[nodiscard]] double eval_distance(const Vec& x) const override;
    [[nodiscard]] Vec eval_gradient(const Vec& x) const override;
    [[nodiscard]] Mat eval_hessian(const Vec& x) const override;
    Vec center_;
    double radius_;
};

/// Spherical shell r_in < |x - c| < r_out. Nonconvex.
class Annulus final : public Domain
{
  public:
    Annulus(Vec center, double r_in, double r_out);
    [[nodiscard]] std::string kind() const override { return "annulus"; }

  private:
    [[nodiscard]] double eval_distance(const Vec& x) const override;
    [[nodiscard]] Vec eval_gradient(const Vec& x) const override;
    [[nodiscard]] Mat eval_hessian(const Vec& x) const override;
    [[nodiscard]] bool nearer_outer(const Vec& x) const;
    Vec center_;
    double r_in_, r_out_;
};

/// Half-space {normal . x < offset} restricted to a finite box. Only the plane
/// counts as boundary; the box walls stand in for "infinitely far away".
class HalfSpaceTruncated final : public Domain
{
  public:
    HalfSpaceTruncated(Vec normal, double offset, Box box);
    [[nodiscard]] std::string kind() const override { return "half_space"; }

  private:
    [[nodiscard]] double eval_distance(const Vec& x) const override;
    [[nodiscard]] Vec eval_gradient(const Vec& x) const override;
    [[nodiscard]] Mat eval_hessian(const Vec& x) const override;
    Vec normal_;
    double offset_;
};

/// Domain {phi < 0} for a user level-set function phi. The signed distance is
/// computed by a damped Newton solve for the closest boundary point, and its
/// derivatives by central finite differences of the signed distance.
class ImplicitSurface final : public Domain
{
  public:
    using LevelSet = std::function<double(const Vec&)>;
    using LevelSetGradient = std::function<Vec(const Vec&)>;

    struct Options
    {
        std::optional<double> tube_radius; // default: 0.1 * bounding-box diagonal
        int max_newton_iterations = 50;
        double newton_tolerance = 1e-12;
        double gradient_step = 1e-6;
        double hessian_step = 1e-4;
    };

    ImplicitSurface(LevelSet phi, std::optional<LevelSetGradient> grad_phi, Box box, Options opts);
    ImplicitSurface(LevelSet phi, std::optional<LevelSetGradient> grad_phi, Box box)
        : ImplicitSurface(std::move(phi), std::move(grad_phi), std::move(box), Options{})
    {
    }

    [[nodiscard]] std::string kind() const override { return "implicit"; }
    [[nodiscard]] bool finite_difference() const override { return true; }

    /// Closest point on {phi = 0}.
    [[nodiscard]] Vec foot_point(const Vec& x) const;

  private:
    [[nodiscard]] double eval_distance(const Vec& x) const override;
    [[nodiscard]] Vec eval_gradient(const Vec& x) const override;
    [[nodiscard]] Mat eval_hessian(const Vec& x) const override;
    [[nodiscard]] Vec phi_gradient(const Vec& x) const;
    [[nodiscard]] Mat phi_hessian(const Vec& x) const;

    LevelSet phi_;
    std::optional<LevelSetGradient> grad_phi_;
    Options opts_;
};

/// Ellipse (x/a)^2 + (y/b)^2 < 1 about `center`. `gradient_axes` supplies an
/// analytic level-set gradient built from different semi-axes, used to
/// construct deliberately inconsistent derivative data.
std::shared_ptr<ImplicitSurface> make_implicit_ellipse(const Vec& center, double a, double b, Box box,
                                                       ImplicitSurface::Options opts = {},
                                                       std::optional<std::pair<double, double>> gradient_axes = {});

// Free-function surface used by the solvers.

[[nodiscard]] inline double signed_distance(const Domain& dom, const Vec& x) { return dom.signed_distance(x); }

/// dist(x, closure of the domain): max(d_s, 0).
[[nodiscard]] double unconstrained_distance(const Domain& dom, const Vec& x);

/// d * grad d: zero on the closed domain, d_s * grad d_s outside. Throws
/// TubeViolation when d >= tube radius.
[[nodiscard]] Vec d_grad_d(const Domain& dom, const Vec& x);

/// P(x) = x - d_s(x) grad d_s(x). Throws TubeViolation outside the tube.
[[nodiscard]] Vec project_to_boundary(const Domain& dom, const Vec& x);

/// Outward unit normal, i.e. grad d_s.
[[nodiscard]] inline Vec outward_normal(const Domain& dom, const Vec& x) { return dom.gradient(x); }

struct GeometryCheck
{
    std::string check_name;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct GeometryReport
{
    std::string domain_kind;
    std::size_t n_samples = 0;
    std::vector<GeometryCheck> checks;

    [[nodiscard]] bool pass() const;
    [[nodiscard]] const GeometryCheck& check(const std::string& name) const;
};

/// Samples `n_samples` points with |d_s| < 0.99 tube radius and records the
/// largest residual of each identity the solvers rely on: eikonal,
/// Weingarten (Hess d_s . grad d_s = 0), projection annihilation
/// ((I - g g^T - d_s H) g = 0), |d_s(P x)|, and the round trip
/// P(x) + d_s(x) nu(P(x)) = x.
[[nodiscard]] GeometryReport validate_geometry(const Domain& dom, std::size_t n_samples, std::uint64_t rng_seed,
                                               std::optional<double> tolerance = {},
                                               Execution exec = Execution::parallel);

/// Rejection-samples points in the tube. Deterministic in the seed.
[[nodiscard]] std::vector<Vec> sample_tube(const Domain& dom, std::size_t n_samples, std::uint64_t rng_seed,
                                           double fraction = 0.99);

} // namespace reflectsim
