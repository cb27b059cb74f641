#pragma once

// Event-driven integration of second-order particle dynamics with elastic
// reflection at the boundary of a domain.

#include <functional>
#include <optional>
#include <utility>

#include "reflectsim/forces.hpp"
#include "reflectsim/geometry.hpp"
#include "reflectsim/integrator.hpp"
#include "reflectsim/trajectory.hpp"

namespace reflectsim
{

/// What to do when a particle meets the boundary with zero normal speed.
/// Past that time the continuation is not unique, so the choice is the user's.
enum class GrazePolicy
{
    stop,    // record the graze and end the run there
    stick,   // enter sliding mode if the normal force is nonnegative
    reflect, // treat as a zero-mass bounce and keep flying
};

[[nodiscard]] GrazePolicy parse_graze_policy(const std::string& s);
[[nodiscard]] const char* to_string(GrazePolicy p);

struct SolverOptions
{
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = kInf;
    double sample_dt = 1e-2;
    double pos_tol = 1e-10;  // confinement / on-boundary tolerance
    double time_tol = 1e-9;  // event grouping and Zeno window
    double refl_tol = 1e-10; // audit tolerance for reflection and speed continuity
    /// Absolute grazing threshold on |v . nu|. When unset: 1e-8 times the
    /// characteristic speed of the run.
    std::optional<double> graze_tol;
    GrazePolicy graze_policy = GrazePolicy::stop;
    int max_events_per_window = 100;
    std::size_t max_events = 1'000'000;
    int scan_points = 16; // dense-output samples scanned per step for events
};

/// Reflection across the plane with unit normal nu: v - 2 (v . nu) nu.
/// Normals within 1e-6 of unit length are renormalized; others are rejected.
[[nodiscard]] Vec reflect(const Vec& v, const Vec& normal);

/// C^1 path of one particle: t -> (position, velocity).
using ParticlePath = std::function<std::pair<Vec, Vec>(double)>;

struct CrossingOptions
{
    double pos_tol = 1e-10;
    double time_tol = 1e-12;
    int scan_points = 16;
};

/// First time in [t_begin, t_end] at which the path reaches the boundary,
/// either by crossing (d_s changes sign) or by touching tangentially (a local
/// maximum of d_s within pos_tol of zero). Returns nothing if neither happens.
[[nodiscard]] std::optional<double> find_boundary_contact(const ParticlePath& path, const Domain& dom, double t_begin,
                                                          double t_end, const CrossingOptions& opts);

/// As find_boundary_contact, but requires d_s < 0 at t_begin and throws
/// BracketError when the segment never reaches the boundary. Segments whose
/// scan misses a contact are subdivided by halving before giving up.
[[nodiscard]] double locate_crossing(const ParticlePath& path, const Domain& dom, double t_begin, double t_end,
                                     const CrossingOptions& opts = {});

/// rho = F . nu + v^T Hess(d_s) v for a particle on the boundary; the normal
/// force that keeps d_s(x(t)) = 0 to second order.
[[nodiscard]] double sliding_density(const Vec& x, const Vec& v, const Vec& force, const Domain& dom,
                                     double pos_tol = 1e-8, double graze_tol = 1e-6);

/// Event-driven solve on [initial.t, T]. Interior arcs use adaptive
/// Dormand-Prince; boundary crossings are located on the dense output.
[[nodiscard]] Trajectory simulate_exact(const Domain& dom, const ForceField& ff, const SystemState& initial, double T,
                                        const SolverOptions& opts = {});

} // namespace reflectsim
