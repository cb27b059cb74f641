#pragma once

// Post-hoc checks of a computed trajectory against the distributional
// formulation: boundary measure, energy balance, weak-form residual, grazing
// horizon and trajectory distances.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reflectsim/forces.hpp"
#include "reflectsim/geometry.hpp"
#include "reflectsim/penalty_solver.hpp"
#include "reflectsim/trajectory.hpp"

namespace reflectsim
{

struct Atom
{
    double t = 0.0;
    double mass = 0.0;
    Vec normal;
};

struct DensityPoint
{
    double t = 0.0;
    double value = 0.0;
    Vec normal;
};

struct ParticleMeasure
{
    std::vector<Atom> atoms;
    std::vector<DensityPoint> density;                     // sampled on sliding intervals
    std::vector<std::pair<double, double>> sliding_intervals;
    [[nodiscard]] double atom_mass() const;
    /// Trapezoid over each sliding interval.
    [[nodiscard]] double density_mass() const;
};

struct BoundaryMeasure
{
    std::vector<ParticleMeasure> particles;
    [[nodiscard]] double total_mass() const;
};

/// Atoms from bounce (and reflected graze) events, density from sliding samples.
[[nodiscard]] BoundaryMeasure extract_measure(const Trajectory& traj);

/// Integral of k d(x) over [s1, s2] by the trapezoid rule; particle < 0 sums all.
[[nodiscard]] double extract_measure_penalty(const PenaltyRun& run, double s1, double s2, int particle = -1);

struct EnergyRow
{
    int particle = 0;
    double s1 = 0.0, s2 = 0.0;
    double kinetic_gap = 0.0; // 1/2 |v(s2)|^2 - 1/2 |v(s1)|^2, right limits
    double work = 0.0;        // integral of F . v
    double residual = 0.0;    // gap - work
};

struct EnergyReport
{
    std::vector<EnergyRow> rows;
    [[nodiscard]] double max_abs_residual() const;
};

[[nodiscard]] EnergyReport energy_report(const Trajectory& traj, const ForceField& ff,
                                         const std::vector<std::pair<double, double>>& windows);

/// psi(t) = scale * sigma((t - center) / width) e_axis with the mollifier
/// sigma(s) = exp(1 - 1/(1 - s^2)) on |s| < 1.
struct TestFunction
{
    double center = 0.0;
    double width = 1.0;
    int axis = 0;
    double scale = 1.0;
    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double derivative(double t) const;
    [[nodiscard]] double lo() const { return center - width; }
    [[nodiscard]] double hi() const { return center + width; }
};

/// Bumps at event times, between consecutive events and on a uniform grid,
/// one per coordinate axis, all supported inside (t_begin, t_end).
[[nodiscard]] std::vector<TestFunction> make_test_functions(const Trajectory& traj, int count);

struct WeakFormTerms
{
    double velocity_term = 0.0; // integral of v . psi'
    double force_term = 0.0;    // integral of F . psi
    double measure_term = 0.0;  // integral of nu . psi d rho
    [[nodiscard]] double residual() const { return velocity_term + force_term - measure_term; }
};

[[nodiscard]] WeakFormTerms weak_form_terms(const Trajectory& traj, const BoundaryMeasure& measure,
                                            const ForceField& ff, int particle, const TestFunction& psi);

struct WeakFormReport
{
    double max_residual = 0.0;
    int worst_function = -1;
    int worst_particle = -1;
    std::vector<double> residuals; // per test function, max over particles
};

[[nodiscard]] WeakFormReport weak_form_residual(const Trajectory& traj, const BoundaryMeasure& measure,
                                                const ForceField& ff, const std::vector<TestFunction>& fns,
                                                Execution exec = Execution::parallel);

/// Earliest graze or slide_start event: the end of the certified-uniqueness window.
[[nodiscard]] std::optional<double> first_grazing_time(const Trajectory& traj);

enum class TrajectoryNorm
{
    sup_pos,
    l1_vel
};

[[nodiscard]] TrajectoryNorm parse_norm(const std::string& s);

/// Distance over the union of both sample grids, restricted to `window` when
/// given. Both trajectories must have the same shape and horizon.
[[nodiscard]] double compare_trajectories(const Trajectory& a, const Trajectory& b, TrajectoryNorm norm,
                                          std::optional<std::pair<double, double>> window = {});

struct EventAudit
{
    std::size_t events = 0;
    double max_speed_jump = 0.0;       // | |v+| - |v-| |
    double max_reflection_error = 0.0; // bounces only
    double min_incoming_normal = 0.0;  // min v- . nu over contacts
    double max_outgoing_normal = 0.0;  // max v+ . nu over contacts
    double max_confinement = -kInf;    // max d_s over samples
};

[[nodiscard]] EventAudit audit_events(const Trajectory& traj, const Domain& dom);

/// Largest distance from a measure point (atom or density sample) to the
/// nearest boundary-contact time of the same particle.
[[nodiscard]] double measure_support_gap(const Trajectory& traj, const BoundaryMeasure& measure);

} // namespace reflectsim
