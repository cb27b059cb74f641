#pragma once

// Penalty regularization of the reflection problem: the hard constraint is
// replaced by the restoring force -k d grad d, integrated as a smooth ODE.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reflectsim/forces.hpp"
#include "reflectsim/geometry.hpp"
#include "reflectsim/trajectory.hpp"

namespace reflectsim
{

struct PenaltyOptions
{
    double rtol = 1e-10;
    double atol = 1e-12;
    double sample_dt = 1e-2;
    int dense_points = 16;  // dense-output probes per step for excursion tracking
    int max_retries = 8;    // step halvings after a probe leaves the tube
    bool enforce_k_min = true;
};

/// One interval (a, b) on which a particle is outside the closed domain.
struct Excursion
{
    int particle = 0;
    double a = 0.0;
    double b = 0.0;
    double entry_speed = 0.0; // d/dt d_s at a (>= 0)
    double exit_speed = 0.0;  // d/dt d_s at b (<= 0)
    double max_depth = 0.0;
    bool complete = true;     // false when the run ends mid-excursion
    [[nodiscard]] double duration() const { return b - a; }
};

struct RhoSample
{
    double t = 0.0;
    double rho = 0.0; // k d(x)
};

struct PenaltyRun
{
    double k = 0.0;
    Trajectory trajectory; // no event log
    double max_penetration = 0.0;
    std::vector<std::vector<RhoSample>> rho_samples; // per particle, only inside excursions
    std::vector<Excursion> excursions;
    std::size_t steps = 0;
};

/// -k d(x) grad d_s(x); zero on the closed domain.
[[nodiscard]] Vec penalty_force(const Domain& dom, const Vec& x, double k);

/// Characteristic speed bound max|v0| + sup|F| T used by the k_min heuristic.
[[nodiscard]] double speed_bound(const ForceField& ff, const SystemState& initial, double T);

/// 4 s^2 / eps^2 with s = speed_bound and eps the tube radius.
[[nodiscard]] double k_min(const Domain& dom, const ForceField& ff, const SystemState& initial, double T);

[[nodiscard]] PenaltyRun simulate_penalty(const Domain& dom, const ForceField& ff, const SystemState& initial,
                                          double T, double k, const PenaltyOptions& opts = {});

struct SweepRow
{
    double k = 0.0;
    bool valid = false;
    std::string error;
    double max_penetration = 0.0;
    double sup_gap = 0.0;
    double l1_vel_gap = 0.0;
    double rho_mass = 0.0;       // total integral of k d over [t0, T], all particles
    double rho_mass_error = 0.0; // against the reference atom + density mass
    std::size_t excursion_count = 0;
    double max_excursion_duration = 0.0;
    std::optional<double> slope_contribution; // local log-log slope to the previous valid row
};

struct SweepReport
{
    std::vector<SweepRow> rows;
    std::optional<double> penetration_slope; // least squares, valid rows only
    bool sup_gap_monotone = true;            // non-increasing along k
    bool sup_gap_improved = false;           // last valid row beats the first
};

/// `ks` strictly increasing. Runs are independent and may execute in parallel;
/// rows come back in k order either way.
[[nodiscard]] SweepReport convergence_sweep(const Domain& dom, const ForceField& ff, const SystemState& initial,
                                            double T, const std::vector<double>& ks, const Trajectory& reference,
                                            const PenaltyOptions& opts = {}, Execution exec = Execution::parallel);

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace reflectsim
