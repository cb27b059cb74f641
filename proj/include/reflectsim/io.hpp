#pragma once

// Scenario files and artifact writers. Scenarios are JSON (comments allowed);
// the schema is documented in README.md. CSV floats are written with %.17g.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "reflectsim/analysis.hpp"
#include "reflectsim/counterexample.hpp"
#include "reflectsim/exact_solver.hpp"
#include "reflectsim/geometry.hpp"
#include "reflectsim/penalty_solver.hpp"

namespace reflectsim
{

using json = nlohmann::json;

/// Malformed or schema-violating scenario. The CLI maps it to exit code 2.
struct ConfigError : InputError
{
    using InputError::InputError;
};

using Window = std::pair<double, double>;

struct AnalysisRequest
{
    std::vector<Window> energy_windows;  // empty: the whole run
    int weak_form_count = 0;             // 0 disables the weak-form check
    bool weak_form_control = false;      // also test against a zeroed measure
    std::vector<Window> measure_windows; // boundary-measure mass in these windows
    TrajectoryNorm compare_norm = TrajectoryNorm::sup_pos;
    std::optional<Window> compare_window;
};

struct CheckLimits
{
    double energy = 1e-8;
    double weak_form = 1e-6;
    std::optional<Window> slope_range;   // accepted penetration slope
    std::optional<double> sup_gap;       // at the largest k
    std::optional<double> measure = {};  // |penalty mass - exact mass| in measure windows
    std::optional<double> graze_time;    // expected first grazing time
    double graze_time_tol = 1e-6;
};

struct ValidateRequest
{
    std::size_t geometry_samples = 10000;
    std::size_t lipschitz_samples = 2000;
};

struct ScenarioConfig
{
    std::string name;
    json domain_spec;
    json force_spec;
    DomainPtr domain;
    ForceFieldPtr force;
    SystemState initial;
    double T = 0.0;
    std::string solver = "exact"; // exact | penalty | both
    std::vector<double> ks;
    SolverOptions exact;
    PenaltyOptions penalty;
    AnalysisRequest analysis;
    CheckLimits checks;
    ValidateRequest validate;
    std::uint64_t seed = 1;
    std::string output_dir;
};

/// Parses a scenario. With `check_admissible`, initial positions must lie in
/// the closed domain (sliding particles on the boundary).
[[nodiscard]] ScenarioConfig parse_config(const json& j, const std::filesystem::path& base_dir,
                                          bool check_admissible = true);
[[nodiscard]] ScenarioConfig load_config(const std::filesystem::path& path, bool check_admissible = true);

[[nodiscard]] DomainPtr make_domain(const json& spec);
[[nodiscard]] ForceFieldPtr make_force(const json& spec, int n, int dim, double T,
                                       const std::filesystem::path& base_dir);

struct Admissibility
{
    int particle = 0;
    bool pass = true;
    double signed_distance = 0.0;
    std::string reason;
};

[[nodiscard]] std::vector<Admissibility> check_initial_state(const Domain& dom, const SystemState& s, double pos_tol);

/// "%.17g"
[[nodiscard]] std::string fmt17(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);

/// Columns t, particle, x0.., v0.., mode; one row per particle per sample.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// Inverse of write_trajectory_csv; the result carries no event log.
[[nodiscard]] Trajectory read_trajectory_csv(const std::filesystem::path& path);

[[nodiscard]] json to_json(const Event& e);
[[nodiscard]] json events_json(const Trajectory& traj);
[[nodiscard]] json to_json(const GeometryReport& r);
[[nodiscard]] json to_json(const EnergyReport& r);
[[nodiscard]] json to_json(const BoundaryMeasure& m);
[[nodiscard]] json to_json(const SweepReport& r);
[[nodiscard]] json to_json(const CertificateReport& r);
[[nodiscard]] json to_json(const EventAudit& a);

void write_sweep_csv(const std::filesystem::path& path, const SweepReport& r);
void write_energy_csv(const std::filesystem::path& path, const EnergyReport& r);
void write_counterexample_csv(const std::filesystem::path& path, const std::vector<CounterexampleSample>& s);

} // namespace reflectsim
