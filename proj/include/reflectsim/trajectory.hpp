#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reflectsim/types.hpp"

namespace reflectsim
{

enum class Mode
{
    free,
    sliding
};

enum class EventKind
{
    bounce,
    graze,
    slide_start,
    slide_end,
    zeno_abort
};

[[nodiscard]] const char* to_string(Mode m);
[[nodiscard]] const char* to_string(EventKind k);
[[nodiscard]] Mode parse_mode(const std::string& s);
[[nodiscard]] EventKind parse_event_kind(const std::string& s);

struct SystemState
{
    double t = 0.0;
    Configuration X; // m x n
    Configuration V; // m x n
    std::vector<Mode> modes; // empty means all free

    [[nodiscard]] int n_particles() const { return static_cast<int>(X.cols()); }
    [[nodiscard]] int dim() const { return static_cast<int>(X.rows()); }
};

struct Event
{
    double t_event = 0.0;
    int particle = 0;
    EventKind kind = EventKind::bounce;
    Vec v_minus;
    Vec v_plus;
    Vec normal;
    double atom_mass = 0.0; // 2 (v_minus . normal) for bounces, 0 otherwise
};

struct ModeInterval
{
    int particle = 0;
    double t_begin = 0.0;
    double t_end = 0.0;
    Mode mode = Mode::free;
};

/// Normal constraint force magnitude on a sliding particle.
struct DensitySample
{
    double t = 0.0;
    int particle = 0;
    double rho = 0.0;
    Vec normal;
};

/// Time-ordered samples. Two samples with the same time encode the left and
/// right limits of the velocity at an event; the right limit comes second.
struct Trajectory
{
    int n_particles = 0;
    int dim = 0;
    double t_begin = 0.0;
    double t_end = 0.0;    // horizon T
    double t_reached = 0.0; // last integrated time (< t_end after an abort)
    bool has_event_log = false;
    std::vector<SystemState> samples;
    std::vector<Event> events;
    std::vector<ModeInterval> mode_timeline;
    std::vector<DensitySample> sliding_rho;
    std::string termination = "horizon"; // horizon | graze_stop | zeno_abort

    /// Position/velocity by cubic Hermite interpolation. `right` selects the right
    /// limit at a duplicated (event) time.
    [[nodiscard]] SystemState state_at(double t, bool right = true) const;
};

/// Hermite interpolation between two samples with a.t < t < b.t.
[[nodiscard]] SystemState interpolate(const SystemState& a, const SystemState& b, double t);

} // namespace reflectsim
