#pragma once

// Subcommand implementations behind the reflectsim executable. Every command
// writes summary.json into its output directory, even when it fails.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace reflectsim
{

struct CommandOptions
{
    std::string command; // simulate | penalty-sweep | counterexample | validate | compare
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;

    // counterexample
    int L = 2;
    int n_max = 10;
    int samples = 2001;

    // compare: two trajectory CSVs instead of a scenario
    std::optional<std::filesystem::path> traj_a, traj_b;
    std::optional<std::string> norm;
};

enum ExitCode
{
    exit_pass = 0,
    exit_failure = 1, // a check failed or a solver raised
    exit_usage = 2    // unreadable or schema-violating input
};

/// Runs one subcommand; human-readable progress goes to `log` unless quiet.
int run_command(const CommandOptions& opts, std::ostream& log);

/// Honours REFLECTSIM_THREADS (a positive integer) by capping the OpenMP pool.
void apply_thread_cap();

} // namespace reflectsim
