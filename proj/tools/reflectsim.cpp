#include <iostream>

#include "CLI11.hpp"

#include "reflectsim/app.hpp"

int main(int argc, char** argv)
{
    reflectsim::apply_thread_cap();

    CLI::App app{"reflectsim: particles in a domain with elastic reflection"};
    app.require_subcommand(1);

    reflectsim::CommandOptions opts;
    std::string config, out;
    std::uint64_t seed = 0;
    std::string a, b, norm;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config, "scenario file (JSON)")->check(CLI::ExistingFile);
        if (needs_config) c->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_flag("--quiet", opts.quiet, "no summary on stdout");
    };

    common(app.add_subcommand("simulate", "exact (and/or penalty) run with energy, measure and weak-form checks"), true);
    common(app.add_subcommand("penalty-sweep", "penalty runs over the k list against the exact solution"), true);
    common(app.add_subcommand("validate", "geometry identities, force Lipschitz sampling, initial state"), true);

    auto* ce = app.add_subcommand("counterexample", "build and certify the non-uniqueness example");
    common(ce, false);
    ce->add_option("--L", opts.L, "differentiability order of F")->check(CLI::PositiveNumber);
    ce->add_option("--n-max", opts.n_max, "bounce intervals checked individually")->check(CLI::NonNegativeNumber);
    ce->add_option("--samples", opts.samples, "rows in counterexample.csv");

    auto* cmp = app.add_subcommand("compare", "exact vs penalty per k, or two trajectory CSVs");
    common(cmp, false);
    cmp->add_option("--a", a, "first trajectory CSV")->check(CLI::ExistingFile);
    cmp->add_option("--b", b, "second trajectory CSV")->check(CLI::ExistingFile);
    cmp->add_option("--norm", norm, "sup_pos or l1_vel");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : reflectsim::exit_usage;
    }

    auto* sub = app.get_subcommands().front();
    opts.command = sub->get_name();
    if (!config.empty()) opts.config = config;
    if (!out.empty()) opts.out = out;
    if (sub->count("--seed")) opts.seed = seed;
    if (!a.empty()) opts.traj_a = a;
    if (!b.empty()) opts.traj_b = b;
    if (!norm.empty()) opts.norm = norm;
    return reflectsim::run_command(opts, std::cout);
}
