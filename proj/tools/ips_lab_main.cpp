#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "ipslab/errors.hpp"
#include "ipslab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Interacting particle system lab: contact-process couplings, "
                 "regeneration estimators, and oriented percolation experiments"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir;
    std::string seed_str, reps_str, workers_str;
    bool list = false;
    app.add_flag("--list", list, "List experiments and exit");

    std::vector<CLI::App*> subs;
    for (const auto& name : ipslab::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "Run the " + name + " experiment");
        sub->add_option("--config", config_path, "key=value config file");
        sub->add_option("--seed", seed_str, "master seed (overrides the file)");
        sub->add_option("--reps", reps_str, "replica count (overrides the file)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers_str, "worker thread count");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& name : ipslab::experiment_names()) std::printf("%s\n", name.c_str());
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::fprintf(stderr, "usage: ips-lab <experiment> --config <file> [--seed N] [--reps N] "
                             "[--out DIR] [--workers N]\nrun 'ips-lab --list' for experiments\n");
        return 2;
    }

    try {
        const std::string experiment = app.get_subcommands().front()->get_name();
        std::map<std::string, std::string> raw;
        if (!config_path.empty()) raw = ipslab::parse_config_file(config_path);
        // Command-line flags override file keys.
        if (!seed_str.empty()) raw["seed"] = seed_str;
        if (!reps_str.empty()) raw["reps"] = reps_str;
        if (!workers_str.empty()) raw["workers"] = workers_str;
        if (!out_dir.empty()) raw["out"] = out_dir;

        ipslab::ExperimentConfig cfg = ipslab::resolve_config(experiment, raw);
        ipslab::ExperimentResult result = ipslab::run_experiment(cfg);
        ipslab::write_result(result, cfg.output_dir);
        std::fprintf(stderr, "%s: %s in %.2f s -> %s\n", experiment.c_str(),
                     result.pass ? "pass" : "FAIL", result.wall_seconds,
                     cfg.output_dir.c_str());
        return result.pass ? 0 : 1;
    } catch (const ipslab::usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 3;
    }
}
