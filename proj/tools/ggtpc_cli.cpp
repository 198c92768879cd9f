#include "ggtpc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"ggtpc: federated prompt-calibration simulator on synthetic embeddings"};
    app.require_subcommand(1);

    std::string config_path;
    std::string report_dir;
    std::string only_cell;
    std::uint64_t seed_override = 0;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "run every (cell, beta, seed) session of a config");
    run->add_option("config", config_path, "experiment config JSON file")->required();
    CLI::Option* seed_opt =
        run->add_option("--seed-override", seed_override, "replace the config's seed list");
    run->add_option("--cell", only_cell, "run only the named ablation cell");
    run->add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* report =
        app.add_subcommand("report", "print the summary table and export projection files");
    report->add_option("dir", report_dir, "experiment output directory")->required();

    CLI::App* validate =
        app.add_subcommand("validate", "check a config and print its canonical form");
    validate->add_option("config", config_path, "experiment config JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) {
            ggtpc::experiment::RunOptions options;
            if (seed_opt->count() > 0) {
                options.seed_override = seed_override;
            }
            options.only_cell = only_cell;
            options.quiet = quiet;
            if (const char* root = std::getenv("GGTPC_OUTPUT_ROOT")) {
                options.output_root = std::filesystem::path(root);
            }
            const ggtpc::experiment::ExperimentConfig config =
                ggtpc::experiment::load_config(config_path);
            return ggtpc::experiment::run_experiment(config, options, std::cout);
        }
        if (app.got_subcommand(report)) {
            return ggtpc::experiment::report_experiment(report_dir, std::cout);
        }
        const ggtpc::experiment::ExperimentConfig config =
            ggtpc::experiment::load_config(config_path);
        std::cout << ggtpc::experiment::canonical_json(config);
        return 0;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    }
}
