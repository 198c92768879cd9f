#ifndef GGTPC_EXPERIMENT_HPP
#define GGTPC_EXPERIMENT_HPP

#include "ggtpc/calibrate.hpp"
#include "ggtpc/federation.hpp"
#include "ggtpc/promptmodel.hpp"
#include "ggtpc/synthdata.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ggtpc::experiment {

/// One ablation cell: which calibration pieces are active.
struct CellSpec {
    std::string name;
    bool gpcl = false;
    bool sampler = false;
    bool prototypes = false;
};

/// Declarative experiment description, parsed from a strict JSON file:
/// unknown keys are an error, omitted keys take the documented defaults.
struct ExperimentConfig {
    std::string name = "experiment";
    synthdata::WorldRecipe world;   // per-run seed is mixed with the run seed
    synthdata::PartitionConfig partition;
    calibrate::GpclConfig gpcl;     // enabled flag is overridden per cell
    promptmodel::TrainConfig train;
    int rounds = 10;
    double temperature = 30.0;
    double coverage = 0.8;
    bool refresh_every_round = false;
    double participation_fraction = 1.0;
    int test_samples_per_class_domain = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> beta_sweep; // empty = just partition.beta
    std::vector<CellSpec> cells;
    std::string output_dir = "out";

    void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical re-serialization: every field explicit, keys sorted, 2-space
/// indent. parse(canonical(cfg)) == cfg.
std::string canonical_json(const ExperimentConfig& config);

/// The session a given (cell, beta, seed) runs: world and partition seeds are
/// mixed with the run seed so paired cells share data while distinct seeds
/// get distinct worlds; the cell switches select the calibration pieces.
federation::SessionConfig make_session_config(const ExperimentConfig& config,
                                              const CellSpec& cell, double beta,
                                              std::uint64_t seed);

struct RunOptions {
    std::optional<std::uint64_t> seed_override; // replaces the seeds list
    std::string only_cell;                      // empty = all cells
    bool quiet = false;
    /// Overrides the config's output_dir root; normally from the
    /// GGTPC_OUTPUT_ROOT environment variable.
    std::optional<std::filesystem::path> output_root;
};

/// Directory the experiment writes into, after applying any root override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const RunOptions& options);

/// Runs every (cell, beta, seed) session, writing per-run outputs, a
/// summary.csv (mean/std over seeds per cell and beta), and the canonical
/// config. Returns the process exit status (0 = success). A run directory
/// holds an INCOMPLETE marker while its session is in flight; markers left
/// behind flag aborted runs.
int run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& log);

/// Prints an aligned per-(cell, beta) table from summary.csv and copies the
/// per-run projection files into <dir>/projections/. Nonzero on missing or
/// incomplete directories.
int report_experiment(const std::filesystem::path& dir, std::ostream& out);

/// Subdirectory for one run, relative to the experiment output dir.
std::filesystem::path run_subdir(const CellSpec& cell, double beta, std::uint64_t seed);

/// Fixed-column per-round CSV (floats with 9 significant digits).
std::string rounds_csv(const std::vector<federation::RoundRecord>& records, int num_domains);

} // namespace ggtpc::experiment

#endif
