#include "ggtpc/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ggtpc::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_g9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::runtime_error("config: " + (where.empty() ? what : where + ": " + what));
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        fail(where, "expected an object");
    }
    for (const auto& item : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end()) {
            fail(where, "unknown key \"" + item.key() + "\"");
        }
    }
}

double get_double(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        fail(where + "." + key, "expected a number");
    }
    return v.get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key, int fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        fail(where + "." + key, "expected an integer");
    }
    return v.get<int>();
}

std::uint64_t get_u64(const json& obj, const std::string& where, const char* key,
                      std::uint64_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
        fail(where + "." + key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
        fail(where + "." + key, "expected a boolean");
    }
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where, const char* key,
                       const std::string& fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
        fail(where + "." + key, "expected a string");
    }
    return v.get<std::string>();
}

bool valid_name(const std::string& name) {
    if (name.empty()) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
}

/// "0.1" -> "0p1", "1e-05" -> "1em05": filesystem-safe beta tag.
std::string beta_tag(double beta) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", beta);
    std::string tag(buf);
    for (char& c : tag) {
        if (c == '.') {
            c = 'p';
        } else if (c == '-') {
            c = 'm';
        } else if (c == '+') {
            c = 'q';
        }
    }
    return tag;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    os << text;
}

struct CellStats {
    std::vector<double> accuracy;
    std::vector<double> center_distance;
    std::vector<double> per_domain_std;
    std::vector<double> bytes_per_round;
};

double mean_of(const std::vector<double>& values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

double population_std(const std::vector<double>& values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double mu = mean_of(values);
    double acc = 0.0;
    for (double v : values) {
        acc += (v - mu) * (v - mu);
    }
    return std::sqrt(acc / static_cast<double>(values.size()));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        fields.push_back(field);
    }
    return fields;
}

} // namespace

void ExperimentConfig::validate() const {
    if (name.empty()) {
        fail("name", "must not be empty");
    }
    if (world.num_classes < 1 || world.dim < 1 || world.num_domains < 1) {
        fail("world", "num_classes, dim and num_domains must be positive");
    }
    if (world.samples_per_class_domain < 1) {
        fail("world.samples_per_class_domain", "must be positive");
    }
    if (!(world.mean_scale > 0.0) || !(world.cov_scale > 0.0)) {
        fail("world", "mean_scale and cov_scale must be positive");
    }
    if (!(world.anisotropy >= 1.0)) {
        fail("world.anisotropy", "must be >= 1");
    }
    if (world.domain_offset < 0.0) {
        fail("world.domain_offset", "must be non-negative");
    }
    if (partition.num_clients < 1) {
        fail("partition.num_clients", "must be positive");
    }
    if (!(partition.beta > 0.0)) {
        fail("partition.beta", "must be positive");
    }
    if (partition.scheme == synthdata::PartitionScheme::one_domain_one_client &&
        partition.num_clients != world.num_domains) {
        fail("partition", "one_domain_one_client needs num_clients == num_domains");
    }
    gpcl.validate(world.dim);
    train.validate();
    if (rounds < 0) {
        fail("rounds", "must be non-negative");
    }
    if (!(temperature > 0.0)) {
        fail("temperature", "must be positive");
    }
    if (!(coverage > 0.0) || coverage > 1.0) {
        fail("coverage", "must be in (0, 1]");
    }
    if (!(participation_fraction > 0.0) || participation_fraction > 1.0) {
        fail("participation_fraction", "must be in (0, 1]");
    }
    if (test_samples_per_class_domain < 0) {
        fail("test_samples_per_class_domain", "must be non-negative");
    }
    if (seeds.empty()) {
        fail("seeds", "must not be empty");
    }
    for (double beta : beta_sweep) {
        if (!(beta > 0.0)) {
            fail("beta_sweep", "every beta must be positive");
        }
    }
    if (cells.empty()) {
        fail("cells", "must not be empty");
    }
    std::set<std::string> names;
    for (const CellSpec& cell : cells) {
        if (!valid_name(cell.name)) {
            fail("cells", "cell names must be non-empty [A-Za-z0-9_-]+");
        }
        if (!names.insert(cell.name).second) {
            fail("cells", "duplicate cell name \"" + cell.name + "\"");
        }
    }
    if (output_dir.empty()) {
        fail("output_dir", "must not be empty");
    }
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + err.what());
    }
    check_keys(root, "",
               {"name", "world", "partition", "gpcl", "train", "rounds", "temperature",
                "coverage", "refresh_every_round", "participation_fraction",
                "test_samples_per_class_domain", "seeds", "beta_sweep", "cells", "output_dir"});

    ExperimentConfig cfg;
    cfg.name = get_string(root, "", "name", cfg.name);

    if (root.contains("world")) {
        const json& w = root.at("world");
        check_keys(w, "world",
                   {"num_classes", "dim", "num_domains", "samples_per_class_domain", "mean_scale",
                    "cov_scale", "anisotropy", "domain_offset", "normalize", "seed"});
        cfg.world.num_classes = get_int(w, "world", "num_classes", cfg.world.num_classes);
        cfg.world.dim = get_int(w, "world", "dim", cfg.world.dim);
        cfg.world.num_domains = get_int(w, "world", "num_domains", cfg.world.num_domains);
        cfg.world.samples_per_class_domain =
            get_int(w, "world", "samples_per_class_domain", cfg.world.samples_per_class_domain);
        cfg.world.mean_scale = get_double(w, "world", "mean_scale", cfg.world.mean_scale);
        cfg.world.cov_scale = get_double(w, "world", "cov_scale", cfg.world.cov_scale);
        cfg.world.anisotropy = get_double(w, "world", "anisotropy", cfg.world.anisotropy);
        cfg.world.domain_offset = get_double(w, "world", "domain_offset", cfg.world.domain_offset);
        cfg.world.normalize = get_bool(w, "world", "normalize", cfg.world.normalize);
        cfg.world.seed = get_u64(w, "world", "seed", cfg.world.seed);
    }

    if (root.contains("partition")) {
        const json& p = root.at("partition");
        check_keys(p, "partition", {"scheme", "beta", "num_clients", "seed"});
        const std::string scheme =
            get_string(p, "partition", "scheme", synthdata::to_string(cfg.partition.scheme));
        try {
            cfg.partition.scheme = synthdata::partition_scheme_from_string(scheme);
        } catch (const std::exception& err) {
            fail("partition.scheme", err.what());
        }
        cfg.partition.beta = get_double(p, "partition", "beta", cfg.partition.beta);
        cfg.partition.num_clients = get_int(p, "partition", "num_clients", cfg.partition.num_clients);
        cfg.partition.seed = get_u64(p, "partition", "seed", cfg.partition.seed);
    }

    if (root.contains("gpcl")) {
        const json& g = root.at("gpcl");
        check_keys(g, "gpcl", {"top_k", "scale"});
        cfg.gpcl.top_k = get_int(g, "gpcl", "top_k", cfg.gpcl.top_k);
        cfg.gpcl.scale = get_double(g, "gpcl", "scale", cfg.gpcl.scale);
    }

    if (root.contains("train")) {
        const json& t = root.at("train");
        check_keys(t, "train",
                   {"learning_rate", "momentum", "weight_decay", "batch_size", "local_steps"});
        cfg.train.learning_rate = get_double(t, "train", "learning_rate", cfg.train.learning_rate);
        cfg.train.momentum = get_double(t, "train", "momentum", cfg.train.momentum);
        cfg.train.weight_decay = get_double(t, "train", "weight_decay", cfg.train.weight_decay);
        cfg.train.batch_size = get_int(t, "train", "batch_size", cfg.train.batch_size);
        cfg.train.local_steps = get_int(t, "train", "local_steps", cfg.train.local_steps);
    }

    cfg.rounds = get_int(root, "", "rounds", cfg.rounds);
    cfg.temperature = get_double(root, "", "temperature", cfg.temperature);
    cfg.coverage = get_double(root, "", "coverage", cfg.coverage);
    cfg.refresh_every_round = get_bool(root, "", "refresh_every_round", cfg.refresh_every_round);
    cfg.participation_fraction =
        get_double(root, "", "participation_fraction", cfg.participation_fraction);
    cfg.test_samples_per_class_domain =
        get_int(root, "", "test_samples_per_class_domain", cfg.test_samples_per_class_domain);

    if (root.contains("seeds")) {
        const json& s = root.at("seeds");
        if (!s.is_array()) {
            fail("seeds", "expected an array");
        }
        cfg.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const json& v = s.at(i);
            if (!(v.is_number_unsigned() ||
                  (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
                fail("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
            }
            cfg.seeds.push_back(v.get<std::uint64_t>());
        }
    }

    if (root.contains("beta_sweep")) {
        const json& b = root.at("beta_sweep");
        if (!b.is_array()) {
            fail("beta_sweep", "expected an array");
        }
        cfg.beta_sweep.clear();
        for (std::size_t i = 0; i < b.size(); ++i) {
            const json& v = b.at(i);
            if (!v.is_number()) {
                fail("beta_sweep[" + std::to_string(i) + "]", "expected a number");
            }
            cfg.beta_sweep.push_back(v.get<double>());
        }
    }

    if (root.contains("cells")) {
        const json& cs = root.at("cells");
        if (!cs.is_array()) {
            fail("cells", "expected an array");
        }
        cfg.cells.clear();
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const std::string where = "cells[" + std::to_string(i) + "]";
            const json& c = cs.at(i);
            check_keys(c, where, {"name", "gpcl", "sampler", "prototypes"});
            CellSpec cell;
            cell.name = get_string(c, where, "name", "");
            cell.gpcl = get_bool(c, where, "gpcl", false);
            cell.sampler = get_bool(c, where, "sampler", false);
            cell.prototypes = get_bool(c, where, "prototypes", false);
            cfg.cells.push_back(std::move(cell));
        }
    } else {
        cfg.cells = {CellSpec{"uncalibrated", false, false, false},
                     CellSpec{"calibrated", true, true, false}};
    }

    cfg.output_dir = get_string(root, "", "output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open config file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return parse_config(buffer.str());
}

std::string canonical_json(const ExperimentConfig& config) {
    json root;
    root["name"] = config.name;
    root["world"] = {{"num_classes", config.world.num_classes},
                     {"dim", config.world.dim},
                     {"num_domains", config.world.num_domains},
                     {"samples_per_class_domain", config.world.samples_per_class_domain},
                     {"mean_scale", config.world.mean_scale},
                     {"cov_scale", config.world.cov_scale},
                     {"anisotropy", config.world.anisotropy},
                     {"domain_offset", config.world.domain_offset},
                     {"normalize", config.world.normalize},
                     {"seed", config.world.seed}};
    root["partition"] = {{"scheme", synthdata::to_string(config.partition.scheme)},
                         {"beta", config.partition.beta},
                         {"num_clients", config.partition.num_clients},
                         {"seed", config.partition.seed}};
    root["gpcl"] = {{"top_k", config.gpcl.top_k}, {"scale", config.gpcl.scale}};
    root["train"] = {{"learning_rate", config.train.learning_rate},
                     {"momentum", config.train.momentum},
                     {"weight_decay", config.train.weight_decay},
                     {"batch_size", config.train.batch_size},
                     {"local_steps", config.train.local_steps}};
    root["rounds"] = config.rounds;
    root["temperature"] = config.temperature;
    root["coverage"] = config.coverage;
    root["refresh_every_round"] = config.refresh_every_round;
    root["participation_fraction"] = config.participation_fraction;
    root["test_samples_per_class_domain"] = config.test_samples_per_class_domain;
    root["seeds"] = config.seeds;
    root["beta_sweep"] = config.beta_sweep;
    json cells = json::array();
    for (const CellSpec& cell : config.cells) {
        cells.push_back({{"name", cell.name},
                         {"gpcl", cell.gpcl},
                         {"sampler", cell.sampler},
                         {"prototypes", cell.prototypes}});
    }
    root["cells"] = std::move(cells);
    root["output_dir"] = config.output_dir;
    return root.dump(2) + "\n";
}

federation::SessionConfig make_session_config(const ExperimentConfig& config, const CellSpec& cell,
                                              double beta, std::uint64_t seed) {
    synthdata::WorldRecipe recipe = config.world;
    recipe.seed = mix_seed(config.world.seed, seed);

    federation::SessionConfig session;
    session.world = synthdata::make_global_spec(recipe);
    session.test_samples_per_class_domain = config.test_samples_per_class_domain;
    session.partition = config.partition;
    session.partition.beta = beta;
    session.partition.seed = mix_seed(config.partition.seed, seed);
    session.gpcl = config.gpcl;
    session.gpcl.enabled = cell.gpcl;
    session.selection.coverage = config.coverage;
    session.inverse_frequency_sampler = cell.sampler;
    session.prototypes_enabled = cell.prototypes;
    session.train = config.train;
    session.temperature = config.temperature;
    session.rounds = config.rounds;
    session.master_seed = seed;
    session.refresh_every_round = config.refresh_every_round;
    session.participation_fraction = config.participation_fraction;
    return session;
}

fs::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
    const fs::path configured(config.output_dir);
    if (options.output_root) {
        return *options.output_root / configured.relative_path();
    }
    return configured;
}

fs::path run_subdir(const CellSpec& cell, double beta, std::uint64_t seed) {
    return fs::path("cells") / cell.name / ("beta_" + beta_tag(beta)) /
           ("seed_" + std::to_string(seed));
}

std::string rounds_csv(const std::vector<federation::RoundRecord>& records, int num_domains) {
    std::string out = "round,accuracy,mean_center_distance,per_domain_std,bytes_transmitted";
    for (int d = 0; d < num_domains; ++d) {
        out += ",acc_domain_" + std::to_string(d);
    }
    out += "\n";
    for (const federation::RoundRecord& record : records) {
        out += std::to_string(record.round_index);
        out += "," + format_g9(record.accuracy);
        out += "," + format_g9(record.mean_center_distance);
        out += "," + format_g9(record.per_domain_std);
        out += "," + std::to_string(record.bytes_transmitted);
        for (int d = 0; d < num_domains; ++d) {
            auto it = record.per_domain_accuracy.find(d);
            out += "," + format_g9(it == record.per_domain_accuracy.end() ? 0.0 : it->second);
        }
        out += "\n";
    }
    return out;
}

int run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& log) {
    ExperimentConfig effective = config;
    if (options.seed_override) {
        effective.seeds = {*options.seed_override};
    }
    if (!options.only_cell.empty()) {
        std::vector<CellSpec> kept;
        for (const CellSpec& cell : effective.cells) {
            if (cell.name == options.only_cell) {
                kept.push_back(cell);
            }
        }
        if (kept.empty()) {
            throw std::runtime_error("no cell named \"" + options.only_cell + "\" in the config");
        }
        effective.cells = std::move(kept);
    }
    effective.validate();

    const std::vector<double> betas =
        effective.beta_sweep.empty() ? std::vector<double>{effective.partition.beta}
                                     : effective.beta_sweep;

    const fs::path out_dir = resolve_output_dir(effective, options);
    fs::create_directories(out_dir);
    write_text(out_dir / "config.canonical.json", canonical_json(effective));

    std::string summary_csv =
        "cell,beta,num_seeds,accuracy_mean,accuracy_std,center_distance_mean,"
        "center_distance_std,per_domain_std_mean,bytes_per_round_mean\n";
    std::ostringstream table;
    table << "cell                 beta      accuracy(mean+/-std)   center_dist(mean+/-std)\n";

    for (const CellSpec& cell : effective.cells) {
        for (double beta : betas) {
            CellStats stats;
            for (std::uint64_t seed : effective.seeds) {
                const fs::path run_dir = out_dir / run_subdir(cell, beta, seed);
                fs::create_directories(run_dir);
                const fs::path marker = run_dir / "INCOMPLETE";
                write_text(marker, "run in progress or aborted\n");

                const federation::SessionConfig session =
                    make_session_config(effective, cell, beta, seed);
                const federation::SessionResult result = federation::run_session(session);
                federation::write_session_outputs(run_dir, session, result);
                write_text(run_dir / "rounds.csv",
                           rounds_csv(result.records, session.world.num_domains));
                fs::remove(marker);

                double accuracy = std::numeric_limits<double>::quiet_NaN();
                double per_domain_std = std::numeric_limits<double>::quiet_NaN();
                double bytes_per_round = 0.0;
                if (!result.records.empty()) {
                    const federation::RoundRecord& last = result.records.back();
                    accuracy = last.accuracy;
                    per_domain_std = last.per_domain_std;
                    std::uint64_t bytes = 0;
                    for (const federation::RoundRecord& record : result.records) {
                        bytes += record.bytes_transmitted;
                    }
                    bytes_per_round =
                        static_cast<double>(bytes) / static_cast<double>(result.records.size());
                }
                double distance_sum = 0.0;
                for (const auto& [class_id, distance] : result.projection.center_distance) {
                    distance_sum += distance;
                }
                const double center_distance =
                    result.projection.center_distance.empty()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : distance_sum /
                              static_cast<double>(result.projection.center_distance.size());

                stats.accuracy.push_back(accuracy);
                stats.center_distance.push_back(center_distance);
                stats.per_domain_std.push_back(per_domain_std);
                stats.bytes_per_round.push_back(bytes_per_round);
                if (!options.quiet) {
                    log << "ran cell=" << cell.name << " beta=" << beta << " seed=" << seed
                        << " accuracy=" << format_g9(accuracy)
                        << " center_distance=" << format_g9(center_distance) << "\n";
                }
            }

            summary_csv += cell.name;
            summary_csv += "," + format_g9(beta);
            summary_csv += "," + std::to_string(effective.seeds.size());
            summary_csv += "," + format_g9(mean_of(stats.accuracy));
            summary_csv += "," + format_g9(population_std(stats.accuracy));
            summary_csv += "," + format_g9(mean_of(stats.center_distance));
            summary_csv += "," + format_g9(population_std(stats.center_distance));
            summary_csv += "," + format_g9(mean_of(stats.per_domain_std));
            summary_csv += "," + format_g9(mean_of(stats.bytes_per_round)) + "\n";

            char row[160];
            std::snprintf(row, sizeof(row), "%-20s %-9g %10.6f +/- %-8.6f %10.6f +/- %-8.6f\n",
                          cell.name.c_str(), beta, mean_of(stats.accuracy),
                          population_std(stats.accuracy), mean_of(stats.center_distance),
                          population_std(stats.center_distance));
            table << row;
        }
    }

    write_text(out_dir / "summary.csv", summary_csv);
    write_text(out_dir / "summary.txt", table.str());
    if (!options.quiet) {
        log << table.str();
        log << "outputs written to " << out_dir.string() << "\n";
    }
    return 0;
}

int report_experiment(const fs::path& dir, std::ostream& out) {
    const fs::path config_path = dir / "config.canonical.json";
    const fs::path summary_path = dir / "summary.csv";
    if (!fs::exists(config_path) || !fs::exists(summary_path)) {
        throw std::runtime_error(
            "incomplete experiment directory " + dir.string() +
            ": expected config.canonical.json, summary.csv and cells/ as written by `run`");
    }
    const ExperimentConfig config = load_config(config_path);
    const std::vector<double> betas = config.beta_sweep.empty()
                                          ? std::vector<double>{config.partition.beta}
                                          : config.beta_sweep;

    // Verify completeness before printing anything: every (cell, beta, seed)
    // run directory must exist, be finished, and hold exactly `rounds`
    // records.
    std::vector<std::string> problems;
    for (const CellSpec& cell : config.cells) {
        for (double beta : betas) {
            for (std::uint64_t seed : config.seeds) {
                const fs::path run_dir = dir / run_subdir(cell, beta, seed);
                const fs::path records_path = run_dir / "records.jsonl";
                if (!fs::exists(run_dir) || !fs::exists(records_path)) {
                    problems.push_back("missing run " + run_dir.string());
                    continue;
                }
                if (fs::exists(run_dir / "INCOMPLETE")) {
                    problems.push_back("aborted run " + run_dir.string());
                    continue;
                }
                std::ifstream is(records_path, std::ios::binary);
                std::size_t lines = 0;
                std::string line;
                while (std::getline(is, line)) {
                    if (!line.empty()) {
                        ++lines;
                    }
                }
                if (lines != static_cast<std::size_t>(config.rounds)) {
                    problems.push_back("run " + run_dir.string() + " has " +
                                       std::to_string(lines) + " records, expected " +
                                       std::to_string(config.rounds));
                }
            }
        }
    }
    if (!problems.empty()) {
        std::string message = "experiment directory is incomplete:";
        for (const std::string& problem : problems) {
            message += "\n  " + problem;
        }
        throw std::runtime_error(message);
    }

    std::ifstream summary(summary_path, std::ios::binary);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(summary, line)) {
        if (!line.empty()) {
            rows.push_back(split_csv_line(line));
        }
    }
    if (rows.empty()) {
        throw std::runtime_error("summary.csv is empty in " + dir.string());
    }
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) {
            widths.resize(row.size(), 0);
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            widths[i] = std::max(widths[i], row[i].size());
        }
    }
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "  " : "");
            out << row[i] << std::string(widths[i] - row[i].size(), ' ');
        }
        out << "\n";
    }

    const fs::path projections = dir / "projections";
    fs::create_directories(projections);
    for (const CellSpec& cell : config.cells) {
        for (double beta : betas) {
            for (std::uint64_t seed : config.seeds) {
                const fs::path run_dir = dir / run_subdir(cell, beta, seed);
                const std::string stem =
                    cell.name + "_beta_" + beta_tag(beta) + "_seed_" + std::to_string(seed);
                fs::copy_file(run_dir / "final" / "projection.csv",
                              projections / (stem + "_final.csv"),
                              fs::copy_options::overwrite_existing);
                fs::copy_file(run_dir / "final" / "projection_initial.csv",
                              projections / (stem + "_initial.csv"),
                              fs::copy_options::overwrite_existing);
            }
        }
    }
    out << "projection files exported to " << projections.string() << "\n";
    return 0;
}

} // namespace ggtpc::experiment
