#include "ggtpc/federation.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ggtpc::federation {

namespace {

// Seed-derivation salts; arbitrary but fixed forever.
constexpr std::uint64_t kTestPoolSalt = 0x74657374ULL;      // test pool world
constexpr std::uint64_t kInitSalt = 0x696e6974ULL;          // prompt table init
constexpr std::uint64_t kTrainSalt = 0x7472616eULL;         // per-round client rngs
constexpr std::uint64_t kParticipationSalt = 0x70617274ULL; // round participant draw

constexpr int kServer = -1;

std::string format_g9(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffU));
    }
}

} // namespace

std::string to_string(MessageType type) {
    switch (type) {
    case MessageType::stats_request: return "stats_request";
    case MessageType::stats_upload: return "stats_upload";
    case MessageType::shape_broadcast: return "shape_broadcast";
    case MessageType::prototype_broadcast: return "prototype_broadcast";
    case MessageType::prompt_upload: return "prompt_upload";
    case MessageType::prompt_broadcast: return "prompt_broadcast";
    }
    throw std::logic_error("unknown message type");
}

void MessageLog::record(MessageType type, int sender, int receiver, wire::Bytes payload) {
    total_bytes += payload.size();
    if (capture) {
        messages.push_back(Message{type, sender, receiver, std::move(payload)});
    }
}

bool log_contains_embedding(const MessageLog& log, const Vector& v) {
    if (v.size() == 0) {
        return false;
    }
    std::vector<std::uint8_t> needle(static_cast<std::size_t>(v.size()) * sizeof(double));
    std::memcpy(needle.data(), v.data(), needle.size());
    for (const Message& msg : log.messages) {
        if (msg.payload.size() < needle.size()) {
            continue;
        }
        auto it = std::search(msg.payload.begin(), msg.payload.end(), needle.begin(), needle.end());
        if (it != msg.payload.end()) {
            return true;
        }
    }
    return false;
}

void RoundPlan::validate() const {
    if (round_index < 0) {
        throw std::invalid_argument("round index must be non-negative");
    }
    if (participants.empty()) {
        throw std::invalid_argument("round plan has no participants");
    }
    for (std::size_t i = 0; i < participants.size(); ++i) {
        if (participants[i] < 0) {
            throw std::invalid_argument("participant ids must be non-negative");
        }
        if (i > 0 && participants[i] <= participants[i - 1]) {
            throw std::invalid_argument("participants must be strictly ascending");
        }
    }
}

promptmodel::PromptTable aggregate_prompts(
    const std::vector<std::pair<promptmodel::PromptTable, std::uint64_t>>& uploads) {
    if (uploads.empty()) {
        throw std::invalid_argument("nothing to aggregate");
    }
    const auto& first = uploads.front().first;
    first.validate();
    double total = 0.0;
    for (const auto& [table, weight] : uploads) {
        if (table.num_classes() != first.num_classes() || table.dim() != first.dim()) {
            throw std::invalid_argument("uploaded tables disagree on shape");
        }
        if (table.temperature != first.temperature) {
            throw std::invalid_argument("uploaded tables disagree on temperature");
        }
        total += static_cast<double>(weight);
    }
    promptmodel::PromptTable out;
    out.temperature = first.temperature;
    out.vectors = Matrix::Zero(first.vectors.rows(), first.vectors.cols());
    if (total > 0.0) {
        for (const auto& [table, weight] : uploads) {
            out.vectors += (static_cast<double>(weight) / total) * table.vectors;
        }
    } else {
        // All participants were empty; fall back to the unweighted mean so the
        // round is still well-defined.
        for (const auto& [table, weight] : uploads) {
            out.vectors += table.vectors / static_cast<double>(uploads.size());
        }
    }
    return out;
}

promptmodel::PromptTable FedAvgAggregator::aggregate(const std::vector<PromptUpload>& uploads,
                                                     double temperature) const {
    std::vector<std::pair<promptmodel::PromptTable, std::uint64_t>> pairs;
    pairs.reserve(uploads.size());
    for (const PromptUpload& up : uploads) {
        pairs.emplace_back(up.table, up.sample_count);
    }
    promptmodel::PromptTable out = aggregate_prompts(pairs);
    if (out.temperature != temperature) {
        throw std::invalid_argument("aggregated temperature does not match the session");
    }
    return out;
}

void SessionConfig::validate() const {
    world.validate();
    if (test_samples_per_class_domain < 0) {
        throw std::invalid_argument("test sample count must be non-negative");
    }
    if (partition.num_clients < 1) {
        throw std::invalid_argument("at least one client is required");
    }
    gpcl.validate(world.dim);
    if (selection.coverage <= 0.0 || selection.coverage > 1.0) {
        throw std::invalid_argument("coverage must be in (0, 1]");
    }
    train.validate();
    if (temperature <= 0.0) {
        throw std::invalid_argument("temperature must be positive");
    }
    if (rounds < 0) {
        throw std::invalid_argument("round count must be non-negative");
    }
    if (!(participation_fraction > 0.0) || participation_fraction > 1.0) {
        throw std::invalid_argument("participation fraction must be in (0, 1]");
    }
}

SessionState init_session(const SessionConfig& config, bool capture_messages) {
    config.validate();
    SessionState state;
    state.config = config;
    state.log.capture = capture_messages;

    const synthdata::Pool train_pool = synthdata::generate_global(config.world);
    state.clients = synthdata::partition(train_pool, config.partition);

    synthdata::GlobalSpec test_spec = config.world;
    test_spec.seed = mix_seed(config.world.seed, kTestPoolSalt);
    if (config.test_samples_per_class_domain > 0) {
        test_spec.samples_per_class_domain = config.test_samples_per_class_domain;
    }
    state.test_pool = synthdata::generate_global(test_spec);

    for (int c = 0; c < config.world.num_classes; ++c) {
        state.true_means.emplace(c, synthdata::true_class_mean(config.world, c));
    }

    state.initial_table = promptmodel::init_table(config.world.num_classes, config.world.dim,
                                                  config.temperature,
                                                  mix_seed(config.master_seed, kInitSalt));
    state.global_table = state.initial_table;
    state.next_round = 0;
    return state;
}

RoundPlan make_plan(const SessionState& state, int round_index) {
    const SessionConfig& cfg = state.config;
    RoundPlan plan;
    plan.round_index = round_index;
    plan.refresh_stats = (round_index == 0) || cfg.refresh_every_round;

    const int num_clients = static_cast<int>(state.clients.size());
    std::vector<int> ids(static_cast<std::size_t>(num_clients));
    std::iota(ids.begin(), ids.end(), 0);
    if (cfg.participation_fraction < 1.0) {
        int take = static_cast<int>(cfg.participation_fraction * num_clients);
        take = std::clamp(take, 1, num_clients);
        Rng rng(mix_seed(cfg.master_seed, kParticipationSalt,
                         static_cast<std::uint64_t>(round_index)));
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(static_cast<std::size_t>(take));
        std::sort(ids.begin(), ids.end());
    }
    plan.participants = std::move(ids);
    return plan;
}

namespace {

/// Statistics collection: request, per-class triplet uploads, server-side
/// reconstruction and eigendecomposition, then shape (and optional
/// prototype) broadcasts. Rebuilds state.shapes from scratch.
void refresh_statistics(SessionState& state, const RoundPlan& plan) {
    const SessionConfig& cfg = state.config;
    const int dim = cfg.world.dim;

    // class id -> client id -> triplet, reconstructed from the payloads so
    // only wire-visible data feeds the server side.
    std::map<int, std::map<int, fedstats::StatTriplet>> by_class;
    for (int client_id : plan.participants) {
        state.log.record(MessageType::stats_request, kServer, client_id, {});
        const auto& dataset = state.clients.at(static_cast<std::size_t>(client_id));
        for (const auto& [class_id, triplet] : fedstats::local_stats(dataset)) {
            wire::Bytes payload = wire::encode_triplet(class_id, triplet);
            auto [decoded_class, decoded] = wire::decode_triplet(payload, dim);
            state.log.record(MessageType::stats_upload, client_id, kServer, std::move(payload));
            by_class[decoded_class].emplace(client_id, std::move(decoded));
        }
    }

    // Upsert per class: a class nobody reported keeps its previous shape (if
    // any), so a transiently missing class degrades to stale-but-usable
    // geometry instead of dropping calibration mid-run.
    for (const auto& [class_id, triplets] : by_class) {
        std::map<int, std::uint64_t> counts;
        for (const auto& [client_id, triplet] : triplets) {
            counts.emplace(client_id, triplet.n);
        }
        const std::vector<int> selected = fedstats::select_clients(counts, cfg.selection);
        if (selected.empty()) {
            continue;
        }
        const fedstats::GlobalMoments moments = fedstats::reconstruct_global(triplets, selected);
        state.shapes.insert_or_assign(class_id,
                                      fedstats::extract_shape(moments.mean, moments.cov,
                                                              moments.total_n, class_id));
    }

    for (int client_id : plan.participants) {
        for (const auto& [class_id, shape] : state.shapes) {
            state.log.record(MessageType::shape_broadcast, kServer, client_id,
                             wire::encode_shape(shape));
        }
    }

    if (!cfg.prototypes_enabled) {
        return;
    }

    // Per-(class, domain) prototypes: count-weighted means over every
    // uploaded triplet from clients of that domain. Each client receives the
    // prototypes of the other domains only.
    std::map<std::pair<int, int>, std::pair<Vector, std::uint64_t>> sums;
    for (const auto& [class_id, triplets] : by_class) {
        for (const auto& [client_id, triplet] : triplets) {
            if (triplet.n == 0) {
                continue;
            }
            const int domain = state.clients.at(static_cast<std::size_t>(client_id)).domain_id;
            auto key = std::make_pair(class_id, domain);
            auto it = sums.find(key);
            if (it == sums.end()) {
                sums.emplace(key, std::make_pair(static_cast<double>(triplet.n) * triplet.mean,
                                                 triplet.n));
            } else {
                it->second.first += static_cast<double>(triplet.n) * triplet.mean;
                it->second.second += triplet.n;
            }
        }
    }

    state.prototypes_by_client.clear();
    for (int client_id : plan.participants) {
        const int own_domain = state.clients.at(static_cast<std::size_t>(client_id)).domain_id;
        calibrate::PrototypeSet set;
        set.owner_domain = own_domain;
        for (const auto& [key, acc] : sums) {
            if (key.second == own_domain) {
                continue;
            }
            calibrate::PrototypeEntry entry;
            entry.class_id = key.first;
            entry.domain_id = key.second;
            entry.prototype = acc.first / static_cast<double>(acc.second);
            set.entries.push_back(std::move(entry));
        }
        wire::Bytes payload = wire::encode_prototypes(set, dim);
        calibrate::PrototypeSet decoded = wire::decode_prototypes(payload, dim);
        state.log.record(MessageType::prototype_broadcast, kServer, client_id,
                         std::move(payload));
        state.prototypes_by_client.insert_or_assign(client_id, std::move(decoded));
    }
}

} // namespace

RoundRecord run_round(SessionState& state, const RoundPlan& plan) {
    plan.validate();
    const SessionConfig& cfg = state.config;
    for (int client_id : plan.participants) {
        if (client_id >= static_cast<int>(state.clients.size())) {
            throw std::invalid_argument("participant id out of range");
        }
    }

    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t bytes_before = state.log.total_bytes;

    if (plan.refresh_stats) {
        refresh_statistics(state, plan);
    }

    std::vector<PromptUpload> uploads;
    uploads.reserve(plan.participants.size());
    for (int client_id : plan.participants) {
        const auto& dataset = state.clients.at(static_cast<std::size_t>(client_id));
        const calibrate::PrototypeSet* prototypes = nullptr;
        if (cfg.prototypes_enabled) {
            auto it = state.prototypes_by_client.find(client_id);
            if (it != state.prototypes_by_client.end() && !it->second.entries.empty()) {
                prototypes = &it->second;
            }
        }
        PromptUpload upload;
        upload.client_id = client_id;
        upload.sample_count = dataset.total_samples();
        try {
            const calibrate::SamplerState sampler =
                calibrate::build_sampler(dataset, prototypes, cfg.inverse_frequency_sampler);
            if (sampler.classes.empty()) {
                upload.table = state.global_table; // nothing to train on
            } else {
                Rng rng(mix_seed(mix_seed(cfg.master_seed, kTrainSalt),
                                 static_cast<std::uint64_t>(plan.round_index),
                                 static_cast<std::uint64_t>(client_id)));
                upload.table =
                    promptmodel::local_train(state.global_table, dataset, state.shapes, cfg.gpcl,
                                             sampler, prototypes, cfg.train, rng);
            }
        } catch (const std::exception& err) {
            throw std::runtime_error("round " + std::to_string(plan.round_index) +
                                     " aborted by client " + std::to_string(client_id) + ": " +
                                     err.what());
        }
        state.log.record(MessageType::prompt_upload, client_id, kServer,
                         wire::encode_prompt_table(upload.table));
        uploads.push_back(std::move(upload));
    }

    static const FedAvgAggregator default_aggregator;
    const Aggregator& aggregator = cfg.aggregator ? *cfg.aggregator : default_aggregator;
    promptmodel::PromptTable next = aggregator.aggregate(uploads, cfg.temperature);
    for (int client_id : plan.participants) {
        state.log.record(MessageType::prompt_broadcast, kServer, client_id,
                         wire::encode_prompt_table(next));
    }
    state.global_table = std::move(next);
    state.next_round = plan.round_index + 1;

    const promptmodel::EvalMetrics metrics =
        promptmodel::evaluate(state.global_table, state.test_pool, true);
    const std::map<int, double> distances =
        promptmodel::center_distances(state.global_table, state.true_means);

    RoundRecord record;
    record.round_index = plan.round_index;
    record.accuracy = metrics.top1;
    record.per_domain_accuracy = metrics.per_domain_accuracy;
    record.per_domain_std = metrics.per_domain_std;
    double sum = 0.0;
    for (const auto& [class_id, distance] : distances) {
        sum += distance;
    }
    record.mean_center_distance = distances.empty() ? 0.0 : sum / distances.size();
    record.bytes_transmitted = state.log.total_bytes - bytes_before;
    record.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return record;
}

SessionResult run_session(const SessionConfig& config, bool capture_messages) {
    SessionState state = init_session(config, capture_messages);
    SessionResult result;
    result.initial_table = state.initial_table;
    result.records.reserve(static_cast<std::size_t>(config.rounds));
    for (int round_index = 0; round_index < config.rounds; ++round_index) {
        const RoundPlan plan = make_plan(state, round_index);
        result.records.push_back(run_round(state, plan));
    }
    result.final_table = state.global_table;
    result.shapes = state.shapes;
    result.projection =
        promptmodel::center_distance_report(state.global_table, state.true_means, state.test_pool);
    result.projection_initial = promptmodel::center_distance_report(
        result.initial_table, state.true_means, state.test_pool);
    result.log = std::move(state.log);
    return result;
}

std::string round_records_jsonl(const std::vector<RoundRecord>& records) {
    std::string out;
    for (const RoundRecord& record : records) {
        nlohmann::json line;
        line["round"] = record.round_index;
        line["accuracy"] = record.accuracy;
        nlohmann::json per_domain = nlohmann::json::object();
        for (const auto& [domain, accuracy] : record.per_domain_accuracy) {
            per_domain[std::to_string(domain)] = accuracy;
        }
        line["per_domain_accuracy"] = std::move(per_domain);
        line["per_domain_std"] = record.per_domain_std;
        line["mean_center_distance"] = record.mean_center_distance;
        line["bytes_transmitted"] = record.bytes_transmitted;
        out += line.dump();
        out += '\n';
    }
    return out;
}

void write_session_outputs(const std::filesystem::path& dir, const SessionConfig& config,
                           const SessionResult& result) {
    namespace fs = std::filesystem;
    const fs::path final_dir = dir / "final";
    fs::create_directories(final_dir);

    {
        std::ofstream os(dir / "records.jsonl", std::ios::binary);
        if (!os) {
            throw std::runtime_error("cannot write " + (dir / "records.jsonl").string());
        }
        os << round_records_jsonl(result.records);
    }

    auto write_bytes = [](const fs::path& path, const std::vector<std::uint8_t>& bytes) {
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            throw std::runtime_error("cannot write " + path.string());
        }
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
    };

    write_bytes(final_dir / "initial_table.bin", wire::encode_prompt_table(result.initial_table));
    write_bytes(final_dir / "prompt_table.bin", wire::encode_prompt_table(result.final_table));

    {
        // u32 shape count | u32 dim | concatenated shape payloads.
        std::vector<std::uint8_t> blob;
        append_u32(blob, static_cast<std::uint32_t>(result.shapes.size()));
        append_u32(blob, static_cast<std::uint32_t>(config.world.dim));
        for (const auto& [class_id, shape] : result.shapes) {
            const wire::Bytes payload = wire::encode_shape(shape);
            blob.insert(blob.end(), payload.begin(), payload.end());
        }
        write_bytes(final_dir / "shapes.bin", blob);
    }

    {
        std::ofstream os(final_dir / "prompt_table.csv", std::ios::binary);
        if (!os) {
            throw std::runtime_error("cannot write prompt_table.csv");
        }
        os << "class";
        for (int j = 0; j < result.final_table.dim(); ++j) {
            os << ",e" << j;
        }
        os << "\n";
        for (int c = 0; c < result.final_table.num_classes(); ++c) {
            os << c;
            for (int j = 0; j < result.final_table.dim(); ++j) {
                os << "," << format_g9(result.final_table.vectors(c, j));
            }
            os << "\n";
        }
    }

    // One row per test point plus one mean row and one prompt row per class.
    // Degenerate projections keep the rows with zero coordinates.
    auto write_projection = [&](const fs::path& path, const promptmodel::ProjectionReport& proj) {
        std::ofstream os(path, std::ios::binary);
        if (!os) {
            throw std::runtime_error("cannot write " + path.string());
        }
        os << "kind,class,x,y\n";
        for (std::size_t i = 0; i < proj.test_points.size(); ++i) {
            os << "test," << proj.test_labels[i] << "," << format_g9(proj.test_points[i][0])
               << "," << format_g9(proj.test_points[i][1]) << "\n";
        }
        for (const auto& [class_id, point] : proj.mean_points) {
            os << "mean," << class_id << "," << format_g9(point[0]) << "," << format_g9(point[1])
               << "\n";
        }
        for (const auto& [class_id, point] : proj.prompt_points) {
            os << "prompt," << class_id << "," << format_g9(point[0]) << ","
               << format_g9(point[1]) << "\n";
        }
    };
    write_projection(final_dir / "projection.csv", result.projection);
    write_projection(final_dir / "projection_initial.csv", result.projection_initial);
}

} // namespace ggtpc::federation
