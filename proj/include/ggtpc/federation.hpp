#ifndef GGTPC_FEDERATION_HPP
#define GGTPC_FEDERATION_HPP

#include "ggtpc/calibrate.hpp"
#include "ggtpc/common.hpp"
#include "ggtpc/fedstats.hpp"
#include "ggtpc/promptmodel.hpp"
#include "ggtpc/synthdata.hpp"
#include "ggtpc/wire.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace ggtpc::federation {

enum class MessageType {
    stats_request,
    stats_upload,
    shape_broadcast,
    prototype_broadcast,
    prompt_upload,
    prompt_broadcast,
};

std::string to_string(MessageType type);

/// One simulated transmission. sender / receiver -1 denotes the server.
/// Payloads are the wire encodings; nothing else ever crosses the boundary.
struct Message {
    MessageType type;
    int sender = -1;
    int receiver = -1;
    wire::Bytes payload;
};

struct MessageLog {
    bool capture = false; // keep full payloads (tests); bytes are always counted
    std::uint64_t total_bytes = 0;
    std::vector<Message> messages;

    void record(MessageType type, int sender, int receiver, wire::Bytes payload);
};

/// True if any captured payload contains the exact byte image of v.
bool log_contains_embedding(const MessageLog& log, const Vector& v);

struct RoundPlan {
    int round_index = 0;
    std::vector<int> participants;
    bool refresh_stats = false;

    void validate() const;
};

struct RoundRecord {
    int round_index = 0;
    double accuracy = 0.0;
    std::map<int, double> per_domain_accuracy;
    double per_domain_std = 0.0;
    double mean_center_distance = 0.0;
    double duration_seconds = 0.0; // informational; kept out of persisted records
    std::uint64_t bytes_transmitted = 0;
};

struct PromptUpload {
    int client_id = -1;
    promptmodel::PromptTable table;
    std::uint64_t sample_count = 0;
};

/// Count-weighted elementwise mean of uploaded tables (FedAvg weighting).
promptmodel::PromptTable aggregate_prompts(
    const std::vector<std::pair<promptmodel::PromptTable, std::uint64_t>>& uploads);

/// Server-side aggregation strategy extension point.
class Aggregator {
public:
    virtual ~Aggregator() = default;
    virtual promptmodel::PromptTable aggregate(const std::vector<PromptUpload>& uploads,
                                               double temperature) const = 0;
    virtual std::string name() const = 0;
};

class FedAvgAggregator final : public Aggregator {
public:
    promptmodel::PromptTable aggregate(const std::vector<PromptUpload>& uploads,
                                       double temperature) const override;
    std::string name() const override { return "fedavg"; }
};

struct SessionConfig {
    synthdata::GlobalSpec world;
    int test_samples_per_class_domain = 0; // 0 = same as the training world
    synthdata::PartitionConfig partition;
    calibrate::GpclConfig gpcl;
    fedstats::SelectionPolicy selection; // coverage used when collecting stats
    bool inverse_frequency_sampler = true;
    bool prototypes_enabled = false;
    promptmodel::TrainConfig train;
    double temperature = 30.0;
    int rounds = 10;
    std::uint64_t master_seed = 0;
    /// Statistics are collected at round 0 only by default; the embeddings
    /// are frozen, so later refreshes reproduce the same shapes. Enable to
    /// re-collect every round.
    bool refresh_every_round = false;
    double participation_fraction = 1.0;
    std::shared_ptr<const Aggregator> aggregator; // null = FedAvg

    void validate() const;
};

struct SessionState {
    SessionConfig config;
    std::vector<synthdata::ClientDataset> clients;
    synthdata::Pool test_pool;
    std::map<int, Vector> true_means;
    promptmodel::PromptTable initial_table;
    promptmodel::PromptTable global_table;
    std::map<int, fedstats::GeometricShape> shapes;
    std::map<int, calibrate::PrototypeSet> prototypes_by_client;
    MessageLog log;
    int next_round = 0;
};

SessionState init_session(const SessionConfig& config, bool capture_messages = false);

/// Full participation (or the configured fraction) plus the refresh flag for
/// this round index.
RoundPlan make_plan(const SessionState& state, int round_index);

/// One communication round: optional statistics refresh and shape/prototype
/// distribution, parallel-safe local training from the current global
/// table, aggregation, then evaluation on the held-out test pool. Any
/// client failure aborts the round; nothing is aggregated.
RoundRecord run_round(SessionState& state, const RoundPlan& plan);

struct SessionResult {
    std::vector<RoundRecord> records;
    promptmodel::PromptTable initial_table;
    promptmodel::PromptTable final_table;
    std::map<int, fedstats::GeometricShape> shapes;
    promptmodel::ProjectionReport projection;         // prompts from the final table
    promptmodel::ProjectionReport projection_initial; // prompts from the initial table
    MessageLog log;
};

SessionResult run_session(const SessionConfig& config, bool capture_messages = false);

/// Canonical line-delimited JSON for the per-round records. Deterministic:
/// wall-clock durations are deliberately not included.
std::string round_records_jsonl(const std::vector<RoundRecord>& records);

/// Writes records.jsonl plus a final/ directory with the prompt tables
/// (binary and CSV), the shapes, and the projection data.
void write_session_outputs(const std::filesystem::path& dir, const SessionConfig& config,
                           const SessionResult& result);

} // namespace ggtpc::federation

#endif
