#include "ggtpc/federation.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

using namespace ggtpc;
using federation::Message;
using federation::MessageLog;
using federation::MessageType;
using federation::PromptUpload;
using federation::RoundPlan;
using federation::RoundRecord;
using federation::SessionConfig;
using federation::SessionState;
using promptmodel::PromptTable;

namespace {

PromptTable table_of(std::initializer_list<double> values, int rows, int cols,
                     double temperature = 30.0) {
    PromptTable t;
    t.temperature = temperature;
    t.vectors.resize(rows, cols);
    int i = 0;
    for (double v : values) {
        t.vectors(i / cols, i % cols) = v;
        ++i;
    }
    return t;
}

/// Small single-domain session: 3 classes, dim 4, 3 clients.
SessionConfig small_config() {
    synthdata::WorldRecipe recipe;
    recipe.num_classes = 3;
    recipe.dim = 4;
    recipe.num_domains = 1;
    recipe.samples_per_class_domain = 12;
    recipe.mean_scale = 3.0;
    recipe.cov_scale = 0.5;
    recipe.seed = 5;

    SessionConfig cfg;
    cfg.world = synthdata::make_global_spec(recipe);
    cfg.partition.scheme = synthdata::PartitionScheme::dirichlet_label_skew;
    cfg.partition.beta = 0.5;
    cfg.partition.num_clients = 3;
    cfg.partition.seed = 6;
    cfg.train.learning_rate = 0.05;
    cfg.train.batch_size = 4;
    cfg.train.local_steps = 2;
    cfg.rounds = 2;
    cfg.master_seed = 7;
    return cfg;
}

/// Two domains, one client per domain, prototypes on.
SessionConfig domain_config() {
    synthdata::WorldRecipe recipe;
    recipe.num_classes = 3;
    recipe.dim = 4;
    recipe.num_domains = 2;
    recipe.samples_per_class_domain = 12;
    recipe.mean_scale = 3.0;
    recipe.cov_scale = 0.5;
    recipe.domain_offset = 1.0;
    recipe.seed = 5;

    SessionConfig cfg = small_config();
    cfg.world = synthdata::make_global_spec(recipe);
    cfg.partition.scheme = synthdata::PartitionScheme::one_domain_one_client;
    cfg.partition.num_clients = 2;
    cfg.prototypes_enabled = true;
    return cfg;
}

class ThrowingAggregator final : public federation::Aggregator {
public:
    PromptTable aggregate(const std::vector<PromptUpload>&, double) const override {
        throw std::runtime_error("aggregator exploded");
    }
    std::string name() const override { return "throwing"; }
};

class CountingAggregator final : public federation::Aggregator {
public:
    PromptTable aggregate(const std::vector<PromptUpload>& uploads,
                          double temperature) const override {
        last_upload_count = static_cast<int>(uploads.size());
        std::vector<std::pair<PromptTable, std::uint64_t>> pairs;
        for (const auto& up : uploads) pairs.emplace_back(up.table, up.sample_count);
        PromptTable out = federation::aggregate_prompts(pairs);
        out.temperature = temperature;
        return out;
    }
    std::string name() const override { return "counting"; }
    mutable int last_upload_count = 0;
};

} // namespace

TEST_SUITE("federation") {

TEST_CASE("message type names round out the enum") {
    CHECK(federation::to_string(MessageType::stats_request) == "stats_request");
    CHECK(federation::to_string(MessageType::stats_upload) == "stats_upload");
    CHECK(federation::to_string(MessageType::shape_broadcast) == "shape_broadcast");
    CHECK(federation::to_string(MessageType::prototype_broadcast) == "prototype_broadcast");
    CHECK(federation::to_string(MessageType::prompt_upload) == "prompt_upload");
    CHECK(federation::to_string(MessageType::prompt_broadcast) == "prompt_broadcast");
}

TEST_CASE("message log counts bytes always, stores only when capturing") {
    MessageLog quiet;
    quiet.record(MessageType::stats_upload, 0, -1, wire::Bytes(10, 1));
    quiet.record(MessageType::prompt_upload, 1, -1, wire::Bytes(5, 2));
    CHECK(quiet.total_bytes == 15);
    CHECK(quiet.messages.empty());

    MessageLog capturing;
    capturing.capture = true;
    capturing.record(MessageType::stats_upload, 0, -1, wire::Bytes(10, 1));
    CHECK(capturing.total_bytes == 10);
    REQUIRE(capturing.messages.size() == 1);
    CHECK(capturing.messages[0].sender == 0);
    CHECK(capturing.messages[0].receiver == -1);
    CHECK(capturing.messages[0].payload.size() == 10);
}

TEST_CASE("log_contains_embedding finds and misses byte images") {
    Rng rng(1);
    const Vector secret = testsupport::random_vector(3, rng);
    const Vector other = testsupport::random_vector(3, rng);

    MessageLog log;
    log.capture = true;
    wire::Bytes payload(4, 0xab); // header noise
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(secret.data());
    payload.insert(payload.end(), bytes, bytes + 3 * sizeof(double));
    payload.push_back(0xcd);
    log.record(MessageType::stats_upload, 0, -1, std::move(payload));

    CHECK(federation::log_contains_embedding(log, secret));
    CHECK_FALSE(federation::log_contains_embedding(log, other));
    CHECK_FALSE(federation::log_contains_embedding(log, Vector{}));
}

TEST_CASE("round plan validation") {
    RoundPlan plan;
    plan.participants = {0, 2, 5};
    CHECK_NOTHROW(plan.validate());
    SUBCASE("negative round") { plan.round_index = -1; CHECK_THROWS_AS(plan.validate(), std::invalid_argument); }
    SUBCASE("empty") { plan.participants.clear(); CHECK_THROWS_AS(plan.validate(), std::invalid_argument); }
    SUBCASE("negative id") { plan.participants = {-1, 0}; CHECK_THROWS_AS(plan.validate(), std::invalid_argument); }
    SUBCASE("descending") { plan.participants = {2, 1}; CHECK_THROWS_AS(plan.validate(), std::invalid_argument); }
    SUBCASE("duplicate") { plan.participants = {1, 1}; CHECK_THROWS_AS(plan.validate(), std::invalid_argument); }
}

TEST_CASE("aggregate_prompts hand-checked weighting") {
    const auto a = table_of({1, 1, 1, 1}, 2, 2);
    const auto b = table_of({5, 5, 5, 5}, 2, 2);
    // Weights 1 and 3: (1*a + 3*b) / 4 = 4 everywhere.
    const auto merged = federation::aggregate_prompts({{a, 1}, {b, 3}});
    CHECK(merged.temperature == 30.0);
    CHECK((merged.vectors.array() - 4.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("aggregate_prompts identity and convexity") {
    Rng rng(2);
    PromptTable t;
    t.vectors = testsupport::random_matrix(4, 3, rng);
    const auto same = federation::aggregate_prompts({{t, 3}, {t, 9}});
    CHECK(testsupport::bit_equal(same.vectors, t.vectors));

    PromptTable u;
    u.vectors = testsupport::random_matrix(4, 3, rng);
    const auto mix = federation::aggregate_prompts({{t, 2}, {u, 5}});
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double lo = std::min(t.vectors(i, j), u.vectors(i, j));
            const double hi = std::max(t.vectors(i, j), u.vectors(i, j));
            CHECK(mix.vectors(i, j) >= lo - 1e-12);
            CHECK(mix.vectors(i, j) <= hi + 1e-12);
        }
    }
}

TEST_CASE("aggregate_prompts all-zero weights fall back to the plain mean") {
    const auto a = table_of({0, 0}, 1, 2);
    const auto b = table_of({4, 4}, 1, 2);
    const auto merged = federation::aggregate_prompts({{a, 0}, {b, 0}});
    CHECK(merged.vectors(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("aggregate_prompts rejects inconsistent uploads") {
    const auto a = table_of({1, 2, 3, 4}, 2, 2);
    CHECK_THROWS_AS(federation::aggregate_prompts({}), std::invalid_argument);

    auto wrong_shape = table_of({1, 2}, 1, 2);
    CHECK_THROWS_AS(federation::aggregate_prompts({{a, 1}, {wrong_shape, 1}}),
                    std::invalid_argument);

    auto wrong_temp = a;
    wrong_temp.temperature = 10.0;
    CHECK_THROWS_AS(federation::aggregate_prompts({{a, 1}, {wrong_temp, 1}}),
                    std::invalid_argument);
}

TEST_CASE("fedavg aggregator matches aggregate_prompts and checks temperature") {
    Rng rng(3);
    std::vector<PromptUpload> uploads(2);
    uploads[0].client_id = 0;
    uploads[0].table.vectors = testsupport::random_matrix(3, 2, rng);
    uploads[0].sample_count = 4;
    uploads[1].client_id = 1;
    uploads[1].table.vectors = testsupport::random_matrix(3, 2, rng);
    uploads[1].sample_count = 12;

    federation::FedAvgAggregator fedavg;
    CHECK(fedavg.name() == "fedavg");
    const auto out = fedavg.aggregate(uploads, 30.0);
    const auto expected = federation::aggregate_prompts(
        {{uploads[0].table, 4}, {uploads[1].table, 12}});
    CHECK(testsupport::bit_equal(out.vectors, expected.vectors));
    CHECK_THROWS_AS(fedavg.aggregate(uploads, 12.0), std::invalid_argument);
}

TEST_CASE("session config validation") {
    SessionConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("no clients") { cfg.partition.num_clients = 0; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
    SUBCASE("bad coverage") { cfg.selection.coverage = 0.0; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
    SUBCASE("bad temperature") { cfg.temperature = 0.0; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
    SUBCASE("negative rounds") { cfg.rounds = -1; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
    SUBCASE("negative test samples") { cfg.test_samples_per_class_domain = -1; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
    SUBCASE("bad participation") { cfg.participation_fraction = 0.0; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
    SUBCASE("bad gpcl") { cfg.gpcl.top_k = 99; CHECK_THROWS_AS(cfg.validate(), std::invalid_argument); }
}

TEST_CASE("init_session wires up the world") {
    SessionConfig cfg = small_config();
    cfg.test_samples_per_class_domain = 5;
    const SessionState state = federation::init_session(cfg);
    CHECK(state.clients.size() == 3);
    CHECK(state.test_pool.size() == 3 * 5); // classes * test samples
    CHECK(state.true_means.size() == 3);
    CHECK(state.initial_table.num_classes() == 3);
    CHECK(state.initial_table.dim() == 4);
    CHECK(testsupport::bit_equal(state.global_table.vectors, state.initial_table.vectors));
    CHECK(state.shapes.empty());
    CHECK(state.next_round == 0);

    // The held-out pool comes from a reseeded world, not the training pool.
    const synthdata::Pool train_pool = synthdata::generate_global(cfg.world);
    bool any_equal = false;
    for (const auto& ts : state.test_pool) {
        for (const auto& tr : train_pool) {
            if (testsupport::bit_equal(ts.embedding, tr.embedding)) any_equal = true;
        }
    }
    CHECK_FALSE(any_equal);
}

TEST_CASE("make_plan refresh flag and full participation") {
    const SessionState state = federation::init_session(small_config());
    const RoundPlan p0 = federation::make_plan(state, 0);
    CHECK(p0.round_index == 0);
    CHECK(p0.refresh_stats);
    CHECK(p0.participants == std::vector<int>{0, 1, 2});
    const RoundPlan p1 = federation::make_plan(state, 1);
    CHECK_FALSE(p1.refresh_stats);
    CHECK(p1.participants == std::vector<int>{0, 1, 2});

    SessionConfig refresh_cfg = small_config();
    refresh_cfg.refresh_every_round = true;
    const SessionState refresh_state = federation::init_session(refresh_cfg);
    CHECK(federation::make_plan(refresh_state, 3).refresh_stats);
}

TEST_CASE("make_plan partial participation is deterministic and ascending") {
    SessionConfig cfg = small_config();
    cfg.partition.num_clients = 8;
    cfg.participation_fraction = 0.5;
    const SessionState state = federation::init_session(cfg);
    const SessionState twin = federation::init_session(cfg);

    std::set<std::vector<int>> seen;
    for (int r = 0; r < 6; ++r) {
        const RoundPlan plan = federation::make_plan(state, r);
        CHECK(plan.participants.size() == 4);
        CHECK_NOTHROW(plan.validate()); // ascending, in range
        CHECK(plan.participants == federation::make_plan(twin, r).participants);
        seen.insert(plan.participants);
    }
    CHECK(seen.size() > 1); // different rounds draw different cohorts
}

TEST_CASE("run_round produces a populated record and grows the table") {
    SessionConfig cfg = small_config();
    SessionState state = federation::init_session(cfg);
    const Matrix before = state.global_table.vectors;

    const RoundPlan plan = federation::make_plan(state, 0);
    const RoundRecord record = federation::run_round(state, plan);
    CHECK(record.round_index == 0);
    CHECK(record.accuracy >= 0.0);
    CHECK(record.accuracy <= 1.0);
    CHECK(record.per_domain_accuracy.size() == 1);
    CHECK(record.bytes_transmitted > 0);
    CHECK(record.mean_center_distance >= 0.0);
    CHECK(record.mean_center_distance <= 2.0);
    CHECK(state.next_round == 1);
    CHECK(state.shapes.size() == 3); // every class reported
    CHECK_FALSE(testsupport::bit_equal(state.global_table.vectors, before));
}

TEST_CASE("statistics refresh is idempotent on a frozen world") {
    SessionConfig cfg = small_config();
    cfg.refresh_every_round = true;
    SessionState state = federation::init_session(cfg);
    federation::run_round(state, federation::make_plan(state, 0));
    std::map<int, fedstats::GeometricShape> first = state.shapes;
    federation::run_round(state, federation::make_plan(state, 1));
    REQUIRE(state.shapes.size() == first.size());
    for (const auto& [class_id, shape] : state.shapes) {
        const auto& prev = first.at(class_id);
        CHECK(testsupport::bit_equal(shape.mean, prev.mean));
        CHECK(testsupport::bit_equal(shape.eigenvalues, prev.eigenvalues));
        CHECK(testsupport::bit_equal(shape.eigenvectors, prev.eigenvectors));
        CHECK(shape.total_n == prev.total_n);
    }
}

TEST_CASE("raw embeddings never appear in any transmitted payload") {
    SessionConfig cfg = domain_config(); // prototypes on: every message type flows
    cfg.rounds = 1;
    SessionState state = federation::init_session(cfg, /*capture=*/true);
    federation::run_round(state, federation::make_plan(state, 0));

    REQUIRE_FALSE(state.log.messages.empty());
    for (const auto& dataset : state.clients) {
        for (const auto& [embedding, label] : dataset.samples) {
            CHECK_FALSE(federation::log_contains_embedding(state.log, embedding));
        }
    }
    // Positive control: a log that does carry a sample must be caught.
    MessageLog leaky;
    leaky.capture = true;
    const Vector& sample = state.clients[0].samples.front().first;
    wire::Bytes blob(reinterpret_cast<const std::uint8_t*>(sample.data()),
                     reinterpret_cast<const std::uint8_t*>(sample.data()) +
                         sample.size() * sizeof(double));
    leaky.record(MessageType::stats_upload, 0, -1, std::move(blob));
    CHECK(federation::log_contains_embedding(leaky, sample));
}

TEST_CASE("every captured payload decodes with its documented codec") {
    SessionConfig cfg = domain_config();
    cfg.rounds = 1;
    const auto result = federation::run_session(cfg, /*capture=*/true);
    const int dim = cfg.world.dim;

    std::map<MessageType, int> seen;
    for (const Message& msg : result.log.messages) {
        ++seen[msg.type];
        switch (msg.type) {
        case MessageType::stats_request:
            CHECK(msg.payload.empty());
            break;
        case MessageType::stats_upload:
            CHECK_NOTHROW(wire::decode_triplet(msg.payload, dim));
            break;
        case MessageType::shape_broadcast:
            CHECK_NOTHROW(wire::decode_shape(msg.payload, dim));
            break;
        case MessageType::prototype_broadcast: {
            const auto set = wire::decode_prototypes(msg.payload, dim);
            for (const auto& e : set.entries) CHECK(e.domain_id != set.owner_domain);
            break;
        }
        case MessageType::prompt_upload:
        case MessageType::prompt_broadcast:
            CHECK_NOTHROW(wire::decode_prompt_table(msg.payload));
            break;
        }
    }
    CHECK(seen[MessageType::stats_request] == 2);
    CHECK(seen[MessageType::stats_upload] > 0);
    CHECK(seen[MessageType::shape_broadcast] > 0);
    CHECK(seen[MessageType::prototype_broadcast] == 2);
    CHECK(seen[MessageType::prompt_upload] == 2);
    CHECK(seen[MessageType::prompt_broadcast] == 2);
}

TEST_CASE("byte accounting reconciles with captured payloads") {
    SessionConfig cfg = small_config();
    const auto result = federation::run_session(cfg, /*capture=*/true);

    std::uint64_t payload_sum = 0;
    for (const Message& msg : result.log.messages) payload_sum += msg.payload.size();
    CHECK(payload_sum == result.log.total_bytes);

    std::uint64_t record_sum = 0;
    for (const RoundRecord& r : result.records) record_sum += r.bytes_transmitted;
    CHECK(record_sum == result.log.total_bytes);

    // Capturing is observational: byte counts match the quiet run.
    const auto quiet = federation::run_session(cfg, /*capture=*/false);
    CHECK(quiet.log.total_bytes == result.log.total_bytes);
    CHECK(quiet.log.messages.empty());
}

TEST_CASE("a failing client aborts the round with a diagnostic") {
    SessionConfig cfg = small_config();
    SessionState state = federation::init_session(cfg);
    federation::run_round(state, federation::make_plan(state, 0));
    const Matrix before = state.global_table.vectors;

    // Corrupt client 1's data so its local training cannot run.
    REQUIRE(!state.clients[1].samples.empty());
    state.clients[1].samples[0].first = Vector::Zero(7); // wrong dimensionality

    RoundPlan plan = federation::make_plan(state, 1);
    plan.refresh_stats = false; // go straight to training
    bool threw = false;
    try {
        federation::run_round(state, plan);
    } catch (const std::runtime_error& err) {
        threw = true;
        const std::string what = err.what();
        CHECK(what.find("round 1") != std::string::npos);
        CHECK(what.find("client 1") != std::string::npos);
    }
    CHECK(threw);
    CHECK(testsupport::bit_equal(state.global_table.vectors, before)); // nothing aggregated
}

TEST_CASE("a failing aggregator leaves the global table untouched") {
    SessionConfig cfg = small_config();
    cfg.aggregator = std::make_shared<ThrowingAggregator>();
    SessionState state = federation::init_session(cfg);
    const Matrix before = state.global_table.vectors;
    CHECK_THROWS_WITH_AS(federation::run_round(state, federation::make_plan(state, 0)),
                         "aggregator exploded", std::runtime_error);
    CHECK(testsupport::bit_equal(state.global_table.vectors, before));
}

TEST_CASE("a custom aggregator replaces fedavg") {
    SessionConfig cfg = small_config();
    auto counting = std::make_shared<CountingAggregator>();
    cfg.aggregator = counting;
    SessionState state = federation::init_session(cfg);
    federation::run_round(state, federation::make_plan(state, 0));
    CHECK(counting->last_upload_count == 3);
}

TEST_CASE("run_session is deterministic end to end") {
    SessionConfig cfg = domain_config();
    cfg.rounds = 3;
    const auto a = federation::run_session(cfg);
    const auto b = federation::run_session(cfg);

    CHECK(federation::round_records_jsonl(a.records) == federation::round_records_jsonl(b.records));
    CHECK(testsupport::bit_equal(a.final_table.vectors, b.final_table.vectors));
    CHECK(testsupport::bit_equal(a.initial_table.vectors, b.initial_table.vectors));
    CHECK(a.log.total_bytes == b.log.total_bytes);
    REQUIRE(a.shapes.size() == b.shapes.size());
    for (const auto& [class_id, shape] : a.shapes) {
        CHECK(testsupport::bit_equal(shape.eigenvectors, b.shapes.at(class_id).eigenvectors));
    }
}

TEST_CASE("session outputs rewrite byte-identically") {
    namespace fs = std::filesystem;
    SessionConfig cfg = small_config();
    const fs::path base = fs::temp_directory_path() / "ggtpc_fed_test";
    fs::remove_all(base);

    const auto read_file = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        REQUIRE(is);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };

    const auto run_a = federation::run_session(cfg);
    federation::write_session_outputs(base / "a", cfg, run_a);
    const auto run_b = federation::run_session(cfg);
    federation::write_session_outputs(base / "b", cfg, run_b);

    const std::vector<std::string> files = {
        "records.jsonl",          "final/prompt_table.bin", "final/initial_table.bin",
        "final/shapes.bin",       "final/prompt_table.csv", "final/projection.csv",
        "final/projection_initial.csv"};
    for (const auto& name : files) {
        CAPTURE(name);
        CHECK(read_file(base / "a" / name) == read_file(base / "b" / name));
        CHECK(!read_file(base / "a" / name).empty());
    }

    // Shape blob header: class count then dimension.
    const std::string blob = read_file(base / "a" / "final/shapes.bin");
    REQUIRE(blob.size() >= 8);
    const auto u32at = [&](std::size_t off) {
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(blob[off + i]);
        return v;
    };
    CHECK(u32at(0) == 3);
    CHECK(u32at(4) == 4);

    // Projection CSV rows: header + tests + one mean and one prompt per class.
    const std::string proj = read_file(base / "a" / "final/projection.csv");
    const std::size_t rows = static_cast<std::size_t>(std::count(proj.begin(), proj.end(), '\n'));
    CHECK(rows == 1 + run_a.projection.test_points.size() + 3 + 3);

    fs::remove_all(base);
}

TEST_CASE("round records serialize without durations and parse back") {
    SessionConfig cfg = small_config();
    cfg.rounds = 2;
    const auto result = federation::run_session(cfg);
    const std::string jsonl = federation::round_records_jsonl(result.records);

    std::istringstream lines(jsonl);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        const auto parsed = nlohmann::json::parse(line);
        const std::set<std::string> keys = {"accuracy",      "bytes_transmitted",
                                            "mean_center_distance", "per_domain_accuracy",
                                            "per_domain_std",       "round"};
        std::set<std::string> got;
        for (auto it = parsed.begin(); it != parsed.end(); ++it) got.insert(it.key());
        CHECK(got == keys); // wall-clock durations deliberately excluded
        CHECK(parsed["round"] == count);
        CHECK(parsed["accuracy"] == result.records[count].accuracy);
        CHECK(parsed["bytes_transmitted"] == result.records[count].bytes_transmitted);
        ++count;
    }
    CHECK(count == 2);
}

TEST_CASE("a zero-round session still reports the initial projection") {
    SessionConfig cfg = small_config();
    cfg.rounds = 0;
    const auto result = federation::run_session(cfg);
    CHECK(result.records.empty());
    CHECK(result.log.total_bytes == 0);
    CHECK(testsupport::bit_equal(result.final_table.vectors, result.initial_table.vectors));
    CHECK(!result.projection.test_points.empty());
    CHECK(federation::round_records_jsonl(result.records).empty());

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ggtpc_fed_zero";
    fs::remove_all(dir);
    federation::write_session_outputs(dir, cfg, result);
    CHECK(fs::exists(dir / "records.jsonl"));
    CHECK(fs::file_size(dir / "records.jsonl") == 0);
    CHECK(fs::exists(dir / "final/prompt_table.bin"));
    fs::remove_all(dir);
}

TEST_CASE("prototype-enabled sessions hand out only foreign domains") {
    SessionConfig cfg = domain_config();
    SessionState state = federation::init_session(cfg);
    federation::run_round(state, federation::make_plan(state, 0));
    REQUIRE(state.prototypes_by_client.size() == 2);
    for (const auto& [client_id, set] : state.prototypes_by_client) {
        const int own = state.clients[static_cast<std::size_t>(client_id)].domain_id;
        CHECK(set.owner_domain == own);
        CHECK(!set.entries.empty());
        for (const auto& e : set.entries) CHECK(e.domain_id != own);
    }
}

} // TEST_SUITE
