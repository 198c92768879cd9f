#include "ggtpc/calibrate.hpp"
#include "ggtpc/experiment.hpp"
#include "ggtpc/federation.hpp"
#include "ggtpc/fedstats.hpp"
#include "ggtpc/synthdata.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;

using ggtpc::Matrix;
using ggtpc::Rng;
using ggtpc::Vector;

namespace {

/// (n, mean, cov) triplets -> merged global (mean, cov, total_n) with every
/// client selected.
std::tuple<Vector, Matrix, std::uint64_t>
pooled_stats(const std::vector<std::tuple<std::uint64_t, Vector, Matrix>>& parts) {
    std::map<int, ggtpc::fedstats::StatTriplet> triplets;
    std::vector<int> selected;
    int client = 0;
    for (const auto& [n, mean, cov] : parts) {
        ggtpc::fedstats::StatTriplet t;
        t.n = n;
        t.mean = mean;
        t.cov = cov;
        triplets.emplace(client, std::move(t));
        selected.push_back(client);
        ++client;
    }
    const ggtpc::fedstats::GlobalMoments merged =
        ggtpc::fedstats::reconstruct_global(triplets, selected);
    return {merged.mean, merged.cov, merged.total_n};
}

std::vector<int> select_clients(const std::map<int, std::uint64_t>& counts, double coverage) {
    ggtpc::fedstats::SelectionPolicy policy;
    policy.coverage = coverage;
    return ggtpc::fedstats::select_clients(counts, policy);
}

/// Eigenpairs of a covariance: (eigenvalues desc, eigenvector columns).
std::pair<Vector, Matrix> extract_shape(const Vector& mean, const Matrix& cov) {
    const ggtpc::fedstats::GeometricShape shape =
        ggtpc::fedstats::extract_shape(mean, cov, 0, 0);
    return {shape.eigenvalues, shape.eigenvectors};
}

Vector gpcl_perturb(const Vector& x, const Vector& mean, const Vector& eigenvalues,
                    const Matrix& eigenvectors, int top_k, double scale, std::uint64_t seed) {
    ggtpc::fedstats::GeometricShape shape;
    shape.class_id = 0;
    shape.mean = mean;
    shape.eigenvalues = eigenvalues;
    shape.eigenvectors = eigenvectors;
    ggtpc::calibrate::GpclConfig config;
    config.enabled = true;
    config.top_k = top_k;
    config.scale = scale;
    Rng rng(seed);
    return ggtpc::calibrate::gpcl_perturb(x, shape, config, rng);
}

std::map<int, double> sampling_probabilities(const std::map<int, std::uint64_t>& counts,
                                             bool inverse_frequency) {
    ggtpc::synthdata::ClientDataset dataset;
    dataset.client_id = 0;
    for (const auto& [class_id, count] : counts) {
        for (std::uint64_t i = 0; i < count; ++i) {
            dataset.samples.emplace_back(Vector::Zero(1), class_id);
        }
        dataset.class_counts[class_id] = count;
    }
    const ggtpc::calibrate::SamplerState sampler =
        ggtpc::calibrate::build_sampler(dataset, nullptr, inverse_frequency);
    std::map<int, double> probs;
    for (const auto& [class_id, slot] : sampler.classes) {
        probs.emplace(class_id, slot.prob);
    }
    return probs;
}

/// Full session for one (cell, beta, seed) of an experiment config; returns
/// the per-round records as a JSONL string.
std::string run_cell_records(const std::string& config_json, const std::string& cell_name,
                             double beta, std::uint64_t seed) {
    const ggtpc::experiment::ExperimentConfig config =
        ggtpc::experiment::parse_config(config_json);
    const ggtpc::experiment::CellSpec* cell = nullptr;
    for (const ggtpc::experiment::CellSpec& candidate : config.cells) {
        if (candidate.name == cell_name) {
            cell = &candidate;
            break;
        }
    }
    if (cell == nullptr) {
        throw std::invalid_argument("no cell named \"" + cell_name + "\" in the config");
    }
    const ggtpc::federation::SessionConfig session =
        ggtpc::experiment::make_session_config(config, *cell, beta, seed);
    const ggtpc::federation::SessionResult result = ggtpc::federation::run_session(session);
    return ggtpc::federation::round_records_jsonl(result.records);
}

std::string canonical_config(const std::string& config_json) {
    return ggtpc::experiment::canonical_json(ggtpc::experiment::parse_config(config_json));
}

} // namespace

PYBIND11_MODULE(_ggtpc, m) {
    m.doc() = "Federated prompt-calibration core: statistics merging, geometric shapes, "
              "GPCL perturbation, inverse-frequency sampling, and full session runs.";

    m.def("pooled_stats", &pooled_stats, py::arg("parts"),
          "Merge (n, mean, cov) triplets into the pooled (mean, cov, total_n).");
    m.def("select_clients", &select_clients, py::arg("counts"), py::arg("coverage") = 0.8,
          "Minimal descending-count prefix of clients reaching coverage * total.");
    m.def("extract_shape", &extract_shape, py::arg("mean"), py::arg("cov"),
          "Eigenvalues (descending) and eigenvector columns of a covariance.");
    m.def("gpcl_perturb", &gpcl_perturb, py::arg("x"), py::arg("mean"), py::arg("eigenvalues"),
          py::arg("eigenvectors"), py::arg("top_k") = 0, py::arg("scale") = 1.0,
          py::arg("seed") = 0,
          "x + scale * sum eps_m sqrt(lambda_m) u_m over the top_k eigenpairs.");
    m.def("sampling_probabilities", &sampling_probabilities, py::arg("counts"),
          py::arg("inverse_frequency") = true,
          "Class sampling probabilities from counts (inverse-frequency or proportional).");
    m.def("run_cell_records", &run_cell_records, py::arg("config_json"), py::arg("cell"),
          py::arg("beta"), py::arg("seed"),
          "Run one (cell, beta, seed) session; returns per-round records as JSONL.");
    m.def("canonical_config", &canonical_config, py::arg("config_json"),
          "Validate an experiment config and return its canonical JSON.");
}
