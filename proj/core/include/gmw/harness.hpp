#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmw/dataset.hpp"
#include "gmw/hybrid.hpp"
#include "gmw/moo.hpp"
#include "gmw/network.hpp"
#include "gmw/slpso.hpp"

namespace gmw::harness {

enum class Algorithm { sgd, slpso, gmw_sgd, gmw_sgd_moo };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // throws ValidationError

struct DatasetConfig {
    std::string kind = "blobs";  // "blobs" or "cifar10"

    // cifar10
    std::string path;
    std::vector<int> classes;      // empty = all ten
    std::size_t train_limit = 0;   // 0 = no limit
    std::size_t test_limit = 0;

    // blobs
    std::size_t samples = 3000;
    std::size_t blob_classes = 3;
    std::size_t dims = 16;
    double spread = 0.8;
    double test_fraction = 0.2;

    std::uint64_t dataset_seed = 1;
};

struct SlpsoRunConfig {
    std::size_t np = 60;
    std::size_t n_evol = 36;
    double alpha = 0.5;
    double beta = 0.0001;
    double pos_lo = -0.1;
    double pos_hi = 0.1;
    double vel_lo = -0.01;
    double vel_hi = 0.01;
    std::size_t eval_batch = 1024;
};

struct SgdRunConfig {
    double lr = 0.01;
    double lr_factor = 0.1;
    std::size_t lr_patience = 2;
    double lr_min = 1e-5;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t early_stop = 20;  // epochs without train-accuracy improvement
    std::size_t eval_batch = 1024;
    double init_lo = -0.1;
    double init_hi = 0.1;
};

/// A complete experiment description. Defaults reproduce the stock
/// configuration of each algorithm.
struct RunConfig {
    Algorithm algorithm = Algorithm::gmw_sgd;
    std::uint64_t seed = 0;
    std::string out_dir = "runs/out";
    std::optional<std::size_t> eval_budget;

    DatasetConfig dataset;
    std::string network;  // spec text, "default_cnn", "mlp:H1,H2,...", or "" for auto

    hybrid::GmwConfig gmw;
    SlpsoRunConfig slpso;
    SgdRunConfig sgd;

    void validate() const;
    nn::NetworkSpec resolved_network() const;

    /// Key = value sections, or JSON when the file starts with '{'. A JSON
    /// document with a top-level "config" member (a result.json) is accepted
    /// and unwrapped.
    static RunConfig from_file(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Loads the configured dataset pair (train, test).
std::pair<data::Dataset, data::Dataset> load_dataset(const DatasetConfig& cfg);

struct RunResult {
    nlohmann::json doc;  // the full result.json content (deterministic)
    double wall_ms = 0.0;
};

/// Executes the configured algorithm and assembles the result document.
/// Does not touch the filesystem.
RunResult run(const RunConfig& cfg);

/// Writes result.json, trace.csv, pareto.csv/front0.csv (bi-objective runs)
/// and timing.txt under out_dir.
void write_result(const RunResult& result, const std::string& out_dir);

/// Aligned comparison table (one row per algorithm, canonical order) and its
/// CSV form, from result documents.
struct Comparison {
    std::string table;
    std::string csv;
};
Comparison compare(const std::vector<nlohmann::json>& results);

/// Re-emits the convergence trace CSV from a result document.
std::string trace_csv(const nlohmann::json& result);

}  // namespace gmw::harness
