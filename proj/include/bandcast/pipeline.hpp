#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bandcast/benchreport.hpp"
#include "bandcast/features.hpp"
#include "bandcast/quality.hpp"
#include "bandcast/spatial.hpp"
#include "bandcast/synthgen.hpp"
#include "bandcast/transfer.hpp"

namespace bandcast {

struct RunConfig {
    uint64_t seed = 42;
    std::string region = "ottawa-like";  // primary scenario region
    std::vector<RegionProfile> profiles; // builtins plus config-defined ones
    CouplingSpec coupling;
    GenParams gen;
    CleansePolicy cleanse;
    std::vector<int> lags = {0, 1, 2};
    int span_months = 3, stride_months = 3;
    int train_from = 2, train_to = 15;
    int test_from = 16, test_to = 19;
    int acf_max_lag = 6;

    // Model hyperparameters.
    double lasso_lambda = 1.0;
    double lasso_tol = 1e-7;
    int lasso_max_iter = 20000;
    int tree_max_depth = 6, tree_min_leaf = 5;
    int forest_trees = 60, forest_max_depth = 8, forest_min_leaf = 3;
    double forest_feature_frac = 0.5;
    int gbm_rounds = 100;
    double gbm_learning_rate = 0.3;
    int gbm_max_depth = 6, gbm_min_leaf = 5;

    ModelSpec source_model;  // model trained on the transfer source region
    TransferConfig transfer;
    int transfer_seeds = 10;

    ItuBenchmarks benchmarks;

    std::string out_dir = "out";
    int jobs = 1;

    const RegionProfile& profile(const std::string& name) const;
    WindowSpec window_spec(const RegionProfile& p) const;
    int n_windows(const RegionProfile& p) const;
    std::vector<int> train_windows() const;
    std::vector<int> test_windows() const;
    std::vector<std::string> regions_used() const;  // unique, primary first
};

// Loads the JSON config, applies --set overrides (dotted paths, JSON-typed
// values), then the dedicated flag overrides. Bad fields throw ConfigError
// naming the field.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                      const std::optional<std::string>& out_override,
                      const std::optional<uint64_t>& seed_override,
                      const std::optional<int>& jobs_override);

// Canonical JSON of the semantically relevant fields (out_dir and jobs are
// excluded) and its SHA-256. The hash lands in run_meta.json and the report
// manifest.
std::string canonical_config_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

void write_run_meta(const RunConfig& cfg);

// Pipeline stages. Each reads its declared stage files from cfg.out_dir and
// writes its own; missing inputs raise MissingInputError.
void stage_gen(const RunConfig& cfg);
void stage_aggregate(const RunConfig& cfg);
void stage_cleanse(const RunConfig& cfg);
void stage_featurize(const RunConfig& cfg);
void stage_correlate(const RunConfig& cfg);
void stage_train(const RunConfig& cfg);
void stage_transfer(const RunConfig& cfg);
void stage_benchmark(const RunConfig& cfg);
void stage_report(const RunConfig& cfg);
void stage_all(const RunConfig& cfg);

// In-memory generate -> aggregate -> cleanse -> featurize chain for one
// region; equals the stage-file path bit for bit (CSV round-trips are
// lossless). Used by the transfer simulation study and by tests.
FeaturePanel panel_for_region(const RunConfig& cfg, const RegionProfile& profile, uint64_t seed);

// Stage-file readers, shared between stages and tests.
std::vector<RawSample> read_samples_csv(const std::string& path);
std::vector<RegulatoryRecord> read_regulatory_csv(const std::string& path);
std::vector<CellAggregate> read_cells_csv(const std::string& path);
std::vector<ProxyTarget> read_proxy_csv(const std::string& path);
FeaturePanel read_panel_csv(const std::string& path, const std::vector<int>& lags);

}  // namespace bandcast
