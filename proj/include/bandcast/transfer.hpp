#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bandcast/features.hpp"
#include "bandcast/models.hpp"

namespace bandcast {

struct ModelSpec {
    std::string kind = "ols";  // "ols" | "lasso"
    double lambda = 1.0;       // lasso only
    double tol = 1e-7;         // lasso convergence threshold
    int max_iter = 10000;      // lasso sweep cap
};

// A fitted linear model together with the column schema and the source
// panel's standardization metadata (retained for target-side application).
struct ModelArtifact {
    ModelSpec spec;
    LinearModel model;
    std::vector<std::string> columns;
    std::vector<std::vector<ColumnStats>> source_stats;
};

struct TransferConfig {
    std::string source_region;
    std::string target_region;
    std::vector<std::string> frozen_features;  // held at source values in pass 1
    double target_fraction = 1.0;              // fraction of target train rows kept
    ModelSpec fine_tune_model;
    // Degenerate-case switches; defaults follow the standard procedure.
    bool include_source_estimate = true;  // append the source_proxy_est column
    int unfreeze_passes = 1;              // 0 keeps the frozen pass's result
    bool freeze_intercept = false;
};

struct TransferOutcome {
    Metrics metrics_with_transfer;
    Metrics metrics_without_transfer;
    double relative_nrmse_reduction = 0;  // 1 - nrmse_with / nrmse_without
};

// Fits spec on a standardized panel. The panel must carry stats metadata
// (i.e. have been standardized); those stats ride along in the artifact.
ModelArtifact train_source(const FeaturePanel& panel_source, const ModelSpec& spec);

// The transfer procedure: source model predicts the target rows; the
// prediction is appended as `source_proxy_est`; a new model is fitted on the
// augmented panel, warm-started at the source coefficients with
// frozen_features pinned; the frozen set is then released and fitting
// repeated once per unfreeze pass.
ModelArtifact transfer_fine_tune(const ModelArtifact& source_model,
                                 const FeaturePanel& panel_target, const TransferConfig& config);

// Splits the (unstandardized) target panel temporally, subsamples the train
// rows to target_fraction (deterministic in seed), fits the scratch and
// transferred models on identical rows, and evaluates both on the same test
// rows.
TransferOutcome compare_transfer(const FeaturePanel& panel_target,
                                 const ModelArtifact& source_model, const TransferConfig& config,
                                 const std::vector<int>& train_windows,
                                 const std::vector<int>& test_windows, uint64_t seed);

// Predictions of an artifact on a standardized panel, appending the source
// estimate column on the fly when the artifact was fitted with one.
std::vector<double> predict_with_artifact(const ModelArtifact& artifact,
                                          const ModelArtifact& source_model,
                                          const FeaturePanel& panel);

}  // namespace bandcast
