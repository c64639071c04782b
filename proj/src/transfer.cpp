#include "bandcast/transfer.hpp"

#include <algorithm>
#include <numeric>

#include "bandcast/errors.hpp"
#include "bandcast/rng.hpp"

namespace bandcast {

namespace {

constexpr const char* kSourceEstCol = "source_proxy_est";

LinearModel fit_linear(const Matrix& X, const std::vector<double>& y, const ModelSpec& spec) {
    if (spec.kind == "ols") return fit_ols(X, y);
    if (spec.kind == "lasso") return fit_lasso(X, y, spec.lambda, spec.tol, spec.max_iter);
    throw ConfigError("unknown model kind: " + spec.kind);
}

// OLS with some coefficients pinned: regress the residual after the pinned
// part on the free columns only, then scatter the solution back.
LinearModel fit_ols_frozen(const Matrix& X, const std::vector<double>& y, const LinearModel& init,
                           const std::vector<uint8_t>& frozen, bool freeze_intercept) {
    std::vector<size_t> free_cols;
    for (size_t j = 0; j < X.cols; ++j)
        if (!frozen[j]) free_cols.push_back(j);

    std::vector<double> resid(y);
    for (size_t i = 0; i < X.rows; ++i) {
        double pinned = freeze_intercept ? init.intercept : 0.0;
        for (size_t j = 0; j < X.cols; ++j)
            if (frozen[j]) pinned += init.coef[j] * X.at(i, j);
        resid[i] -= pinned;
    }

    LinearModel out = init;
    if (free_cols.empty() && freeze_intercept) return out;

    size_t extra = freeze_intercept ? 0 : 1;
    Matrix A(X.rows, free_cols.size() + extra);
    for (size_t i = 0; i < X.rows; ++i) {
        if (!freeze_intercept) A.at(i, 0) = 1.0;
        for (size_t k = 0; k < free_cols.size(); ++k)
            A.at(i, k + extra) = X.at(i, free_cols[k]);
    }
    std::vector<double> theta = lstsq(A, resid, &out.rank_deficient);
    if (!freeze_intercept) out.intercept = theta[0];
    for (size_t k = 0; k < free_cols.size(); ++k) out.coef[free_cols[k]] = theta[k + extra];
    return out;
}

}  // namespace

ModelArtifact train_source(const FeaturePanel& panel_source, const ModelSpec& spec) {
    if (panel_source.rows.empty()) throw NumericError("train_source: empty source panel");
    if (!panel_source.standardized)
        throw ConfigError("train_source expects a standardized panel");
    Matrix X;
    std::vector<double> y;
    panel_to_xy(panel_source, X, y);
    ModelArtifact a;
    a.spec = spec;
    a.model = fit_linear(X, y, spec);
    a.columns = panel_source.columns;
    a.source_stats = panel_source.stats;
    return a;
}

ModelArtifact transfer_fine_tune(const ModelArtifact& source_model,
                                 const FeaturePanel& panel_target, const TransferConfig& config) {
    if (panel_target.columns != source_model.columns)
        throw ConfigError("target panel columns do not match the source model's schema");
    if (panel_target.rows.empty()) throw NumericError("transfer_fine_tune: empty target panel");

    Matrix X;
    std::vector<double> y;
    panel_to_xy(panel_target, X, y);

    // (1)+(2): the source model's predictions become one more column.
    Matrix Xa = X;
    std::vector<std::string> columns = source_model.columns;
    if (config.include_source_estimate) {
        std::vector<double> est = source_model.model.predict(X);
        Xa = Matrix(X.rows, X.cols + 1);
        for (size_t i = 0; i < X.rows; ++i) {
            for (size_t j = 0; j < X.cols; ++j) Xa.at(i, j) = X.at(i, j);
            Xa.at(i, X.cols) = est[i];
        }
        columns.push_back(kSourceEstCol);
    }

    // (3): warm start at the source coefficients, zero for the new column,
    // with the frozen subset pinned.
    LinearModel warm = source_model.model;
    warm.coef.resize(Xa.cols, 0.0);
    std::vector<uint8_t> frozen(Xa.cols, 0);
    for (const auto& name : config.frozen_features) {
        bool found = false;
        for (size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) {
                frozen[j] = 1;
                found = true;
            }
        if (!found) throw ConfigError("frozen feature not in panel: " + name);
    }

    const ModelSpec& spec = config.fine_tune_model;
    LinearModel fitted;
    if (spec.kind == "lasso") {
        fitted = fit_lasso_warm(Xa, y, spec.lambda, warm, &frozen, config.freeze_intercept,
                                spec.tol, spec.max_iter);
    } else if (spec.kind == "ols") {
        fitted = fit_ols_frozen(Xa, y, warm, frozen, config.freeze_intercept);
    } else {
        throw ConfigError("unknown model kind: " + spec.kind);
    }

    // (4): gradual unfreezing — release everything and refit from the frozen
    // pass's iterate.
    for (int pass = 0; pass < config.unfreeze_passes; ++pass) {
        if (spec.kind == "lasso") {
            fitted = fit_lasso_warm(Xa, y, spec.lambda, fitted, nullptr, false, spec.tol,
                                    spec.max_iter);
        } else {
            fitted = fit_ols(Xa, y);
        }
    }

    ModelArtifact out;
    out.spec = spec;
    out.model = fitted;
    out.columns = columns;
    out.source_stats = source_model.source_stats;
    return out;
}

std::vector<double> predict_with_artifact(const ModelArtifact& artifact,
                                          const ModelArtifact& source_model,
                                          const FeaturePanel& panel) {
    Matrix X;
    std::vector<double> y;
    panel_to_xy(panel, X, y);
    bool wants_est = !artifact.columns.empty() && artifact.columns.back() == kSourceEstCol &&
                     panel.columns.size() + 1 == artifact.columns.size();
    if (!wants_est) {
        if (panel.columns != artifact.columns)
            throw ConfigError("panel columns do not match the model's schema");
        return artifact.model.predict(X);
    }
    std::vector<double> est = source_model.model.predict(X);
    Matrix Xa(X.rows, X.cols + 1);
    for (size_t i = 0; i < X.rows; ++i) {
        for (size_t j = 0; j < X.cols; ++j) Xa.at(i, j) = X.at(i, j);
        Xa.at(i, X.cols) = est[i];
    }
    return artifact.model.predict(Xa);
}

TransferOutcome compare_transfer(const FeaturePanel& panel_target,
                                 const ModelArtifact& source_model, const TransferConfig& config,
                                 const std::vector<int>& train_windows,
                                 const std::vector<int>& test_windows, uint64_t seed) {
    if (config.target_fraction <= 0 || config.target_fraction > 1)
        throw ConfigError("target_fraction must lie in (0, 1]");

    auto [train, test] = temporal_split(panel_target, train_windows, test_windows);

    // Scarcity ablation: keep a deterministic random subset of the train
    // rows; both arms see exactly this subset.
    if (config.target_fraction < 1.0) {
        size_t n = train.rows.size();
        size_t keep = std::max<size_t>(1, static_cast<size_t>(
                                              std::ceil(config.target_fraction *
                                                        static_cast<double>(n))));
        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng = substream(seed, 0x73756273u);  // "subs"
        for (size_t i = 0; i + 1 < n; ++i) {
            size_t j = i + static_cast<size_t>(rng.next_u64() % (n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        std::vector<PanelRow> kept;
        kept.reserve(keep);
        for (size_t i : idx) kept.push_back(train.rows[i]);
        train.rows = std::move(kept);
    }

    Matrix Xtr;
    std::vector<double> ytr;
    panel_to_xy(train, Xtr, ytr);
    Matrix Xte;
    std::vector<double> yte;
    panel_to_xy(test, Xte, yte);

    // Scratch arm: same model family, no source information.
    LinearModel scratch = fit_linear(Xtr, ytr, config.fine_tune_model);
    Metrics without = evaluate(yte, scratch.predict(Xte));

    // Transfer arm.
    ModelArtifact tuned = transfer_fine_tune(source_model, train, config);
    Metrics with = evaluate(yte, predict_with_artifact(tuned, source_model, test));

    TransferOutcome out;
    out.metrics_with_transfer = with;
    out.metrics_without_transfer = without;
    out.relative_nrmse_reduction = 1.0 - with.nrmse / without.nrmse;
    return out;
}

}  // namespace bandcast
