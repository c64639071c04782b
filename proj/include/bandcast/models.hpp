#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bandcast/errors.hpp"
#include "bandcast/features.hpp"
#include "bandcast/linalg.hpp"

namespace bandcast {

struct LinearModel {
    double intercept = 0;
    std::vector<double> coef;
    double lambda = 0;  // 0 = unregularized
    int iterations = 0;
    double final_change = 0;  // max coefficient change on the last sweep
    bool rank_deficient = false;

    double predict_row(const double* x, size_t n) const;
    std::vector<double> predict(const Matrix& X) const;
};

// Thrown when coordinate descent does not converge; carries the last iterate
// so callers can inspect or keep it deliberately.
struct LassoNonConvergence : NumericError {
    LinearModel last;
    LassoNonConvergence(const std::string& msg, LinearModel m)
        : NumericError(msg), last(std::move(m)) {}
};

struct TreeNode {
    int feature = -1;      // -1 marks a leaf
    double threshold = 0;  // go left when x[feature] <= threshold
    double value = 0;      // leaf prediction
    int left = -1, right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict_row(const double* x) const;
};

enum class EnsembleKind { single_tree, random_forest, gradient_boosted };

struct TreeEnsemble {
    EnsembleKind kind = EnsembleKind::single_tree;
    std::vector<Tree> trees;
    double learning_rate = 1.0;  // boosting only
    double base = 0;             // boosting base prediction (target mean)
    uint64_t rng_seed = 0;

    double predict_row(const double* x) const;
    std::vector<double> predict(const Matrix& X) const;
};

struct Metrics {
    double rmse = 0;
    double nrmse = 0;
    double r2 = 0;
    double accuracy = 0;  // 1 - nrmse, by definition
};

// Ordinary least squares via QR; rank-deficient designs fall back to the
// minimum-norm solution and set rank_deficient.
LinearModel fit_ols(const Matrix& X, const std::vector<double>& y);

// Cyclic coordinate descent on (1/2n)||y - Xb - intercept||^2 + lambda*||b||_1
// with an unpenalized intercept. Assumes column-standardized X.
LinearModel fit_lasso(const Matrix& X, const std::vector<double>& y, double lambda,
                      double tol = 1e-7, int max_iter = 10000);

// Same solver with a warm start and an optional frozen-coefficient mask;
// frozen coefficients (and, optionally, the intercept) are never touched.
LinearModel fit_lasso_warm(const Matrix& X, const std::vector<double>& y, double lambda,
                           const LinearModel& init, const std::vector<uint8_t>* frozen,
                           bool freeze_intercept, double tol = 1e-7, int max_iter = 10000);

// Greedy variance-reduction regression tree. Split candidates are midpoints
// between consecutive sorted unique feature values; ties break toward the
// lowest feature index, then the lowest threshold.
TreeEnsemble fit_tree(const Matrix& X, const std::vector<double>& y, int max_depth, int min_leaf);

// Bagged trees with per-split feature subsampling. `bootstrap = false` makes
// every tree see the full sample (useful mainly for tests).
TreeEnsemble fit_forest(const Matrix& X, const std::vector<double>& y, int n_trees, int max_depth,
                        int min_leaf, double feature_frac, uint64_t seed, bool bootstrap = true);

// Least-squares gradient boosting: stagewise trees on residuals.
TreeEnsemble fit_gbm(const Matrix& X, const std::vector<double>& y, int n_rounds,
                     double learning_rate, int max_depth, int min_leaf, uint64_t seed);

// rmse / nrmse (range-normalized) / r2 / accuracy = 1 - nrmse. Throws when
// y_true is constant (nrmse and r2 undefined).
Metrics evaluate(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// Splits panel rows by window membership and standardizes both halves using
// train-only statistics: train windows with their own per-window stats, test
// windows with pooled train stats of the matching quarter-of-year (window
// index mod 4). Input panel must be unstandardized.
std::pair<FeaturePanel, FeaturePanel> temporal_split(const FeaturePanel& panel,
                                                     const std::vector<int>& train_windows,
                                                     const std::vector<int>& test_windows);

// Panel rows -> design matrix + target vector, in row order.
void panel_to_xy(const FeaturePanel& panel, Matrix& X, std::vector<double>& y);

std::string linear_model_to_json(const LinearModel& m, const std::vector<std::string>& columns);
std::string ensemble_to_json(const TreeEnsemble& m);

}  // namespace bandcast
