#include "bandcast/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "bandcast/rng.hpp"
#include "json.hpp"

namespace bandcast {

double LinearModel::predict_row(const double* x, size_t n) const {
    double s = intercept;
    for (size_t j = 0; j < n; ++j) s += coef[j] * x[j];
    return s;
}

std::vector<double> LinearModel::predict(const Matrix& X) const {
    if (X.cols != coef.size()) throw NumericError("linear predict: feature count mismatch");
    std::vector<double> out(X.rows);
    for (size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i), X.cols);
    return out;
}

double Tree::predict_row(const double* x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
        i = (x[nodes[i].feature] <= nodes[i].threshold) ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
}

double TreeEnsemble::predict_row(const double* x) const {
    if (kind == EnsembleKind::gradient_boosted) {
        double s = base;
        for (const auto& t : trees) s += learning_rate * t.predict_row(x);
        return s;
    }
    double s = 0;
    for (const auto& t : trees) s += t.predict_row(x);
    return s / static_cast<double>(trees.size());
}

std::vector<double> TreeEnsemble::predict(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (size_t i = 0; i < X.rows; ++i) out[i] = predict_row(X.row(i));
    return out;
}

LinearModel fit_ols(const Matrix& X, const std::vector<double>& y) {
    if (X.rows == 0 || y.size() != X.rows) throw NumericError("fit_ols: empty or mismatched data");
    Matrix A(X.rows, X.cols + 1);
    for (size_t i = 0; i < X.rows; ++i) {
        A.at(i, 0) = 1.0;
        for (size_t j = 0; j < X.cols; ++j) A.at(i, j + 1) = X.at(i, j);
    }
    LinearModel m;
    std::vector<double> theta = lstsq(A, y, &m.rank_deficient);
    m.intercept = theta[0];
    m.coef.assign(theta.begin() + 1, theta.end());
    return m;
}

LinearModel fit_lasso_warm(const Matrix& X, const std::vector<double>& y, double lambda,
                           const LinearModel& init, const std::vector<uint8_t>* frozen,
                           bool freeze_intercept, double tol, int max_iter) {
    size_t n = X.rows, p = X.cols;
    if (n == 0 || y.size() != n) throw NumericError("fit_lasso: empty or mismatched data");
    if (lambda < 0) throw ConfigError("lasso lambda must be >= 0");
    if (init.coef.size() != p) throw NumericError("fit_lasso: warm start has wrong width");
    if (frozen && frozen->size() != p) throw NumericError("fit_lasso: frozen mask has wrong width");

    std::vector<double> col_ss(p, 0.0);  // (1/n) x_j' x_j
    for (size_t j = 0; j < p; ++j) {
        double s = 0;
        for (size_t i = 0; i < n; ++i) s += X.at(i, j) * X.at(i, j);
        col_ss[j] = s / static_cast<double>(n);
    }

    LinearModel m = init;
    m.lambda = lambda;
    m.iterations = 0;

    std::vector<double> resid(n);  // y - Xb - intercept
    for (size_t i = 0; i < n; ++i) {
        double pred = m.intercept;
        for (size_t j = 0; j < p; ++j) pred += m.coef[j] * X.at(i, j);
        resid[i] = y[i] - pred;
    }

    auto soft = [](double z, double g) {
        if (z > g) return z - g;
        if (z < -g) return z + g;
        return 0.0;
    };

    for (int it = 1; it <= max_iter; ++it) {
        double max_change = 0;
        for (size_t j = 0; j < p; ++j) {
            if (frozen && (*frozen)[j]) continue;
            if (col_ss[j] == 0.0) continue;  // degenerate column stays put
            double old = m.coef[j];
            double rho = 0;  // (1/n) x_j' (resid + x_j * old)
            for (size_t i = 0; i < n; ++i) rho += X.at(i, j) * resid[i];
            rho = rho / static_cast<double>(n) + col_ss[j] * old;
            double neu = soft(rho, lambda) / col_ss[j];
            if (neu != old) {
                double d = neu - old;
                for (size_t i = 0; i < n; ++i) resid[i] -= d * X.at(i, j);
                m.coef[j] = neu;
                max_change = std::max(max_change, std::abs(d));
            }
        }
        if (!freeze_intercept) {
            // Unpenalized intercept: re-center on the residual mean.
            double rmean =
                std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(n);
            if (rmean != 0.0) {
                m.intercept += rmean;
                for (size_t i = 0; i < n; ++i) resid[i] -= rmean;
                max_change = std::max(max_change, std::abs(rmean));
            }
        }
        m.iterations = it;
        m.final_change = max_change;
        if (max_change < tol) return m;
    }
    throw LassoNonConvergence("lasso did not converge in " + std::to_string(max_iter) + " sweeps",
                              m);
}

LinearModel fit_lasso(const Matrix& X, const std::vector<double>& y, double lambda, double tol,
                      int max_iter) {
    LinearModel init;
    init.coef.assign(X.cols, 0.0);
    init.intercept =
        y.empty() ? 0.0 : std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    return fit_lasso_warm(X, y, lambda, init, nullptr, false, tol, max_iter);
}

namespace {

struct TreeBuilder {
    const Matrix& X;
    const std::vector<double>& y;
    int max_depth;
    int min_leaf;
    double feature_frac;
    Rng* rng;  // null = consider every feature at every split
    std::vector<TreeNode> nodes;

    int build(std::vector<int>& rows, int depth) {
        double n = static_cast<double>(rows.size());
        double sum = 0, sum2 = 0;
        for (int r : rows) {
            sum += y[r];
            sum2 += y[r] * y[r];
        }
        double mean = sum / n;
        double sse = sum2 - sum * sum / n;

        int idx = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[idx].value = mean;

        if (depth >= max_depth || rows.size() < 2 * static_cast<size_t>(min_leaf) || sse <= 0.0)
            return idx;

        std::vector<int> feats = pick_features();
        int best_f = -1;
        double best_thr = 0, best_red = 0;

        std::vector<int> order;
        for (int f : feats) {
            order = rows;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (X.at(a, f) != X.at(b, f)) return X.at(a, f) < X.at(b, f);
                return a < b;
            });
            double lsum = 0, lsum2 = 0;
            for (size_t i = 0; i + 1 < order.size(); ++i) {
                double v = y[order[i]];
                lsum += v;
                lsum2 += v * v;
                double xl = X.at(order[i], f), xr = X.at(order[i + 1], f);
                if (xl == xr) continue;  // candidate only between distinct values
                size_t nl = i + 1, nr = order.size() - nl;
                if (nl < static_cast<size_t>(min_leaf) || nr < static_cast<size_t>(min_leaf))
                    continue;
                double rsum = sum - lsum, rsum2 = sum2 - lsum2;
                double sse_l = lsum2 - lsum * lsum / static_cast<double>(nl);
                double sse_r = rsum2 - rsum * rsum / static_cast<double>(nr);
                double red = sse - sse_l - sse_r;
                // Strict improvement keeps the first (lowest feature, lowest
                // threshold) candidate on ties.
                if (red > best_red) {
                    best_red = red;
                    best_f = f;
                    best_thr = (xl + xr) / 2.0;
                }
            }
        }

        if (best_f < 0) return idx;

        std::vector<int> lrows, rrows;
        for (int r : rows)
            (X.at(r, best_f) <= best_thr ? lrows : rrows).push_back(r);
        nodes[idx].feature = best_f;
        nodes[idx].threshold = best_thr;
        int li = build(lrows, depth + 1);
        int ri = build(rrows, depth + 1);
        nodes[idx].left = li;
        nodes[idx].right = ri;
        return idx;
    }

    std::vector<int> pick_features() {
        int p = static_cast<int>(X.cols);
        std::vector<int> feats(p);
        std::iota(feats.begin(), feats.end(), 0);
        if (!rng || feature_frac >= 1.0) return feats;
        int k = std::max(1, static_cast<int>(std::lround(feature_frac * p)));
        // Partial Fisher-Yates, then sort so the scan order (and with it the
        // tie-breaking) stays canonical.
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(rng->next_u64() % static_cast<uint64_t>(p - i));
            std::swap(feats[i], feats[j]);
        }
        feats.resize(k);
        std::sort(feats.begin(), feats.end());
        return feats;
    }
};

Tree build_tree(const Matrix& X, const std::vector<double>& y, std::vector<int> rows,
                int max_depth, int min_leaf, double feature_frac, Rng* rng) {
    TreeBuilder b{X, y, max_depth, min_leaf, feature_frac, rng, {}};
    b.build(rows, 0);
    Tree t;
    t.nodes = std::move(b.nodes);
    return t;
}

std::vector<int> all_rows(size_t n) {
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

}  // namespace

TreeEnsemble fit_tree(const Matrix& X, const std::vector<double>& y, int max_depth, int min_leaf) {
    if (X.rows == 0 || y.size() != X.rows) throw NumericError("fit_tree: empty data");
    TreeEnsemble e;
    e.kind = EnsembleKind::single_tree;
    e.trees.push_back(build_tree(X, y, all_rows(X.rows), max_depth, min_leaf, 1.0, nullptr));
    return e;
}

TreeEnsemble fit_forest(const Matrix& X, const std::vector<double>& y, int n_trees, int max_depth,
                        int min_leaf, double feature_frac, uint64_t seed, bool bootstrap) {
    if (n_trees < 1) throw ConfigError("fit_forest: n_trees must be >= 1");
    if (X.rows == 0) throw NumericError("fit_forest: empty data");
    TreeEnsemble e;
    e.kind = EnsembleKind::random_forest;
    e.rng_seed = seed;
    for (int t = 0; t < n_trees; ++t) {
        Rng rng = substream(seed, 0x464F5245u, static_cast<uint64_t>(t));
        std::vector<int> rows;
        if (bootstrap) {
            rows.resize(X.rows);
            for (auto& r : rows) r = static_cast<int>(rng.next_u64() % X.rows);
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows(X.rows);
        }
        e.trees.push_back(build_tree(X, y, std::move(rows), max_depth, min_leaf, feature_frac,
                                     feature_frac < 1.0 ? &rng : nullptr));
    }
    return e;
}

TreeEnsemble fit_gbm(const Matrix& X, const std::vector<double>& y, int n_rounds,
                     double learning_rate, int max_depth, int min_leaf, uint64_t seed) {
    if (n_rounds < 1) throw ConfigError("fit_gbm: n_rounds must be >= 1");
    if (X.rows == 0) throw NumericError("fit_gbm: empty data");
    if (learning_rate <= 0 || learning_rate > 1)
        throw ConfigError("fit_gbm: learning_rate must be in (0, 1]");
    TreeEnsemble e;
    e.kind = EnsembleKind::gradient_boosted;
    e.learning_rate = learning_rate;
    e.rng_seed = seed;
    e.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

    std::vector<double> resid(y.size());
    for (size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - e.base;
    for (int r = 0; r < n_rounds; ++r) {
        Tree t = build_tree(X, resid, all_rows(X.rows), max_depth, min_leaf, 1.0, nullptr);
        for (size_t i = 0; i < y.size(); ++i)
            resid[i] -= learning_rate * t.predict_row(X.row(i));
        e.trees.push_back(std::move(t));
    }
    return e;
}

Metrics evaluate(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    size_t n = y_true.size();
    if (n == 0 || y_pred.size() != n) throw NumericError("evaluate: empty or mismatched series");
    double lo = y_true[0], hi = y_true[0];
    double mean = 0;
    for (double v : y_true) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        mean += v;
    }
    mean /= static_cast<double>(n);
    if (hi <= lo) throw NumericError("evaluate: constant y_true, nrmse and r2 undefined");

    double ss_res = 0, ss_tot = 0;
    for (size_t i = 0; i < n; ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    Metrics m;
    m.rmse = std::sqrt(ss_res / static_cast<double>(n));
    m.nrmse = m.rmse / (hi - lo);
    m.r2 = 1.0 - ss_res / ss_tot;
    m.accuracy = 1.0 - m.nrmse;
    return m;
}

std::pair<FeaturePanel, FeaturePanel> temporal_split(const FeaturePanel& panel,
                                                     const std::vector<int>& train_windows,
                                                     const std::vector<int>& test_windows) {
    if (panel.standardized) throw ConfigError("temporal_split expects an unstandardized panel");
    if (train_windows.empty() || test_windows.empty())
        throw ConfigError("temporal_split: empty window set");
    std::set<int> train_set(train_windows.begin(), train_windows.end());
    std::set<int> test_set(test_windows.begin(), test_windows.end());
    for (int w : test_set)
        if (train_set.count(w)) throw ConfigError("train/test windows overlap");
    if (*test_set.begin() <= *train_set.rbegin())
        throw ConfigError("test windows must all come after train windows");

    FeaturePanel train, test;
    train.lags = test.lags = panel.lags;
    train.columns = test.columns = panel.columns;
    for (const auto& r : panel.rows) {
        if (train_set.count(r.window)) train.rows.push_back(r);
        else if (test_set.count(r.window)) test.rows.push_back(r);
    }
    if (train.rows.empty() || test.rows.empty())
        throw ConfigError("temporal_split: a side has no rows");

    // Pooled train statistics per quarter-of-year, computed before the train
    // rows are standardized in place.
    size_t ncol = panel.columns.size();
    struct MuSd { double mean = 0, std = 0; bool degenerate = false; bool present = false; };
    std::vector<std::vector<MuSd>> quarter_stats(4, std::vector<MuSd>(ncol));
    std::vector<MuSd> overall(ncol);
    auto fill_stats = [&](std::vector<MuSd>& dst, const std::vector<const PanelRow*>& rows) {
        double n = static_cast<double>(rows.size());
        for (size_t c = 0; c < ncol; ++c) {
            double m = 0;
            for (auto* r : rows) m += r->x[c];
            m /= n;
            double ss = 0;
            for (auto* r : rows) ss += (r->x[c] - m) * (r->x[c] - m);
            double s = std::sqrt(ss / n);
            dst[c] = {m, s, s == 0.0, true};
        }
    };
    std::vector<const PanelRow*> all;
    std::vector<std::vector<const PanelRow*>> by_quarter(4);
    for (const auto& r : train.rows) {
        all.push_back(&r);
        by_quarter[r.window % 4].push_back(&r);
    }
    fill_stats(overall, all);
    for (int q = 0; q < 4; ++q)
        if (!by_quarter[q].empty()) fill_stats(quarter_stats[q], by_quarter[q]);

    standardize_per_window(train);

    int max_test_w = 0;
    for (const auto& r : test.rows) max_test_w = std::max(max_test_w, r.window);
    test.stats.assign(static_cast<size_t>(max_test_w + 1), std::vector<ColumnStats>(ncol));
    for (auto& r : test.rows) {
        int q = r.window % 4;
        const auto& stats = quarter_stats[q][0].present ? quarter_stats[q] : overall;
        for (size_t c = 0; c < ncol; ++c) {
            const MuSd& st = stats[c];
            r.x[c] = st.degenerate ? 0.0 : (r.x[c] - st.mean) / st.std;
            test.stats[r.window][c] = {st.mean, st.std, st.degenerate};
        }
    }
    test.standardized = true;
    return {std::move(train), std::move(test)};
}

void panel_to_xy(const FeaturePanel& panel, Matrix& X, std::vector<double>& y) {
    X = Matrix(panel.rows.size(), panel.columns.size());
    y.resize(panel.rows.size());
    for (size_t i = 0; i < panel.rows.size(); ++i) {
        for (size_t j = 0; j < panel.columns.size(); ++j) X.at(i, j) = panel.rows[i].x[j];
        y[i] = panel.rows[i].target;
    }
}

std::string linear_model_to_json(const LinearModel& m, const std::vector<std::string>& columns) {
    nlohmann::json j;
    j["type"] = "linear";
    j["regularization"] = m.lambda > 0 ? "l1" : "none";
    j["lambda"] = m.lambda;
    j["intercept"] = m.intercept;
    j["iterations"] = m.iterations;
    j["final_change"] = m.final_change;
    j["rank_deficient"] = m.rank_deficient;
    nlohmann::json coefs = nlohmann::json::object();
    for (size_t i = 0; i < m.coef.size(); ++i) coefs[columns[i]] = m.coef[i];
    j["coefficients"] = coefs;
    return j.dump(2);
}

std::string ensemble_to_json(const TreeEnsemble& m) {
    nlohmann::json j;
    switch (m.kind) {
        case EnsembleKind::single_tree: j["type"] = "single_tree"; break;
        case EnsembleKind::random_forest: j["type"] = "random_forest"; break;
        case EnsembleKind::gradient_boosted: j["type"] = "gradient_boosted"; break;
    }
    j["learning_rate"] = m.learning_rate;
    j["base"] = m.base;
    j["seed"] = m.rng_seed;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : t.nodes) {
            nlohmann::json n;
            n["feature"] = nd.feature;
            n["threshold"] = nd.threshold;
            n["value"] = nd.value;
            n["left"] = nd.left;
            n["right"] = nd.right;
            nodes.push_back(n);
        }
        trees.push_back({{"nodes", nodes}});
    }
    j["trees"] = trees;
    return j.dump(2);
}

}  // namespace bandcast
