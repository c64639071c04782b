#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bandcast/errors.hpp"
#include "bandcast/models.hpp"
#include "bandcast/rng.hpp"

using namespace bandcast;

namespace {

Matrix column_matrix(const std::vector<double>& x) {
    Matrix X(x.size(), 1);
    for (size_t i = 0; i < x.size(); ++i) X.at(i, 0) = x[i];
    return X;
}

// Gaussian elimination with partial pivoting, independent of linalg.cpp.
std::vector<double> solve_normal_equations(const Matrix& X, const std::vector<double>& y) {
    size_t n = X.rows, p = X.cols + 1;
    std::vector<std::vector<double>> G(p, std::vector<double>(p + 1, 0.0));
    auto a = [&](size_t i, size_t j) { return j == 0 ? 1.0 : X.at(i, j - 1); };
    for (size_t r = 0; r < p; ++r) {
        for (size_t c = 0; c < p; ++c) {
            double s = 0;
            for (size_t i = 0; i < n; ++i) s += a(i, r) * a(i, c);
            G[r][c] = s;
        }
        double s = 0;
        for (size_t i = 0; i < n; ++i) s += a(i, r) * y[i];
        G[r][p] = s;
    }
    for (size_t k = 0; k < p; ++k) {
        size_t piv = k;
        for (size_t r = k + 1; r < p; ++r)
            if (std::abs(G[r][k]) > std::abs(G[piv][k])) piv = r;
        std::swap(G[k], G[piv]);
        for (size_t r = k + 1; r < p; ++r) {
            double f = G[r][k] / G[k][k];
            for (size_t c = k; c <= p; ++c) G[r][c] -= f * G[k][c];
        }
    }
    std::vector<double> theta(p);
    for (size_t k = p; k-- > 0;) {
        double s = G[k][p];
        for (size_t c = k + 1; c < p; ++c) s -= G[k][c] * theta[c];
        theta[k] = s / G[k][k];
    }
    return theta;
}

double lasso_objective(const Matrix& X, const std::vector<double>& y, const LinearModel& m) {
    double ss = 0;
    for (size_t i = 0; i < X.rows; ++i) {
        double r = y[i] - m.predict_row(X.row(i), X.cols);
        ss += r * r;
    }
    double l1 = 0;
    for (double c : m.coef) l1 += std::abs(c);
    return ss / (2.0 * static_cast<double>(X.rows)) + m.lambda * l1;
}

// Best depth-1 SSE over every feature and every midpoint, by brute force.
double best_stump_sse(const Matrix& X, const std::vector<double>& y, int min_leaf) {
    size_t n = X.rows;
    double sum = 0, sum2 = 0;
    for (double v : y) {
        sum += v;
        sum2 += v * v;
    }
    double best = sum2 - sum * sum / static_cast<double>(n);  // no-split SSE
    for (size_t f = 0; f < X.cols; ++f) {
        std::vector<double> vals;
        for (size_t i = 0; i < n; ++i) vals.push_back(X.at(i, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (size_t k = 0; k + 1 < vals.size(); ++k) {
            double thr = (vals[k] + vals[k + 1]) / 2.0;
            double ls = 0, ls2 = 0, rs = 0, rs2 = 0;
            size_t nl = 0, nr = 0;
            for (size_t i = 0; i < n; ++i) {
                if (X.at(i, f) <= thr) {
                    ls += y[i];
                    ls2 += y[i] * y[i];
                    ++nl;
                } else {
                    rs += y[i];
                    rs2 += y[i] * y[i];
                    ++nr;
                }
            }
            if (nl < static_cast<size_t>(min_leaf) || nr < static_cast<size_t>(min_leaf)) continue;
            double sse = (ls2 - ls * ls / static_cast<double>(nl)) +
                         (rs2 - rs * rs / static_cast<double>(nr));
            best = std::min(best, sse);
        }
    }
    return best;
}

double model_sse(const TreeEnsemble& e, const Matrix& X, const std::vector<double>& y) {
    std::vector<double> pred = e.predict(X);
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
    return s;
}

PanelRow make_row(int tile_row, int window, std::vector<double> x, double target) {
    PanelRow r;
    r.tile = {tile_row, 0};
    r.window = window;
    r.x = std::move(x);
    r.target = target;
    return r;
}

}  // namespace

// ---------------------------------------------------------------- ols

TEST_CASE("fit_ols recovers an exact affine relation") {
    Matrix X = column_matrix({0, 1, 2, 3});
    LinearModel m = fit_ols(X, {5, 8, 11, 14});
    CHECK(m.intercept == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m.coef[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK_FALSE(m.rank_deficient);
}

TEST_CASE("fit_ols on constant targets puts everything in the intercept") {
    Matrix X = column_matrix({1, 2, 3, 4, 5});
    LinearModel m = fit_ols(X, {7, 7, 7, 7, 7});
    CHECK(m.intercept == doctest::Approx(7.0).epsilon(1e-10));
    CHECK(m.coef[0] == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("fit_ols matches an independent normal-equations oracle") {
    Rng r(808);
    Matrix X(50, 3);
    std::vector<double> y(50);
    for (size_t i = 0; i < 50; ++i) {
        for (size_t j = 0; j < 3; ++j) X.at(i, j) = r.normal();
        y[i] = 2.0 + 1.5 * X.at(i, 0) - 0.7 * X.at(i, 2) + 0.3 * r.normal();
    }
    LinearModel m = fit_ols(X, y);
    std::vector<double> theta = solve_normal_equations(X, y);
    CHECK(std::abs(m.intercept - theta[0]) <= 1e-8);
    for (size_t j = 0; j < 3; ++j) CHECK(std::abs(m.coef[j] - theta[j + 1]) <= 1e-8);
}

TEST_CASE("ols residuals are orthogonal to the design") {
    Rng r(809);
    Matrix X(40, 2);
    std::vector<double> y(40);
    for (size_t i = 0; i < 40; ++i) {
        X.at(i, 0) = r.uniform(-3, 3);
        X.at(i, 1) = r.normal();
        y[i] = r.uniform(0, 10);
    }
    LinearModel m = fit_ols(X, y);
    std::vector<double> pred = m.predict(X);
    double g0 = 0, g1 = 0, gi = 0;
    for (size_t i = 0; i < 40; ++i) {
        double e = y[i] - pred[i];
        g0 += e * X.at(i, 0);
        g1 += e * X.at(i, 1);
        gi += e;
    }
    CHECK(std::abs(g0) <= 1e-8);
    CHECK(std::abs(g1) <= 1e-8);
    CHECK(std::abs(gi) <= 1e-8);
}

TEST_CASE("fit_ols flags duplicated columns and splits weight evenly") {
    Matrix X(6, 2);
    for (int i = 0; i < 6; ++i) X.at(i, 0) = X.at(i, 1) = static_cast<double>(i);
    std::vector<double> y = {0, 2, 4, 6, 8, 10};
    LinearModel m = fit_ols(X, y);
    CHECK(m.rank_deficient);
    // minimum-norm solution shares the slope of 2 equally
    CHECK(m.coef[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(m.coef[1] == doctest::Approx(1.0).epsilon(1e-8));
    std::vector<double> pred = m.predict(X);
    for (int i = 0; i < 6; ++i) CHECK(pred[i] == doctest::Approx(y[i]).epsilon(1e-8));
}

// ---------------------------------------------------------------- lasso

TEST_CASE("lasso at lambda zero matches ols") {
    Rng r(910);
    Matrix X(60, 3);
    std::vector<double> y(60);
    for (size_t i = 0; i < 60; ++i) {
        for (size_t j = 0; j < 3; ++j) X.at(i, j) = r.normal();
        y[i] = 1.0 - 2.0 * X.at(i, 1) + 0.5 * X.at(i, 2) + 0.1 * r.normal();
    }
    LinearModel ols = fit_ols(X, y);
    LinearModel lasso = fit_lasso(X, y, 0.0, 1e-10, 100000);
    CHECK(std::abs(lasso.intercept - ols.intercept) <= 1e-6);
    for (size_t j = 0; j < 3; ++j) CHECK(std::abs(lasso.coef[j] - ols.coef[j]) <= 1e-6);
}

TEST_CASE("lasso equals the soft-threshold closed form on an orthonormal design") {
    // columns with (1/n) x_j' x_j = 1 and zero cross products
    Matrix X(4, 2);
    const double c1[4] = {1, 1, -1, -1};
    const double c2[4] = {1, -1, 1, -1};
    for (int i = 0; i < 4; ++i) {
        X.at(i, 0) = c1[i];
        X.at(i, 1) = c2[i];
    }
    std::vector<double> y = {5, 1, -3, 1};
    // (1/n) x_j'(y - mean): 2 and 0; mean(y) = 1
    const double lambda = 0.5;
    LinearModel m = fit_lasso(X, y, lambda);
    CHECK(std::abs(m.coef[0] - 1.5) <= 1e-6);  // soft(2, 0.5)
    CHECK(std::abs(m.coef[1] - 0.0) <= 1e-6);  // soft(0, 0.5)
    CHECK(std::abs(m.intercept - 1.0) <= 1e-6);

    Rng r(911);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> yy(4);
        for (auto& v : yy) v = r.uniform(-5, 5);
        double mean = (yy[0] + yy[1] + yy[2] + yy[3]) / 4.0;
        double rho1 = 0, rho2 = 0;
        for (int i = 0; i < 4; ++i) {
            rho1 += c1[i] * (yy[i] - mean);
            rho2 += c2[i] * (yy[i] - mean);
        }
        rho1 /= 4;
        rho2 /= 4;
        double lam = r.uniform(0, 3);
        auto soft = [&](double z) { return z > lam ? z - lam : (z < -lam ? z + lam : 0.0); };
        LinearModel mm = fit_lasso(X, yy, lam);
        CHECK(std::abs(mm.coef[0] - soft(rho1)) <= 1e-6);
        CHECK(std::abs(mm.coef[1] - soft(rho2)) <= 1e-6);
    }
}

TEST_CASE("lambda at or above lambda_max zeroes every coefficient exactly") {
    Matrix X(4, 2);
    const double c1[4] = {1, 1, -1, -1};
    const double c2[4] = {1, -1, 1, -1};
    for (int i = 0; i < 4; ++i) {
        X.at(i, 0) = c1[i];
        X.at(i, 1) = c2[i];
    }
    std::vector<double> y = {5, 1, -3, 1};  // lambda_max = 2
    for (double lam : {2.0, 2.5, 10.0}) {
        LinearModel m = fit_lasso(X, y, lam);
        CHECK(m.coef[0] == 0.0);
        CHECK(m.coef[1] == 0.0);
        CHECK(m.intercept == 1.0);
    }
}

TEST_CASE("coordinate descent never increases the objective") {
    Rng r(912);
    Matrix X(30, 4);
    std::vector<double> y(30);
    for (size_t i = 0; i < 30; ++i) {
        double z = r.normal();
        for (size_t j = 0; j < 4; ++j) X.at(i, j) = 0.7 * z + 0.3 * r.normal();  // correlated
        y[i] = 3.0 * X.at(i, 0) - X.at(i, 3) + 0.2 * r.normal();
    }
    double prev = 1e300;
    for (int sweeps = 1; sweeps <= 40; ++sweeps) {
        LinearModel m;
        bool converged = true;
        try {
            m = fit_lasso(X, y, 0.1, 1e-12, sweeps);
        } catch (const LassoNonConvergence& e) {
            m = e.last;
            converged = false;
        }
        double obj = lasso_objective(X, y, m);
        CHECK(obj <= prev + 1e-12);
        prev = obj;
        if (converged) break;
    }
}

TEST_CASE("non-convergence carries the last iterate") {
    Matrix X(10, 2);
    Rng r(913);
    std::vector<double> y(10);
    for (size_t i = 0; i < 10; ++i) {
        double z = r.normal();
        X.at(i, 0) = z;
        X.at(i, 1) = z + 0.001 * r.normal();  // nearly collinear
        y[i] = z * 5 + r.normal();
    }
    CHECK_THROWS_AS(fit_lasso(X, y, 1e-9, 1e-15, 2), LassoNonConvergence);
    try {
        fit_lasso(X, y, 1e-9, 1e-15, 2);
    } catch (const LassoNonConvergence& e) {
        CHECK(e.last.coef.size() == 2);
        CHECK(e.last.iterations == 2);
        CHECK(e.last.final_change >= 1e-15);
    }
    CHECK_THROWS_AS(fit_lasso(X, y, -1.0), ConfigError);
}

// ---------------------------------------------------------------- trees

TEST_CASE("depth-1 tree splits the documented fixture at 2.5") {
    Matrix X = column_matrix({1, 2, 3, 4});
    TreeEnsemble e = fit_tree(X, {0, 0, 10, 10}, 1, 1);
    REQUIRE(e.trees.size() == 1);
    const Tree& t = e.trees[0];
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == 2.5);
    double left[1] = {2.0}, right[1] = {3.2};
    CHECK(t.predict_row(left) == 0.0);
    CHECK(t.predict_row(right) == 10.0);
}

TEST_CASE("depth-1 tree matches exhaustive split search") {
    Rng r(1001);
    for (int trial = 0; trial < 40; ++trial) {
        size_t n = 4 + r.next_u64() % 13;  // up to 16 points
        size_t p = 1 + r.next_u64() % 3;
        Matrix X(n, p);
        std::vector<double> y(n);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < p; ++j)
                X.at(i, j) = static_cast<double>(r.next_u64() % 8);  // ties likely
            y[i] = r.uniform(-10, 10);
        }
        TreeEnsemble e = fit_tree(X, y, 1, 1);
        CHECK(model_sse(e, X, y) == doctest::Approx(best_stump_sse(X, y, 1)).epsilon(1e-9));
    }
}

TEST_CASE("constant targets produce a single leaf") {
    Matrix X = column_matrix({1, 2, 3, 4, 5});
    TreeEnsemble e = fit_tree(X, {3, 3, 3, 3, 3}, 4, 1);
    REQUIRE(e.trees[0].nodes.size() == 1);
    CHECK(e.trees[0].nodes[0].feature == -1);
    CHECK(e.trees[0].nodes[0].value == 3.0);
}

TEST_CASE("min_leaf rules out lopsided splits") {
    Matrix X = column_matrix({1, 2, 3, 4});
    // unconstrained best split is 3.5 (isolating the 10) but leaves one row
    TreeEnsemble e = fit_tree(X, {0, 0, 0, 10}, 1, 2);
    CHECK(e.trees[0].nodes[0].threshold == 2.5);
}

TEST_CASE("split ties break toward the lowest feature index") {
    Matrix X(4, 2);
    for (int i = 0; i < 4; ++i) X.at(i, 0) = X.at(i, 1) = static_cast<double>(i);
    TreeEnsemble e = fit_tree(X, {0, 0, 10, 10}, 1, 1);
    CHECK(e.trees[0].nodes[0].feature == 0);
}

TEST_CASE("depth-2 tree recovers a four-level staircase exactly") {
    Matrix X = column_matrix({1, 2, 3, 4, 5, 6, 7, 8});
    std::vector<double> y = {0, 0, 1, 1, 2, 2, 3, 3};
    TreeEnsemble e = fit_tree(X, y, 2, 1);
    std::vector<double> pred = e.predict(X);
    for (size_t i = 0; i < y.size(); ++i) CHECK(pred[i] == y[i]);
}

// ---------------------------------------------------------------- forest

TEST_CASE("a one-tree forest without bootstrap degenerates to the single tree") {
    Rng r(1102);
    Matrix X(30, 2);
    std::vector<double> y(30);
    for (size_t i = 0; i < 30; ++i) {
        X.at(i, 0) = r.uniform(-2, 2);
        X.at(i, 1) = r.uniform(-2, 2);
        y[i] = X.at(i, 0) * 3 + r.normal();
    }
    TreeEnsemble tree = fit_tree(X, y, 3, 2);
    TreeEnsemble forest = fit_forest(X, y, 1, 3, 2, 1.0, 99, false);
    std::vector<double> pt = tree.predict(X);
    std::vector<double> pf = forest.predict(X);
    for (size_t i = 0; i < y.size(); ++i) CHECK(pf[i] == pt[i]);
}

TEST_CASE("forests are seed-deterministic") {
    Rng r(1103);
    Matrix X(40, 3);
    std::vector<double> y(40);
    for (size_t i = 0; i < 40; ++i) {
        for (size_t j = 0; j < 3; ++j) X.at(i, j) = r.normal();
        y[i] = X.at(i, 0) - X.at(i, 1) + 0.5 * r.normal();
    }
    TreeEnsemble a = fit_forest(X, y, 12, 3, 2, 0.67, 4242);
    TreeEnsemble b = fit_forest(X, y, 12, 3, 2, 0.67, 4242);
    TreeEnsemble c = fit_forest(X, y, 12, 3, 2, 0.67, 4243);
    std::vector<double> pa = a.predict(X), pb = b.predict(X), pc = c.predict(X);
    CHECK(pa == pb);
    CHECK(pa != pc);
}

TEST_CASE("bagging beats a lone tree on noisy curvature") {
    int forest_wins = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Rng r(seed * 7919);
        const size_t n = 120;
        Matrix Xtr(n, 1), Xte(60, 1);
        std::vector<double> ytr(n), yte(60);
        for (size_t i = 0; i < n; ++i) {
            double x = r.uniform(-3, 3);
            Xtr.at(i, 0) = x;
            ytr[i] = x * x + r.normal() * 1.5;
        }
        for (size_t i = 0; i < 60; ++i) {
            double x = -3.0 + 6.0 * static_cast<double>(i) / 59.0;
            Xte.at(i, 0) = x;
            yte[i] = x * x;
        }
        TreeEnsemble tree = fit_tree(Xtr, ytr, 6, 2);
        TreeEnsemble forest = fit_forest(Xtr, ytr, 40, 6, 2, 1.0, seed);
        if (model_sse(forest, Xte, yte) < model_sse(tree, Xte, yte)) ++forest_wins;
    }
    CHECK(forest_wins >= 8);
}

// ---------------------------------------------------------------- gbm

TEST_CASE("one boosting round at unit rate is the mean plus one tree") {
    Rng r(1201);
    Matrix X(25, 2);
    std::vector<double> y(25);
    for (size_t i = 0; i < 25; ++i) {
        X.at(i, 0) = r.uniform(0, 10);
        X.at(i, 1) = r.normal();
        y[i] = X.at(i, 0) * 2 + r.normal();
    }
    TreeEnsemble gbm = fit_gbm(X, y, 1, 1.0, 3, 2, 0);
    TreeEnsemble tree = fit_tree(X, y, 3, 2);
    std::vector<double> pg = gbm.predict(X), pt = tree.predict(X);
    for (size_t i = 0; i < y.size(); ++i) CHECK(pg[i] == doctest::Approx(pt[i]).epsilon(1e-12));
}

TEST_CASE("boosting train error is non-increasing round by round") {
    Rng r(1202);
    const size_t n = 80;
    Matrix X(n, 1);
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        double x = r.uniform(-3, 3);
        X.at(i, 0) = x;
        y[i] = std::sin(x) * 4 + 0.3 * r.normal();
    }
    const int rounds = 30;
    TreeEnsemble gbm = fit_gbm(X, y, rounds, 0.3, 3, 2, 0);
    REQUIRE(static_cast<int>(gbm.trees.size()) == rounds);

    std::vector<double> pred(n, gbm.base);
    double prev_sse = 1e300;
    for (int k = 0; k < rounds; ++k) {
        for (size_t i = 0; i < n; ++i)
            pred[i] += gbm.learning_rate * gbm.trees[k].predict_row(X.row(i));
        double sse = 0;
        for (size_t i = 0; i < n; ++i) sse += (y[i] - pred[i]) * (y[i] - pred[i]);
        CHECK(sse <= prev_sse + 1e-9);
        prev_sse = sse;
    }
}

TEST_CASE("a hundred rounds collapse the train error on a smooth target") {
    const size_t n = 200;
    Matrix X(n, 1);
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        double x = -3.0 + 6.0 * static_cast<double>(i) / (n - 1.0);
        X.at(i, 0) = x;
        y[i] = x * x;
    }
    TreeEnsemble one = fit_gbm(X, y, 1, 0.3, 3, 5, 0);
    TreeEnsemble hundred = fit_gbm(X, y, 100, 0.3, 3, 5, 0);
    double rmse1 = std::sqrt(model_sse(one, X, y) / n);
    double rmse100 = std::sqrt(model_sse(hundred, X, y) / n);
    CHECK(rmse100 <= 0.1 * rmse1);
}

TEST_CASE("gbm parameter validation") {
    Matrix X = column_matrix({1, 2, 3, 4});
    std::vector<double> y = {1, 2, 3, 4};
    CHECK_THROWS_AS(fit_gbm(X, y, 0, 0.3, 3, 1, 0), ConfigError);
    CHECK_THROWS_AS(fit_gbm(X, y, 5, 0.0, 3, 1, 0), ConfigError);
    CHECK_THROWS_AS(fit_gbm(X, y, 5, 1.5, 3, 1, 0), ConfigError);
    CHECK_THROWS_AS(fit_forest(X, y, 0, 3, 1, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(fit_tree(Matrix(), {}, 3, 1), NumericError);
}

// ---------------------------------------------------------------- metrics

TEST_CASE("evaluate oracles") {
    Metrics perfect = evaluate({0, 5, 10}, {0, 5, 10});
    CHECK(perfect.rmse == 0.0);
    CHECK(perfect.nrmse == 0.0);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.r2 == 1.0);

    Metrics mean_pred = evaluate({0, 10}, {5, 5});
    CHECK(mean_pred.rmse == 5.0);
    CHECK(mean_pred.nrmse == 0.5);
    CHECK(mean_pred.r2 == 0.0);

    Metrics m = evaluate({0, 10}, {1, 9});
    CHECK(m.rmse == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.nrmse == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(m.r2 == doctest::Approx(0.96).epsilon(1e-12));
}

TEST_CASE("accuracy and nrmse are exact complements") {
    Rng r(1301);
    for (int trial = 0; trial < 2000; ++trial) {
        size_t n = 2 + r.next_u64() % 20;
        std::vector<double> yt(n), yp(n);
        for (size_t i = 0; i < n; ++i) {
            yt[i] = r.uniform(-50, 50);
            yp[i] = yt[i] + r.uniform(-20, 20);
        }
        double lo = *std::min_element(yt.begin(), yt.end());
        double hi = *std::max_element(yt.begin(), yt.end());
        if (hi <= lo) continue;
        Metrics m = evaluate(yt, yp);
        CHECK(m.accuracy + m.nrmse == 1.0);
    }
}

TEST_CASE("evaluate rejects degenerate inputs") {
    CHECK_THROWS_AS(evaluate({5, 5, 5}, {1, 2, 3}), NumericError);
    CHECK_THROWS_AS(evaluate({}, {}), NumericError);
    CHECK_THROWS_AS(evaluate({1, 2}, {1, 2, 3}), NumericError);
}

// ---------------------------------------------------------------- split

TEST_CASE("temporal_split separates windows and standardizes without leakage") {
    // two tiles, windows 0..7; column 0 value depends on (tile, window)
    FeaturePanel panel;
    panel.lags = {0};
    panel.columns = {"traffic_volume_lag0", "signal_strength_lag0"};
    for (int tile = 0; tile < 4; ++tile)
        for (int w = 0; w < 8; ++w)
            panel.rows.push_back(make_row(tile, w,
                                          {10.0 * w + 3.0 * tile, -80.0 + tile + 0.5 * w},
                                          100.0 + 5.0 * w + tile));

    FeaturePanel original = panel;
    auto [train, test] = temporal_split(panel, {0, 1, 2, 3, 4, 5}, {6, 7});

    CHECK(train.standardized);
    CHECK(test.standardized);
    for (const auto& r : train.rows) CHECK(r.window <= 5);
    for (const auto& r : test.rows) CHECK(r.window >= 6);
    CHECK(train.rows.size() == 24);
    CHECK(test.rows.size() == 8);

    // test window 6 is quarter 2: its rows use pooled train stats from the
    // train windows congruent to 2 mod 4, i.e. window 2 only
    double mean2 = 0, n2 = 0;
    for (const auto& r : original.rows)
        if (r.window == 2) {
            mean2 += r.x[0];
            n2 += 1;
        }
    mean2 /= n2;
    double ss2 = 0;
    for (const auto& r : original.rows)
        if (r.window == 2) ss2 += (r.x[0] - mean2) * (r.x[0] - mean2);
    double sd2 = std::sqrt(ss2 / n2);

    for (size_t i = 0; i < test.rows.size(); ++i) {
        const PanelRow& r = test.rows[i];
        if (r.window != 6) continue;
        const PanelRow& orig = [&]() -> const PanelRow& {
            for (const auto& o : original.rows)
                if (o.window == 6 && o.tile.row == r.tile.row) return o;
            throw std::logic_error("row not found");
        }();
        CHECK(r.x[0] == doctest::Approx((orig.x[0] - mean2) / sd2).epsilon(1e-12));
        CHECK(r.target == orig.target);  // targets never standardized
    }
    CHECK(test.stats[6][0].mean == doctest::Approx(mean2).epsilon(1e-12));
    CHECK(test.stats[6][0].std == doctest::Approx(sd2).epsilon(1e-12));

    // train side is per-window standardized
    for (int w = 0; w <= 5; ++w) {
        double s = 0, n = 0;
        for (const auto& r : train.rows)
            if (r.window == w) {
                s += r.x[0];
                n += 1;
            }
        CHECK(std::abs(s / n) <= 1e-9);
    }
}

TEST_CASE("temporal_split validates its window sets") {
    FeaturePanel panel;
    panel.lags = {0};
    panel.columns = {"a"};
    for (int w = 0; w < 6; ++w)
        for (int t = 0; t < 3; ++t)
            panel.rows.push_back(make_row(t, w, {static_cast<double>(t + w)}, 50.0 + w));

    CHECK_THROWS_AS(temporal_split(panel, {0, 1, 2}, {2, 3}), ConfigError);  // overlap
    CHECK_THROWS_AS(temporal_split(panel, {2, 3}, {0, 1}), ConfigError);     // test before train
    CHECK_THROWS_AS(temporal_split(panel, {}, {4, 5}), ConfigError);
    CHECK_THROWS_AS(temporal_split(panel, {0, 1}, {}), ConfigError);
    CHECK_THROWS_AS(temporal_split(panel, {0, 1}, {8, 9}), ConfigError);  // no test rows

    FeaturePanel std_panel = panel;
    standardize_per_window(std_panel);
    CHECK_THROWS_AS(temporal_split(std_panel, {0, 1}, {4, 5}), ConfigError);
}

TEST_CASE("panel_to_xy preserves row order and targets") {
    FeaturePanel panel;
    panel.lags = {0};
    panel.columns = {"a", "b"};
    panel.rows.push_back(make_row(0, 0, {1.0, 2.0}, 10));
    panel.rows.push_back(make_row(1, 0, {3.0, 4.0}, 20));
    Matrix X;
    std::vector<double> y;
    panel_to_xy(panel, X, y);
    CHECK(X.rows == 2);
    CHECK(X.cols == 2);
    CHECK(X.at(1, 0) == 3.0);
    CHECK(y == std::vector<double>{10, 20});
}

// ---------------------------------------------------------------- json

TEST_CASE("model serialization carries structure") {
    Matrix X = column_matrix({1, 2, 3, 4});
    LinearModel lin = fit_ols(X, {2, 4, 6, 8});
    std::string js = linear_model_to_json(lin, {"traffic_volume_lag1"});
    CHECK(js.find("\"traffic_volume_lag1\"") != std::string::npos);
    CHECK(js.find("\"type\": \"linear\"") != std::string::npos);

    TreeEnsemble e = fit_tree(X, {0, 0, 10, 10}, 1, 1);
    std::string ej = ensemble_to_json(e);
    CHECK(ej.find("\"single_tree\"") != std::string::npos);
    CHECK(ej.find("\"threshold\": 2.5") != std::string::npos);
}
