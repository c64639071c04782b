#include "bandcast/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bandcast/errors.hpp"

namespace bandcast {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> lstsq(const Matrix& A, const std::vector<double>& b, bool* rank_deficient) {
    size_t m = A.rows, n = A.cols;
    if (b.size() != m) throw NumericError("lstsq: shape mismatch");
    if (rank_deficient) *rank_deficient = false;
    if (m < n) {
        if (rank_deficient) *rank_deficient = true;
        return svd_lstsq(A, b);
    }

    Matrix R = A;
    std::vector<double> y = b;

    // Householder reduction of R to upper triangular, applied to y in step.
    for (size_t k = 0; k < n; ++k) {
        double norm = 0;
        for (size_t i = k; i < m; ++i) norm += R.at(i, k) * R.at(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        double alpha = (R.at(k, k) > 0) ? -norm : norm;
        std::vector<double> v(m - k);
        v[0] = R.at(k, k) - alpha;
        for (size_t i = k + 1; i < m; ++i) v[i - k] = R.at(i, k);
        double vnorm2 = 0;
        for (double vi : v) vnorm2 += vi * vi;
        if (vnorm2 == 0.0) continue;
        for (size_t j = k; j < n; ++j) {
            double s = 0;
            for (size_t i = k; i < m; ++i) s += v[i - k] * R.at(i, j);
            double f = 2.0 * s / vnorm2;
            for (size_t i = k; i < m; ++i) R.at(i, j) -= f * v[i - k];
        }
        double s = 0;
        for (size_t i = k; i < m; ++i) s += v[i - k] * y[i];
        double f = 2.0 * s / vnorm2;
        for (size_t i = k; i < m; ++i) y[i] -= f * v[i - k];
        R.at(k, k) = alpha;
        for (size_t i = k + 1; i < m; ++i) R.at(i, k) = 0.0;
    }

    // Rank check on the diagonal of R; fall back to SVD on deficiency.
    double dmax = 0;
    for (size_t k = 0; k < n; ++k) dmax = std::max(dmax, std::abs(R.at(k, k)));
    double tol = dmax * double(std::max(m, n)) * std::numeric_limits<double>::epsilon();
    for (size_t k = 0; k < n; ++k)
        if (std::abs(R.at(k, k)) <= tol) {
            if (rank_deficient) *rank_deficient = true;
            return svd_lstsq(A, b);
        }

    std::vector<double> x(n, 0.0);
    for (size_t kk = n; kk-- > 0;) {
        double s = y[kk];
        for (size_t j = kk + 1; j < n; ++j) s -= R.at(kk, j) * x[j];
        x[kk] = s / R.at(kk, kk);
    }
    return x;
}

std::vector<double> svd_lstsq(const Matrix& A, const std::vector<double>& b) {
    size_t m = A.rows, n = A.cols;
    // One-sided Jacobi on the columns of U (a working copy of A); V accumulates
    // the rotations. At convergence the columns of U are orthogonal with norms
    // equal to the singular values.
    Matrix U = A;
    Matrix V(n, n);
    for (size_t i = 0; i < n; ++i) V.at(i, i) = 1.0;

    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (size_t p = 0; p + 1 < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                double app = 0, aqq = 0, apq = 0;
                for (size_t i = 0; i < m; ++i) {
                    double up = U.at(i, p), uq = U.at(i, q);
                    app += up * up;
                    aqq += uq * uq;
                    apq += up * uq;
                }
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (size_t i = 0; i < m; ++i) {
                    double up = U.at(i, p), uq = U.at(i, q);
                    U.at(i, p) = c * up - s * uq;
                    U.at(i, q) = s * up + c * uq;
                }
                for (size_t i = 0; i < n; ++i) {
                    double vp = V.at(i, p), vq = V.at(i, q);
                    V.at(i, p) = c * vp - s * vq;
                    V.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sigma(n, 0.0);
    double smax = 0;
    for (size_t j = 0; j < n; ++j) {
        double s2 = 0;
        for (size_t i = 0; i < m; ++i) s2 += U.at(i, j) * U.at(i, j);
        sigma[j] = std::sqrt(s2);
        smax = std::max(smax, sigma[j]);
    }
    double tol = smax * double(std::max(m, n)) * eps;

    // x = V diag(1/sigma) U_normalized^T b, dropping tiny singular values.
    std::vector<double> x(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        if (sigma[j] <= tol) continue;
        double utb = 0;
        for (size_t i = 0; i < m; ++i) utb += U.at(i, j) * b[i];
        double coef = utb / (sigma[j] * sigma[j]);
        for (size_t i = 0; i < n; ++i) x[i] += coef * V.at(i, j);
    }
    return x;
}

}  // namespace bandcast
