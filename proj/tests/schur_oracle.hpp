#pragma once

// Dense conditional variance of sum_a g(a) X(a) given the annulus variables,
// computed with a plain Cholesky factorization and no library solver.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

using Cov = std::function<double(const std::vector<int>&)>;

inline std::vector<std::vector<int>> box(int d, int r) {
    std::vector<std::vector<int>> out;
    std::vector<int> n(d, -r);
    for (;;) {
        out.push_back(n);
        int a = 0;
        while (a < d && n[a] == r) n[a++] = -r;
        if (a == d) break;
        ++n[a];
    }
    return out;
}

// Var(Y) - c^T G^{-1} c with G the annulus covariance and c its covariance with Y.
inline double schur_variance(const Cov& C, int d, int m, int N,
                             const std::function<double(const std::vector<int>&)>& gamma) {
    std::vector<std::vector<int>> obs, win;
    for (auto& n : box(d, N)) {
        bool inside = true;
        for (int x : n) inside = inside && std::abs(x) <= m;
        (inside ? win : obs).push_back(n);
    }
    auto cov = [&](const std::vector<int>& a, const std::vector<int>& b) {
        std::vector<int> t(d);
        for (int i = 0; i < d; ++i) t[i] = a[i] - b[i];
        return C(t);
    };
    const std::size_t n = obs.size();
    std::vector<double> L(n * n, 0.0), c(n, 0.0);
    double var = 0.0;
    for (auto& a : win)
        for (auto& b : win) var += gamma(a) * gamma(b) * cov(a, b);
    for (std::size_t i = 0; i < n; ++i)
        for (auto& a : win) c[i] += gamma(a) * cov(obs[i], a);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = cov(obs[j], obs[j]);
        for (std::size_t k = 0; k < j; ++k) diag -= L[j * n + k] * L[j * n + k];
        if (diag <= 0.0) throw std::runtime_error("oracle: Gram matrix not positive definite");
        const double ljj = std::sqrt(diag);
        L[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = cov(obs[i], obs[j]);
            for (std::size_t k = 0; k < j; ++k) v -= L[i * n + k] * L[j * n + k];
            L[i * n + j] = v / ljj;
        }
    }
    // forward solve L y = c; c^T G^{-1} c = |y|^2
    double q = 0.0;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = c[i];
        for (std::size_t k = 0; k < i; ++k) v -= L[i * n + k] * y[k];
        y[i] = v / L[i * n + i];
        q += y[i] * y[i];
    }
    return var - q;
}

}  // namespace oracle
