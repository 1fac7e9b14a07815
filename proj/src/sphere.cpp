#include "rigidity/detail/sphere.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>

#include "rigidity/errors.hpp"

namespace rigidity::detail {

double sphere_area(int d) {
    switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
    }
}

std::vector<double> direction_set(int d, int count) {
    std::vector<double> out;
    if (d == 1) return {1.0, -1.0};
    if (d == 2) {
        out.reserve(2 * count);
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * std::numbers::pi * i / count;
            out.push_back(std::cos(t));
            out.push_back(std::sin(t));
        }
        return out;
    }
    if (d == 3) {
        out.reserve(3 * count);
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * i;
            out.push_back(rho * std::cos(phi));
            out.push_back(rho * std::sin(phi));
            out.push_back(z);
        }
        return out;
    }
    throw Error(ErrorCode::ValidationError, "direction sets are available for d <= 3 only");
}

namespace {

std::vector<double> sphere3_product(const std::function<void(std::span<const double>, std::span<double>)>& g,
                                    std::size_t dim, int n_polar) {
    const auto& rule = quad::gauss_legendre(n_polar);
    const int n_az = 2 * n_polar;
    std::vector<double> acc(dim, 0.0), tmp(dim);
    double theta[3];
    for (int i = 0; i < n_polar; ++i) {
        const double z = rule.nodes[i];
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double w = rule.weights[i] * 2.0 * std::numbers::pi / n_az;
        for (int j = 0; j < n_az; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_az;
            theta[0] = rho * std::cos(phi);
            theta[1] = rho * std::sin(phi);
            theta[2] = z;
            g(std::span<const double>(theta, 3), tmp);
            for (std::size_t k = 0; k < dim; ++k) acc[k] += w * tmp[k];
        }
    }
    return acc;
}

}  // namespace

std::vector<double> integrate_sphere(int d, const std::function<void(std::span<const double>, std::span<double>)>& g,
                                     std::size_t dim, std::size_t group_size, double rel_tol,
                                     bool* converged) {
    if (converged) *converged = true;
    if (d == 1) {
        std::vector<double> a(dim), b(dim);
        const double plus = 1.0, minus = -1.0;
        g(std::span<const double>(&plus, 1), a);
        g(std::span<const double>(&minus, 1), b);
        for (std::size_t k = 0; k < dim; ++k) a[k] += b[k];
        return a;
    }
    if (d == 2) {
        auto f = [&](double t, std::span<double> out) {
            const double theta[2] = {std::cos(t), std::sin(t)};
            g(std::span<const double>(theta, 2), out);
        };
        quad::Options opt;
        opt.rel_tol = rel_tol;
        opt.max_panels = 2000;
        opt.initial_panels = 32;
        auto res = quad::integrate_vector(f, 0.0, 2.0 * std::numbers::pi, dim, group_size, opt);
        if (converged) *converged = res.converged;
        return res.values;
    }
    if (d == 3) {
        int n = 16;
        auto prev = sphere3_product(g, dim, n);
        for (int level = 0; level < 4; ++level) {
            n *= 2;
            auto next = sphere3_product(g, dim, n);
            double diff = 0.0, scale = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                diff = std::max(diff, std::abs(next[k] - prev[k]));
                scale = std::max(scale, std::abs(next[k]));
            }
            prev = std::move(next);
            if (diff <= std::max(rel_tol, 1e-9) * scale) return prev;
        }
        if (converged) *converged = false;
        return prev;
    }
    throw Error(ErrorCode::ValidationError, "sphere integration is available for d <= 3 only");
}

LadderFit fit_ladder(std::span<const double> terms, int window) {
    LadderFit fit;
    const int n = static_cast<int>(terms.size());
    const int w = std::min(window, n);
    const int start = n - w;
    for (int j = start; j < n; ++j) {
        if (!std::isfinite(terms[j])) fit.non_finite = true;
    }
    if (fit.non_finite) {
        fit.slope = std::numeric_limits<double>::infinity();
        fit.ratio = std::numeric_limits<double>::infinity();
        return fit;
    }
    if (n > 0 && terms[n - 1] == 0.0) {
        fit.zero_tail = true;
        fit.slope = -std::numeric_limits<double>::infinity();
        fit.ratio = 0.0;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int j = start; j < n; ++j) {
        if (terms[j] <= 0.0) continue;
        const double x = j;
        const double y = std::log(terms[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) {
        fit.slope = 0.0;
        fit.ratio = 1.0;
        return fit;
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.ratio = std::exp(fit.slope);
    return fit;
}

}  // namespace rigidity::detail
