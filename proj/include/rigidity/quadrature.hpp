#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rigidity::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-300;
    int max_panels = 4000;
    int initial_panels = 1;  ///< uniform starting partition (vector integrator)
};

struct Result {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    int panels = 0;
};

/// Globally adaptive 7/15-point Gauss-Kronrod integration of f over [a, b].
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opt = {});

/// Vector-valued integrand: f(x, out) fills `out` (size dim).
using VectorIntegrand = std::function<void(double, std::span<double>)>;

struct VectorResult {
    std::vector<double> values;
    double error = 0.0;  ///< relative, worst group
    bool converged = false;
    int panels = 0;
};

/// Adaptive Gauss-Kronrod for a vector integrand. Components are split into
/// consecutive groups of `group_size`; each group is held to rel_tol against
/// its own largest component, so groups of very different magnitude are
/// resolved independently.
VectorResult integrate_vector(const VectorIntegrand& f, double a, double b, std::size_t dim,
                              std::size_t group_size, const Options& opt = {});

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
const Rule& gauss_legendre(int n);

/// Fixed-order pairwise summation; deterministic regardless of how the
/// inputs were produced.
double pairwise_sum(std::span<const double> x) noexcept;

}  // namespace rigidity::quad
