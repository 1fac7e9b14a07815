#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rigidity/domain.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity::detail {

/// Surface measure of the unit sphere S^{d-1} (2 for d = 1).
double sphere_area(int d);

/// Deterministic quasi-uniform unit directions: {+1, -1} in d = 1, equally
/// spaced angles in d = 2, a Fibonacci lattice in d = 3. Flattened d-tuples.
std::vector<double> direction_set(int d, int count);

/// Integral over S^{d-1} of a vector integrand g(theta, out). d = 1 sums the
/// two directions, d = 2 integrates the angle adaptively, d = 3 uses a
/// product Gauss-Legendre x trapezoid rule refined until two levels agree.
std::vector<double> integrate_sphere(int d, const std::function<void(std::span<const double>, std::span<double>)>& g,
                                     std::size_t dim, std::size_t group_size, double rel_tol,
                                     bool* converged = nullptr);

struct LadderFit {
    double slope = 0.0;      ///< least-squares slope of log(term) against shell index
    double ratio = 0.0;      ///< exp(slope): geometric growth per shell
    bool non_finite = false; ///< some term is +inf (a divergent shell)
    bool zero_tail = false;  ///< the terms vanish identically at the end
};

/// Fits the last `window` terms of a shell ladder.
LadderFit fit_ladder(std::span<const double> terms, int window);

}  // namespace rigidity::detail
