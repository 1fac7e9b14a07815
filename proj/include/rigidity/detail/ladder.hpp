#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rigidity/spectral_density.hpp"

namespace rigidity::detail {

struct ShellLadder {
    std::vector<double> terms;  ///< one per shell, index 0 outermost
    bool any_infinite = false;
};

/// Ladders of  area(S^{d-1}) int_{shell j} rho^{p} g(rho) d(log rho)  over
/// rho in [eps 2^{-j-1}, eps 2^{-j}], one per power p. Shells run in parallel.
std::vector<ShellLadder> shell_ladders(const std::function<double(double)>& g, const std::vector<double>& powers,
                                       int d, double eps, int shells, double rel_tol);

/// Divergent if a shell is infinite or the fitted ratio is >= 1 - slack,
/// convergent if it is <= 1 - tau.
LadderVerdict ladder_outcome(const ShellLadder& l, int window, double tau, double slack, double* ratio);

using BallIntegrand = std::function<void(double rho, std::span<const double> theta, std::span<double> out)>;

/// int_{B(0,eps)} f(u) du of a vector integrand written in polar form,
/// in dyadic shells down to eps 2^{-shells}.
std::vector<double> ball_integral(int d, double eps, int shells, std::size_t dim, std::size_t group,
                                  double rel_tol, const BallIntegrand& g, bool* converged);

}  // namespace rigidity::detail
