#include "rigidity/detail/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rigidity/detail/sphere.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity::detail {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();
}

// Ladder of  area * int_{shell j} rho^{power} g(rho) d(log rho)  over
// rho in [eps 2^{-j-1}, eps 2^{-j}], for several powers at once.
std::vector<ShellLadder> shell_ladders(const std::function<double(double)>& g, const std::vector<double>& powers,
                                       int d, double eps, int shells, double rel_tol) {
    const double area = detail::sphere_area(d);
    const std::size_t np = powers.size();
    std::vector<std::vector<double>> per_shell(shells, std::vector<double>(np));
    std::vector<char> infinite(static_cast<std::size_t>(shells), 0);
    parallel_for(static_cast<std::size_t>(shells), [&](std::size_t j) {
        const double hi = std::log(eps) - static_cast<double>(j) * std::log(2.0);
        const double lo = hi - std::log(2.0);
        bool hit_inf = false;
        quad::Options qo;
        qo.rel_tol = rel_tol;
        qo.max_panels = 400;
        auto res = quad::integrate_vector(
            [&](double t, std::span<double> out) {
                const double rho = std::exp(t);
                const double v = g(rho);
                if (!std::isfinite(v)) hit_inf = true;
                for (std::size_t i = 0; i < np; ++i)
                    out[i] = std::isfinite(v) ? area * std::pow(rho, powers[i]) * v : 0.0;
            },
            lo, hi, np, 1, qo);
        infinite[j] = hit_inf;
        for (std::size_t i = 0; i < np; ++i) per_shell[j][i] = hit_inf ? inf : res.values[i];
    });
    std::vector<ShellLadder> out(np);
    for (std::size_t i = 0; i < np; ++i) {
        out[i].terms.resize(shells);
        for (int j = 0; j < shells; ++j) {
            out[i].terms[j] = per_shell[j][i];
            if (infinite[j]) out[i].any_infinite = true;
        }
    }
    return out;
}

LadderVerdict ladder_outcome(const ShellLadder& l, int window, double tau, double slack, double* ratio) {
    if (l.any_infinite) {
        *ratio = inf;
        return LadderVerdict::Divergent;
    }
    const auto fit = detail::fit_ladder(l.terms, window);
    *ratio = fit.ratio;
    if (fit.non_finite || fit.ratio >= 1.0 - slack) return LadderVerdict::Divergent;
    if (fit.zero_tail || fit.ratio <= 1.0 - tau) return LadderVerdict::Convergent;
    return LadderVerdict::Undetermined;
}

// int_{B(0,eps)} f(u) du for a vector integrand, split in dyadic shells down
// to eps 2^{-shells}.
std::vector<double> ball_integral(int d, double eps, int shells, std::size_t dim, std::size_t group,
                                  double rel_tol, const BallIntegrand& g, bool* converged) {
    std::vector<std::vector<double>> per_shell(static_cast<std::size_t>(shells));
    std::vector<char> ok(static_cast<std::size_t>(shells), 1);
    parallel_for(static_cast<std::size_t>(shells), [&](std::size_t j) {
        const double hi = std::log(eps) - static_cast<double>(j) * std::log(2.0);
        const double lo = hi - std::log(2.0);
        bool inner_ok = true;
        quad::Options qo;
        qo.rel_tol = rel_tol;
        qo.max_panels = 200;
        auto res = quad::integrate_vector(
            [&](double t, std::span<double> out) {
                const double rho = std::exp(t);
                const double jac = std::pow(rho, d);
                bool c = true;
                auto vals = detail::integrate_sphere(
                    d, [&](std::span<const double> theta, std::span<double> o) { g(rho, theta, o); }, dim, group,
                    rel_tol, &c);
                if (!c) inner_ok = false;
                for (std::size_t i = 0; i < dim; ++i) out[i] = jac * vals[i];
            },
            lo, hi, dim, group, qo);
        per_shell[j] = std::move(res.values);
        ok[j] = res.converged && inner_ok;
    });
    std::vector<double> out(dim), col(static_cast<std::size_t>(shells));
    for (std::size_t i = 0; i < dim; ++i) {
        for (int j = 0; j < shells; ++j) col[j] = per_shell[j][i];
        out[i] = quad::pairwise_sum(col);
    }
    if (converged) *converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    return out;
}

}  // namespace rigidity::detail
