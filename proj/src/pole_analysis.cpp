#include "rigidity/pole_analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rigidity/detail/ladder.hpp"
#include "rigidity/detail/sphere.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity {

namespace {
constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();
using detail::ShellLadder;
using detail::shell_ladders;
using detail::ladder_outcome;
using detail::ball_integral;
}  // namespace

// ---------------------------------------------------------------------------
// MultiIndex

MultiIndex::MultiIndex(std::vector<int> v) : k(std::move(v)) {
    for (int x : k)
        if (x < 0) throw Error(ErrorCode::ValidationError, "multi-index entries must be >= 0");
}

int MultiIndex::order() const noexcept {
    int s = 0;
    for (int x : k) s += x;
    return s;
}

bool MultiIndex::precedes(const MultiIndex& other) const noexcept {
    if (k.size() != other.k.size()) return false;
    for (std::size_t i = 0; i < k.size(); ++i)
        if (k[i] > other.k[i]) return false;
    return true;
}

std::string MultiIndex::str() const {
    std::string out = "(";
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(k[i]);
    }
    return out + ")";
}

std::vector<MultiIndex> MultiIndex::of_order(int d, int order) {
    std::vector<MultiIndex> out;
    std::vector<int> cur(d, 0);
    std::function<void(int, int)> rec = [&](int axis, int left) {
        if (axis == d - 1) {
            cur[axis] = left;
            out.emplace_back(cur);
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[axis] = v;
            rec(axis + 1, left - v);
        }
    };
    if (d >= 1 && order >= 0) rec(0, order);
    return out;
}

std::vector<MultiIndex> MultiIndex::up_to(int d, int order) {
    std::vector<MultiIndex> out;
    for (int n = 0; n <= order; ++n) {
        auto part = of_order(d, n);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

const char* to_string(PoleOutcome v) noexcept {
    switch (v) {
    case PoleOutcome::Pole: return "Pole";
    case PoleOutcome::NoPole: return "NoPole";
    case PoleOutcome::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

const char* to_string(PoleMethod m) noexcept {
    switch (m) {
    case PoleMethod::RadialLadder: return "RadialLadder";
    case PoleMethod::GramNullspace: return "GramNullspace";
    case PoleMethod::AnnotatedExact: return "AnnotatedExact";
    }
    return "RadialLadder";
}

const char* to_string(Rigidity r) noexcept {
    switch (r) {
    case Rigidity::KRigid: return "KRigid";
    case Rigidity::NotKRigid: return "NotKRigid";
    case Rigidity::SufficientOnly: return "SufficientOnly";
    case Rigidity::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

// ---------------------------------------------------------------------------
// shared helpers

namespace {

double checked(double v, std::span<const double> u) {
    if (std::isnan(v) || v < 0.0) {
        std::ostringstream os;
        os << "density returned " << v << " at (";
        for (std::size_t i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u[i];
        os << ")";
        throw Error(ErrorCode::EvaluationFailure, os.str());
    }
    return v;
}

// Directions avoiding the coordinate axes in d = 2 (for directional means).
std::vector<double> mean_directions(int d, int count) {
    if (d != 2) return detail::direction_set(d, count);
    std::vector<double> out;
    out.reserve(2 * count);
    for (int i = 0; i < count; ++i) {
        const double t = 2.0 * pi * (i + 0.5) / count;
        out.push_back(std::cos(t));
        out.push_back(std::sin(t));
    }
    return out;
}

PoleOutcome as_pole(LadderVerdict v) {
    switch (v) {
    case LadderVerdict::Divergent: return PoleOutcome::Pole;
    case LadderVerdict::Convergent: return PoleOutcome::NoPole;
    default: return PoleOutcome::Undetermined;
    }
}

std::vector<double> partial_sums(const std::vector<double>& t) {
    std::vector<double> out;
    double acc = 0.0;
    for (double x : t) out.push_back(acc += x);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// radial ladder

PoleVerdict radial_pole_test(const SpectralDensity& s, const MultiIndex& k, double eps, const RadialOptions& opt) {
    const int d = s.dim();
    if (d > 3) throw Error(ErrorCode::ValidationError, "radial pole test supports d <= 3");
    if (k.dim() != d) throw Error(ErrorCode::ValidationError, "multi-index dimension does not match the density");
    if (!(eps > 0.0)) throw Error(ErrorCode::ValidationError, "eps must be positive");
    const auto dirs = detail::direction_set(d, opt.directions);
    const std::size_t ndir = dirs.size() / d;

    auto inv_sup = [&](double rho) {
        double sup = 0.0;
        double u[3];
        for (std::size_t i = 0; i < ndir; ++i) {
            for (int c = 0; c < d; ++c) u[c] = rho * dirs[i * d + c];
            sup = std::max(sup, checked(s(std::span<const double>(u, d)), std::span<const double>(u, d)));
        }
        return sup > 0.0 ? 1.0 / sup : inf;
    };
    const double power = 2.0 * k.order() + d;
    auto ladders = shell_ladders(inv_sup, {power}, d, eps, opt.shells, opt.rel_tol);

    PoleVerdict v;
    v.target = k;
    v.method = PoleMethod::RadialLadder;
    v.epsilon = eps;
    double ratio = 0.0;
    v.verdict = as_pole(ladder_outcome(ladders[0], opt.fit_window, opt.tau, opt.divergence_slack, &ratio));
    v.diagnostics.fitted_ratio = ratio;
    v.diagnostics.fitted_exponent = std::isfinite(ratio) && ratio > 0.0 ? power + std::log2(ratio) : inf;
    v.diagnostics.ladder = ladders[0].terms;
    v.diagnostics.partial_sums = partial_sums(ladders[0].terms);
    return v;
}

// ---------------------------------------------------------------------------
// integrals over a ball in polar coordinates

namespace {

double sup_on_ball(const SpectralDensity& s, double eps) {
    const int d = s.dim();
    const auto dirs = detail::direction_set(d, 256);
    const std::size_t ndir = dirs.size() / d;
    double sup = 0.0;
    double u[3];
    for (double f : {1.0, 0.75, 0.5, 0.25, 0.125}) {
        for (std::size_t i = 0; i < ndir; ++i) {
            for (int c = 0; c < d; ++c) u[c] = f * eps * dirs[i * d + c];
            sup = std::max(sup, checked(s(std::span<const double>(u, d)), std::span<const double>(u, d)));
        }
    }
    return sup;
}

double int_pow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

struct GramData {
    double eps = 0.0;
    std::vector<MultiIndex> basis;
    std::vector<double> deltas;
    std::vector<Eigen::MatrixXd> G;  // one per delta
};

GramData build_gram(const SpectralDensity& s, int D, double eps, const GramOptions& opt) {
    const int d = s.dim();
    GramData out;
    out.eps = eps;
    out.basis = MultiIndex::up_to(d, D);
    const auto moments = MultiIndex::up_to(d, 2 * D);
    const std::size_t P = moments.size();
    const std::size_t L = opt.delta_ladder.size();
    double smax = sup_on_ball(s, eps);
    if (!(smax > 0.0)) smax = 1.0;
    for (double r : opt.delta_ladder) out.deltas.push_back(r * smax);

    std::map<MultiIndex, std::size_t> where;
    for (std::size_t i = 0; i < P; ++i) where[moments[i]] = i;

    bool converged = true;
    auto vals = ball_integral(
        d, eps, opt.shells, P * L, P, opt.rel_tol,
        [&](double rho, std::span<const double> theta, std::span<double> o) {
            double u[3], powers[3][17];
            for (int c = 0; c < d; ++c) {
                u[c] = rho * theta[c];
                powers[c][0] = 1.0;
                for (int e = 1; e <= 2 * D; ++e) powers[c][e] = powers[c][e - 1] * (rho / eps) * theta[c];
            }
            const double sv = checked(s(std::span<const double>(u, d)), std::span<const double>(u, d));
            for (std::size_t i = 0; i < P; ++i) {
                double mono = 1.0;
                for (int c = 0; c < d; ++c) mono *= powers[c][moments[i].k[c]];
                for (std::size_t l = 0; l < L; ++l) o[l * P + i] = mono / (sv + out.deltas[l]);
            }
        },
        &converged);
    if (!converged) throw Error(ErrorCode::QuadratureFailure, "Gram moment quadrature did not converge");

    const std::size_t B = out.basis.size();
    std::vector<int> sum(d);
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd G(B, B);
        for (std::size_t a = 0; a < B; ++a)
            for (std::size_t b = 0; b < B; ++b) {
                for (int c = 0; c < d; ++c) sum[c] = out.basis[a].k[c] + out.basis[b].k[c];
                G(a, b) = vals[l * P + where.at(MultiIndex(sum))];
            }
        out.G.push_back(std::move(G));
    }
    return out;
}

struct LevelSolve {
    double mu = 0.0;
    Eigen::VectorXd witness;  // a_k = 1, in scaled monomials
    std::vector<double> eigenvalues;
    double condition = 0.0;
};

LevelSolve solve_level(const Eigen::MatrixXd& G, std::size_t kk) {
    const Eigen::Index n = G.rows();
    Eigen::VectorXd scale(n);
    for (Eigen::Index i = 0; i < n; ++i) scale[i] = 1.0 / std::sqrt(G(i, i));
    Eigen::MatrixXd H = scale.asDiagonal() * G * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    LevelSolve out;
    const auto& ev = es.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + n);
    out.condition = ev[0] > 0.0 ? ev[n - 1] / ev[0] : inf;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[static_cast<Eigen::Index>(kk)] = scale[static_cast<Eigen::Index>(kk)];
    Eigen::VectorXd y = es.eigenvectors() * (es.eigenvectors().transpose() * rhs).cwiseQuotient(ev);
    Eigen::VectorXd a = scale.asDiagonal() * y;
    const double akk = a[static_cast<Eigen::Index>(kk)];
    out.mu = 1.0 / akk;
    out.witness = a / akk;
    return out;
}

enum class Trend { Bounded, Unbounded, Unclear };

// Decides whether an increasing sequence (energies along the delta ladder)
// stays bounded from the ratio of its last two increments.
Trend energy_trend(const std::vector<double>& e, double conv, double div, double* ratio) {
    const std::size_t n = e.size();
    if (n < 3) {
        *ratio = 0.0;
        return Trend::Unclear;
    }
    const double noise = 1e-7 * std::abs(e.back());
    const double last = e[n - 1] - e[n - 2];
    const double prev = e[n - 2] - e[n - 3];
    if (std::abs(last) <= noise) {
        *ratio = 0.0;
        return Trend::Bounded;
    }
    if (prev <= noise) {
        *ratio = inf;
        return last > 0.0 ? Trend::Unbounded : Trend::Unclear;
    }
    *ratio = last / prev;
    if (*ratio <= conv) return Trend::Bounded;
    if (*ratio >= div) return Trend::Unbounded;
    return Trend::Unclear;
}

Eigen::VectorXd aitken(const Eigen::VectorXd& w0, const Eigen::VectorXd& w1, const Eigen::VectorXd& w2) {
    Eigen::VectorXd out = w2;
    for (Eigen::Index i = 0; i < w2.size(); ++i) {
        const double d1 = w2[i] - w1[i], d0 = w1[i] - w0[i];
        const double den = d1 - d0;
        if (d0 == 0.0 || den == 0.0) continue;
        const double q = d1 / d0;
        if (q <= 0.0 || q >= 0.9) continue;  // not a geometric approach
        out[i] = w2[i] - d1 * d1 / den;
    }
    return out;
}

PoleVerdict analyze_target(const GramData& g, const MultiIndex& k, const GramOptions& opt, bool keep_spectra) {
    const auto it = std::find(g.basis.begin(), g.basis.end(), k);
    const std::size_t kk = static_cast<std::size_t>(it - g.basis.begin());
    PoleVerdict v;
    v.target = k;
    v.method = PoleMethod::GramNullspace;
    v.epsilon = g.eps;

    std::vector<LevelSolve> levels;
    std::vector<double> mu;
    for (std::size_t l = 0; l < g.G.size(); ++l) {
        levels.push_back(solve_level(g.G[l], kk));
        mu.push_back(levels.back().mu);
        if (keep_spectra) v.diagnostics.gram_spectra.push_back({g.deltas[l], levels.back().eigenvalues, mu.back()});
    }
    if (levels.front().condition > opt.max_condition) {
        std::ostringstream os;
        os << "Gram condition number " << levels.front().condition << " exceeds " << opt.max_condition
           << " at the coarsest regularization";
        throw Error(ErrorCode::IllConditioned, os.str());
    }
    v.diagnostics.ladder = mu;
    const double norm = std::pow(g.eps, -k.order());

    // u^k alone may already have finite energy
    std::vector<double> diag;
    for (const auto& G : g.G) diag.push_back(G(static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(kk)));
    double diag_ratio = 0.0;
    if (energy_trend(diag, opt.converge_ratio, opt.diverge_ratio, &diag_ratio) == Trend::Bounded) {
        v.verdict = PoleOutcome::NoPole;
        v.diagnostics.fitted_ratio = diag_ratio;
        v.diagnostics.witness_energy = diag;
        v.diagnostics.witness_polynomial = std::map<MultiIndex, double>{{k, 1.0}};
        v.diagnostics.note = "the monomial u^k has finite energy";
        return v;
    }

    double ratio = 0.0;
    const Trend t = energy_trend(mu, opt.converge_ratio, opt.diverge_ratio, &ratio);
    v.diagnostics.fitted_ratio = ratio;
    if (t == Trend::Unbounded) {
        v.verdict = PoleOutcome::Pole;
        return v;
    }
    if (t == Trend::Unclear) {
        v.verdict = PoleOutcome::Undetermined;
        v.diagnostics.note = "energy increments neither vanish nor persist";
        return v;
    }
    v.verdict = PoleOutcome::NoPole;
    const std::size_t n = levels.size();
    auto energies = [&](const Eigen::VectorXd& w) {
        std::vector<double> e;
        for (const auto& G : g.G) e.push_back(w.dot(G * w));
        return e;
    };
    Eigen::VectorXd w = n >= 3 ? aitken(levels[n - 3].witness, levels[n - 2].witness, levels[n - 1].witness)
                               : levels.back().witness;
    v.diagnostics.witness_energy = energies(w);
    double wr = 0.0;
    if (energy_trend(v.diagnostics.witness_energy, opt.converge_ratio, opt.diverge_ratio, &wr) != Trend::Bounded) {
        w = levels.back().witness;
        v.diagnostics.witness_energy = energies(w);
        if (energy_trend(v.diagnostics.witness_energy, opt.converge_ratio, opt.diverge_ratio, &wr) != Trend::Bounded) {
            v.verdict = PoleOutcome::Undetermined;
            v.diagnostics.note = "no candidate witness has a bounded energy ladder";
            return v;
        }
    }
    // back to the frequency variable: coefficient of u^m is a_m / eps^{|m|}
    std::map<MultiIndex, double> poly;
    for (std::size_t i = 0; i < g.basis.size(); ++i) {
        const double c = w[static_cast<Eigen::Index>(i)] * std::pow(g.eps, -g.basis[i].order()) / norm;
        poly[g.basis[i]] = c;
    }
    poly[k] = 1.0;
    v.diagnostics.witness_polynomial = std::move(poly);
    return v;
}

}  // namespace

std::vector<PoleVerdict> gram_pole_tests(const SpectralDensity& s, const std::vector<MultiIndex>& ks,
                                         const GramOptions& opt) {
    const int d = s.dim();
    if (d > 3) throw Error(ErrorCode::ValidationError, "Gram pole test supports d <= 3");
    if (ks.empty()) return {};
    int top = 0;
    for (const auto& k : ks) {
        if (k.dim() != d) throw Error(ErrorCode::ValidationError, "multi-index dimension does not match the density");
        top = std::max(top, k.order());
    }
    const int D = opt.degree_cap < 0 ? std::max(2, top) : opt.degree_cap;
    if (D < top) throw Error(ErrorCode::ValidationError, "degree cap must be >= |k|");
    if (D > 8) throw Error(ErrorCode::ValidationError, "degree cap must be <= 8");
    if (opt.eps_ladder.empty() || opt.delta_ladder.size() < 3)
        throw Error(ErrorCode::ValidationError, "Gram test needs an eps ladder and at least 3 delta levels");
    for (std::size_t i = 0; i < opt.eps_ladder.size(); ++i)
        if (!(opt.eps_ladder[i] > 0.0) || (i && opt.eps_ladder[i] >= opt.eps_ladder[i - 1]))
            throw Error(ErrorCode::ValidationError, "eps ladder must be positive and decreasing");
    for (std::size_t i = 0; i < opt.delta_ladder.size(); ++i)
        if (!(opt.delta_ladder[i] > 0.0) || (i && opt.delta_ladder[i] >= opt.delta_ladder[i - 1]))
            throw Error(ErrorCode::ValidationError, "delta ladder must be positive and decreasing");

    std::vector<PoleVerdict> out;
    std::vector<std::vector<PoleVerdict>> per_eps;
    for (std::size_t e = 0; e < opt.eps_ladder.size(); ++e) {
        const auto g = build_gram(s, D, opt.eps_ladder[e], opt);
        std::vector<PoleVerdict> row;
        for (const auto& k : ks) row.push_back(analyze_target(g, k, opt, e == 0));
        per_eps.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
        PoleVerdict v = per_eps[0][i];
        for (std::size_t e = 1; e < per_eps.size(); ++e) {
            if (per_eps[e][i].verdict != v.verdict) {
                std::ostringstream os;
                os << "verdict changes across the eps ladder (" << to_string(v.verdict) << " at eps "
                   << opt.eps_ladder[0] << ", " << to_string(per_eps[e][i].verdict) << " at eps "
                   << opt.eps_ladder[e] << ")";
                v.verdict = PoleOutcome::Undetermined;
                v.diagnostics.note = os.str();
                v.diagnostics.witness_polynomial.reset();
                break;
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

PoleVerdict gram_pole_test(const SpectralDensity& s, const MultiIndex& k, const GramOptions& opt) {
    return gram_pole_tests(s, {k}, opt).front();
}

std::vector<double> polynomial_energy_ladder(const SpectralDensity& s, const std::map<MultiIndex, double>& q,
                                             double eps, const std::vector<double>& deltas) {
    const int d = s.dim();
    if (d > 3) throw Error(ErrorCode::ValidationError, "energy ladder supports d <= 3");
    const std::size_t L = deltas.size();
    bool converged = true;
    auto vals = ball_integral(
        d, eps, 60, L, L, 1e-10,
        [&](double rho, std::span<const double> theta, std::span<double> o) {
            double u[3];
            for (int c = 0; c < d; ++c) u[c] = rho * theta[c];
            double qv = 0.0;
            for (const auto& [m, a] : q) {
                double mono = a;
                for (int c = 0; c < d; ++c) mono *= int_pow(u[c], m.k[c]);
                qv += mono;
            }
            const double sv = checked(s(std::span<const double>(u, d)), std::span<const double>(u, d));
            for (std::size_t l = 0; l < L; ++l) o[l] = qv * qv / (sv + deltas[l]);
        },
        &converged);
    if (!converged) throw Error(ErrorCode::QuadratureFailure, "energy ladder quadrature did not converge");
    return vals;
}

// ---------------------------------------------------------------------------

PoleVerdict annotated_pole_test(const SpectralDensity& s, const MultiIndex& k) {
    PoleVerdict v;
    v.target = k;
    v.method = PoleMethod::AnnotatedExact;
    if (!s.zeros()) {
        v.diagnostics.note = "no zero annotations";
        return v;
    }
    if (!s.flags().isotropic) {
        v.diagnostics.note = "annotated orders decide poles only for isotropic densities";
        return v;
    }
    int q = 0;
    for (const auto& z : *s.zeros())
        if (norm2(z.location) < 1e-12) q = z.order;
    v.verdict = k.order() < q ? PoleOutcome::Pole : PoleOutcome::NoPole;
    v.diagnostics.note = "finite order at 0 is " + std::to_string(q);
    return v;
}

std::optional<int> finite_pole_order(const SpectralDensity& s, const Point& u0, int q_cap,
                                     const FiniteOrderOptions& opt) {
    const int d = s.dim();
    if (d > 3) throw Error(ErrorCode::ValidationError, "finite pole order supports d <= 3");
    if (static_cast<int>(u0.size()) != d) throw Error(ErrorCode::ValidationError, "location has wrong dimension");
    if (q_cap < 0) return std::nullopt;
    const auto dirs = mean_directions(d, d == 1 ? 2 : opt.ladder.directions);
    const std::size_t ndir = dirs.size() / d;
    auto mean_inv = [&](double rho) {
        double acc = 0.0;
        double u[3];
        for (std::size_t i = 0; i < ndir; ++i) {
            for (int c = 0; c < d; ++c) u[c] = u0[c] + rho * dirs[i * d + c];
            const double v = checked(s(std::span<const double>(u, d)), std::span<const double>(u, d));
            if (v == 0.0) return inf;
            acc += 1.0 / v;
        }
        return acc / static_cast<double>(ndir);
    };
    std::vector<double> powers;
    for (int q = 0; q <= q_cap; ++q) powers.push_back(2.0 * q + d);
    auto ladders = shell_ladders(mean_inv, powers, d, opt.eps, opt.ladder.shells, opt.ladder.rel_tol);
    for (int q = 0; q <= q_cap; ++q) {
        double ratio = 0.0;
        if (ladder_outcome(ladders[q], opt.ladder.fit_window, opt.ladder.tau, opt.ladder.divergence_slack, &ratio) ==
            LadderVerdict::Convergent)
            return q;
    }
    return std::nullopt;
}

namespace {

double radical_inverse(unsigned base, unsigned long long i) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

double domain_distance(const Domain& dom, std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double t = a[i] - b[i];
        if (dom.is_torus()) t = dom.wrap(t);
        acc += t * t;
    }
    return std::sqrt(acc);
}

}  // namespace

SimpleReport classify_simple(const SpectralDensity& s, int q_cap) {
    if (!s.zeros()) throw Error(ErrorCode::MissingAnnotations, "classify_simple needs annotated zeros");
    const int d = s.dim();
    const auto& zeros = *s.zeros();
    SimpleReport rep;
    bool orders_ok = true;

    double sep = 0.25;
    for (std::size_t i = 0; i < zeros.size(); ++i)
        for (std::size_t j = i + 1; j < zeros.size(); ++j)
            sep = std::min(sep, 0.5 * domain_distance(s.domain(), zeros[i].location, zeros[j].location));

    for (const auto& z : zeros) {
        FiniteOrderOptions fo;
        fo.eps = sep;
        const auto q = finite_pole_order(s, z.location, q_cap, fo);
        if (!q) {
            orders_ok = false;
            rep.notes.push_back("zero has no finite order <= " + std::to_string(q_cap));
            continue;
        }
        if (*q != z.order)
            rep.notes.push_back("annotated order " + std::to_string(z.order) + " but ladder gives " +
                                std::to_string(*q));
        rep.poles.emplace_back(z.location, *q);
    }

    // polynomial lower bound away from the poles
    auto near_zero = [&](std::span<const double> u) {
        for (const auto& z : zeros)
            if (domain_distance(s.domain(), u, z.location) < sep) return true;
        return false;
    };
    static constexpr unsigned primes[] = {2, 3, 5};
    std::vector<double> u(d);
    double min_inner = inf;
    const double box = s.domain().is_torus() ? pi : 4.0;
    for (int n = 1; n <= 4096; ++n) {
        for (int c = 0; c < d; ++c) u[c] = -box + 2.0 * box * radical_inverse(primes[c % 3], static_cast<unsigned long long>(n));
        if (near_zero(u)) continue;
        min_inner = std::min(min_inner, s(u));
    }
    for (const auto& z : zeros) {
        // points on the exclusion sphere itself
        const auto dirs = detail::direction_set(std::min(d, 3), 64);
        for (std::size_t i = 0; i < dirs.size() / d; ++i) {
            for (int c = 0; c < d; ++c) u[c] = z.location[c] + sep * dirs[i * d + c];
            min_inner = std::min(min_inner, s(u));
        }
    }
    double p = 0.0;
    double c_bound = min_inner;
    bool holds = min_inner > 0.0;
    if (holds && !s.domain().is_torus()) {
        if (d > 3) throw Error(ErrorCode::ValidationError, "classify_simple supports d <= 3 on Euclidean domains");
        const auto dirs = detail::direction_set(d, 256);
        const std::size_t ndir = dirs.size() / d;
        std::vector<double> radius, minv;
        for (int j = 2; j <= 30; ++j) {
            const double rho = std::ldexp(1.0, j);
            double m = inf;
            for (std::size_t i = 0; i < ndir; ++i) {
                for (int c = 0; c < d; ++c) u[c] = rho * dirs[i * d + c];
                if (near_zero(u)) continue;
                m = std::min(m, s(u));
            }
            radius.push_back(rho);
            minv.push_back(m);
            if (!(m > 0.0)) holds = false;
        }
        for (std::size_t j = 0; holds && j + 1 < radius.size(); ++j) {
            const double local = -(std::log(minv[j + 1]) - std::log(minv[j])) /
                                 (std::log1p(radius[j + 1]) - std::log1p(radius[j]));
            p = std::max(p, local);
        }
        if (p > 64.0) holds = false;
        if (holds) {
            p = std::max(0.0, std::ceil(p - 1e-9));
            c_bound = std::min(min_inner, min_inner * std::pow(1.0 + 4.0 * std::sqrt(d), -p));
            for (std::size_t j = 0; j < radius.size(); ++j)
                c_bound = std::min(c_bound, minv[j] * std::pow(1.0 + radius[j], p));
        }
    }
    if (!holds) rep.notes.push_back("no polynomial lower bound away from the annotated zeros");
    rep.lower_bound_holds = holds;
    rep.lower_bound_c = holds ? c_bound : 0.0;
    rep.lower_bound_p = holds ? p : inf;
    rep.is_simple = orders_ok && holds;
    return rep;
}

// ---------------------------------------------------------------------------
// classifier

Classification combine_verdicts(const SpectralDensity& s, const MultiIndex& k, std::vector<PoleVerdict> tests) {
    Classification c;
    c.target = k;
    const auto& f = s.flags();
    for (const auto& t : tests) {
        if (t.verdict == PoleOutcome::Pole) {
            c.verdict = Rigidity::KRigid;
            c.provenance = std::string("pole of order ") + k.str() + " at 0 implies rigidity (" + to_string(t.method) + ")";
            c.tests = std::move(tests);
            return c;
        }
    }
    bool no_pole = false;
    std::string how;
    for (const auto& t : tests) {
        if (t.verdict != PoleOutcome::NoPole) continue;
        if (t.method == PoleMethod::GramNullspace || t.method == PoleMethod::AnnotatedExact ||
            (t.method == PoleMethod::RadialLadder && f.isotropic)) {
            no_pole = true;
            how = to_string(t.method);
            break;
        }
    }
    if (!no_pole) {
        c.verdict = Rigidity::Undetermined;
        c.provenance = "no pole test reached a decision";
    } else if (f.simple) {
        c.verdict = Rigidity::NotKRigid;
        c.provenance = "no pole at 0 (" + how + "); converse for simple densities";
    } else if (f.isotropic) {
        c.verdict = Rigidity::NotKRigid;
        c.provenance = "no pole at 0 (" + how + "); converse for isotropic densities on balls";
    } else if (f.separable) {
        c.verdict = Rigidity::NotKRigid;
        c.provenance = "no pole at 0 (" + how + "); converse for separable densities on boxes";
    } else {
        c.verdict = Rigidity::SufficientOnly;
        c.provenance = "no pole at 0 (" + how +
                       "); the converse needs a simple, isotropic or separable density, so non-rigidity is not claimed";
    }
    c.tests = std::move(tests);
    return c;
}

Classification rigidity_classifier(const SpectralDensity& s, const MultiIndex& k, const ClassifierOptions& opt) {
    std::vector<PoleVerdict> tests;
    tests.push_back(radial_pole_test(s, k, opt.eps, opt.radial));
    if (s.flags().isotropic && s.zeros()) tests.push_back(annotated_pole_test(s, k));
    if (tests.front().verdict != PoleOutcome::Pole && opt.run_gram) tests.push_back(gram_pole_test(s, k, opt.gram));
    return combine_verdicts(s, k, std::move(tests));
}

std::vector<OrderClassification> classify_orders(const SpectralDensity& s, int k_cap, const ClassifierOptions& opt) {
    const int d = s.dim();
    if (k_cap < 0) throw Error(ErrorCode::ValidationError, "k cap must be >= 0");
    std::vector<PoleVerdict> radial;
    for (int n = 0; n <= k_cap; ++n) {
        auto k = MultiIndex::of_order(d, n).front();
        radial.push_back(radial_pole_test(s, k, opt.eps, opt.radial));
    }
    std::vector<MultiIndex> need;
    for (int n = 0; n <= k_cap; ++n)
        if (radial[n].verdict != PoleOutcome::Pole)
            for (auto& k : MultiIndex::of_order(d, n)) need.push_back(k);
    std::map<MultiIndex, PoleVerdict> gram;
    if (opt.run_gram && !need.empty()) {
        GramOptions go = opt.gram;
        if (go.degree_cap < 0) go.degree_cap = std::max(2, need.back().order());
        go.degree_cap = std::min(go.degree_cap, 8);
        auto vs = gram_pole_tests(s, need, go);
        for (std::size_t i = 0; i < need.size(); ++i) gram.emplace(need[i], std::move(vs[i]));
    }
    std::vector<Classification> comps;
    for (int n = 0; n <= k_cap; ++n)
        for (auto& k : MultiIndex::of_order(d, n)) {
            std::vector<PoleVerdict> tests;
            PoleVerdict r = radial[n];
            r.target = k;
            tests.push_back(std::move(r));
            if (s.flags().isotropic && s.zeros()) tests.push_back(annotated_pole_test(s, k));
            if (auto it = gram.find(k); it != gram.end()) tests.push_back(it->second);
            comps.push_back(combine_verdicts(s, k, std::move(tests)));
        }

    std::vector<OrderClassification> out;
    for (int n = 0; n <= k_cap; ++n) {
        OrderClassification oc;
        oc.order = n;
        bool all_rigid = true, any_not = false, any_suff = false;
        std::string first_not, first_suff, first_und;
        for (const auto& c : comps) {
            if (c.target.order() > n) continue;
            oc.components.push_back(c);
            switch (c.verdict) {
            case Rigidity::KRigid: break;
            case Rigidity::NotKRigid:
                all_rigid = false;
                if (!any_not) first_not = c.target.str() + ": " + c.provenance;
                any_not = true;
                break;
            case Rigidity::SufficientOnly:
                all_rigid = false;
                if (!any_suff) first_suff = c.target.str() + ": " + c.provenance;
                any_suff = true;
                break;
            case Rigidity::Undetermined:
                all_rigid = false;
                if (first_und.empty()) first_und = c.target.str() + ": " + c.provenance;
                break;
            }
        }
        if (all_rigid) {
            oc.verdict = Rigidity::KRigid;
            oc.provenance = "pole at 0 for every multi-index of order <= " + std::to_string(n);
        } else if (any_not) {
            oc.verdict = Rigidity::NotKRigid;
            oc.provenance = first_not;
        } else if (any_suff) {
            oc.verdict = Rigidity::SufficientOnly;
            oc.provenance = first_suff;
        } else {
            oc.verdict = Rigidity::Undetermined;
            oc.provenance = first_und;
        }
        out.push_back(std::move(oc));
    }
    return out;
}

std::vector<std::string> check_downward_closure(const std::vector<PoleVerdict>& verdicts) {
    std::vector<std::string> out;
    for (const auto& a : verdicts) {
        if (a.verdict != PoleOutcome::Pole) continue;
        for (const auto& b : verdicts) {
            if (b.verdict == PoleOutcome::NoPole && b.target.precedes(a.target))
                out.push_back("Pole at " + a.target.str() + " (" + to_string(a.method) + ") but NoPole at " +
                              b.target.str() + " (" + to_string(b.method) + ")");
        }
    }
    return out;
}

}  // namespace rigidity
