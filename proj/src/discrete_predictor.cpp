#include "rigidity/discrete_predictor.hpp"

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

std::vector<std::vector<int>> box_points(int d, int r) {
    std::vector<std::vector<int>> out;
    std::vector<int> n(d, -r);
    for (;;) {
        out.push_back(n);
        int axis = 0;
        while (axis < d && n[axis] == r) n[axis++] = -r;
        if (axis == d) break;
        ++n[axis];
    }
    return out;
}

double monomial(const std::vector<int>& n, const MultiIndex& k) {
    double v = 1.0;
    for (std::size_t i = 0; i < n.size(); ++i)
        for (int e = 0; e < k.k[i]; ++e) v *= n[i];
    return v;
}
}  // namespace

// ---------------------------------------------------------------------------

std::size_t WindowSpec::size() const {
    std::size_t s = 1;
    for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(2 * m + 1);
    return s;
}

std::vector<std::vector<int>> WindowSpec::points() const { return box_points(d, m); }

bool WindowSpec::contains(const std::vector<int>& n) const noexcept {
    for (int x : n)
        if (x < -m || x > m) return false;
    return true;
}

TargetFunctional TargetFunctional::moment(MultiIndex k) {
    TargetFunctional t;
    t.kind = Kind::Moment;
    t.k = std::move(k);
    return t;
}

TargetFunctional TargetFunctional::custom(std::map<std::vector<int>, double> w) {
    TargetFunctional t;
    t.kind = Kind::Custom;
    t.weights = std::move(w);
    return t;
}

double TargetFunctional::operator()(const std::vector<int>& n, const WindowSpec& w) const {
    if (!w.contains(n)) return 0.0;
    switch (kind) {
    case Kind::Mass: return 1.0;
    case Kind::Moment: return monomial(n, k);
    case Kind::Custom: {
        auto it = weights.find(n);
        return it == weights.end() ? 0.0 : it->second;
    }
    }
    return 0.0;
}

std::string TargetFunctional::str() const {
    switch (kind) {
    case Kind::Mass: return "mass";
    case Kind::Moment: return "moment" + k.str();
    case Kind::Custom: return "custom";
    }
    return "custom";
}

const char* to_string(RigidFlag f) noexcept {
    switch (f) {
    case RigidFlag::Rigid: return "Rigid";
    case RigidFlag::NotRigid: return "NotRigid";
    case RigidFlag::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

std::map<std::vector<int>, double> PredictionResult::coefficient_map() const {
    std::map<std::vector<int>, double> out;
    for (std::size_t i = 0; i < annulus.size(); ++i) out[annulus[i]] = coefficients[i];
    return out;
}

// ---------------------------------------------------------------------------

PredictionResult best_linear_predictor(const CovarianceSequence& cov, const WindowSpec& window,
                                       const TargetFunctional& target, int N) {
    const int d = cov.dim();
    if (window.d != d) throw Error(ErrorCode::ValidationError, "window dimension does not match the covariance");
    if (window.m < 0) throw Error(ErrorCode::ValidationError, "window size m must be >= 0");
    if (N <= window.m) throw Error(ErrorCode::ValidationError, "truncation N must exceed the window size m");
    if (!cov.finite_support && cov.radius() < 2 * N)
        throw Error(ErrorCode::ValidationError, "covariance is needed on [[2N]]^d; radius " +
                                                    std::to_string(cov.radius()) + " < " + std::to_string(2 * N));
    if (target.kind == TargetFunctional::Kind::Moment && target.k.dim() != d)
        throw Error(ErrorCode::ValidationError, "moment index dimension does not match");
    if (target.kind == TargetFunctional::Kind::Custom)
        for (const auto& [n, w] : target.weights)
            if (static_cast<int>(n.size()) != d || !window.contains(n))
                throw Error(ErrorCode::ValidationError, "custom target weight outside the window");

    PredictionResult res;
    const auto win = window.points();
    std::vector<double> gamma;
    std::vector<std::vector<int>> support;
    for (const auto& a : win) {
        const double g = target(a, window);
        if (g != 0.0) {
            support.push_back(a);
            gamma.push_back(g);
        }
    }
    for (auto& n : box_points(d, N))
        if (!window.contains(n)) res.annulus.push_back(std::move(n));

    std::vector<int> diff(d);
    auto C = [&](const std::vector<int>& a, const std::vector<int>& b) {
        for (int i = 0; i < d; ++i) diff[i] = a[i] - b[i];
        return cov(diff);
    };

    double var = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
        for (std::size_t j = 0; j < support.size(); ++j) var += gamma[i] * gamma[j] * C(support[i], support[j]);
    res.target_variance = var;

    const Eigen::Index n = static_cast<Eigen::Index>(res.annulus.size());
    Eigen::MatrixXd G(n, n);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) G(i, j) = G(j, i) = C(res.annulus[i], res.annulus[j]);
        double acc = 0.0;
        for (std::size_t a = 0; a < support.size(); ++a) acc += gamma[a] * C(res.annulus[i], support[a]);
        c[i] = acc;
    }

    Eigen::VectorXd h;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    const double c0 = std::abs(cov(std::vector<int>(d, 0)));
    if (llt.info() == Eigen::Success) {
        h = llt.solve(c);
    } else {
        res.singular_gram = true;
        res.jitter = 1e-12 * c0;
        Eigen::MatrixXd J = G;
        J.diagonal().array() += res.jitter;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(J);
        h = ldlt.solve(c);
    }
    const Eigen::VectorXd Gh = G * h;
    const double denom = c.norm() + G.norm() * h.norm();
    res.system_residual = denom > 0.0 ? (Gh - c).norm() / denom : 0.0;
    res.raw_residual = var - 2.0 * h.dot(c) + h.dot(Gh);
    res.residual_variance = std::clamp(res.raw_residual, 0.0, std::max(var, 0.0));
    res.coefficients.assign(h.data(), h.data() + n);
    return res;
}

std::vector<CurvePoint> prediction_curve(const CovarianceSequence& cov, const WindowSpec& window,
                                         const TargetFunctional& target, const std::vector<int>& Ns) {
    std::vector<CurvePoint> out(Ns.size());
    parallel_for(Ns.size(), [&](std::size_t i) {
        out[i].N = Ns[i];
        out[i].residual = best_linear_predictor(cov, window, target, Ns[i]).residual_variance;
    });
    return out;
}

std::vector<int> geometric_truncations(int start, int max) {
    std::vector<int> out;
    for (long v = std::max(1, start); v <= max; v *= 2) out.push_back(static_cast<int>(v));
    return out;
}

CurveFit rigidity_from_curve(const std::vector<CurvePoint>& curve) {
    if (curve.size() < 8) throw Error(ErrorCode::ValidationError, "rigidity_from_curve needs at least 8 points");
    const std::size_t n = curve.size();
    // relative least squares: weights 1/r^2, so the large-N tail is not swamped by the first points
    double rmax = 0.0;
    for (const auto& p : curve) rmax = std::max(rmax, std::abs(p.residual));
    const double floor = std::max(rmax * 1e-12, std::numeric_limits<double>::min());
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::max(std::abs(curve[i].residual), floor);
        w[i] = 1.0 / (r * r);
    }
    CurveFit best;
    double best_sse = inf;
    for (int step = 0; step <= 275; ++step) {
        const double beta = 0.25 + 0.01 * step;
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::pow(static_cast<double>(curve[i].N), -beta), y = curve[i].residual;
            sw += w[i];
            sx += w[i] * x;
            sy += w[i] * y;
            sxx += w[i] * x * x;
            sxy += w[i] * x * y;
        }
        const double det = sw * sxx - sx * sx;
        if (!(det > 0.0)) continue;
        const double b = (sw * sxy - sx * sy) / det;
        const double a = (sy - b * sx) / sw;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = curve[i].residual - a - b * std::pow(static_cast<double>(curve[i].N), -beta);
            sse += w[i] * r * r;
        }
        if (sse < best_sse) {
            best_sse = sse;
            const double sigma2 = sse / static_cast<double>(n - 2);
            best.limit = a;
            best.b = b;
            best.beta = beta;
            best.stderr_ = std::sqrt(sigma2 * sxx / det);
        }
    }
    best.ci_low = best.limit - 1.96 * best.stderr_;
    best.ci_high = best.limit + 1.96 * best.stderr_;
    if (best.limit <= std::max(1e-6, 3.0 * best.stderr_)) best.flag = RigidFlag::Rigid;
    else if (best.limit >= 10.0 * best.stderr_ && best.limit >= 1e-4) best.flag = RigidFlag::NotRigid;
    else best.flag = RigidFlag::Undetermined;
    return best;
}

double interpolation_error_limit(const SpectralDensity& s) {
    if (!s.domain().is_torus() || s.dim() != 1)
        throw Error(ErrorCode::ValidationError, "interpolation limit is defined for d = 1 torus densities");
    quad::Options qo;
    qo.rel_tol = 1e-12;
    qo.max_panels = 20000;
    auto r = quad::integrate([&](double u) { return 1.0 / s({u}); }, -pi, pi, qo);
    if (!std::isfinite(r.value) || !r.converged) return 0.0;  // 1/s not integrable: perfect interpolation
    return 4.0 * pi * pi / r.value;
}

// ---------------------------------------------------------------------------

std::complex<double> TrigPolynomial::operator()(std::span<const double> u) const {
    std::complex<double> acc = 0.0;
    for (const auto& [n, a] : coefficients) {
        double ph = 0.0;
        for (int i = 0; i < d; ++i) ph += n[i] * u[i];
        acc += a * std::polar(1.0, ph);
    }
    return acc;
}

int TrigPolynomial::degree() const {
    int deg = 0;
    for (const auto& [n, a] : coefficients) {
        if (a == 0.0) continue;
        for (int x : n) deg = std::max(deg, std::abs(x));
    }
    return deg;
}

std::complex<double> TrigPolynomial::moment(const MultiIndex& k) const {
    std::complex<double> acc = 0.0;
    for (const auto& [n, a] : coefficients) acc += monomial(n, k) * a;
    return acc;
}

bool TrigPolynomial::is_even(double tol) const {
    const double scale = std::max(norm(), 1e-300);
    for (const auto& [n, a] : coefficients) {
        std::vector<int> neg(n);
        for (auto& x : neg) x = -x;
        auto it = coefficients.find(neg);
        const std::complex<double> b = it == coefficients.end() ? 0.0 : it->second;
        if (std::abs(a - b) > tol * scale) return false;
    }
    return true;
}

double TrigPolynomial::norm() const {
    double acc = 0.0;
    for (const auto& [n, a] : coefficients) acc += std::norm(a);
    return std::sqrt(acc);
}

std::vector<double> witness_ladder(const SpectralDensity& s, const TrigPolynomial& psi, const std::vector<Point>& zeros,
                                   bool* finite) {
    const int d = s.dim();
    if (d > 3) throw Error(ErrorCode::ValidationError, "witness ladder supports d <= 3");
    double eps = 0.25;
    for (std::size_t i = 0; i < zeros.size(); ++i)
        for (std::size_t j = i + 1; j < zeros.size(); ++j) {
            double dist = 0.0;
            for (int c = 0; c < d; ++c) {
                const double t = s.domain().wrap(zeros[i][c] - zeros[j][c]);
                dist += t * t;
            }
            eps = std::min(eps, 0.5 * std::sqrt(dist));
        }
    std::vector<double> dirs;
    if (d == 1) dirs = {1.0, -1.0};
    else {
        dirs = detail::direction_set(d, 128);
        if (d == 2)
            for (std::size_t i = 0; i < dirs.size() / 2; ++i) {
                const double t = 2.0 * pi * (i + 0.5) / 128;
                dirs[2 * i] = std::cos(t);
                dirs[2 * i + 1] = std::sin(t);
            }
    }
    const std::size_t ndir = dirs.size() / d;
    std::vector<double> ratios;
    bool all = true;
    for (const auto& z : zeros) {
        // d = 1: psi(z + h) = sum_j c_j h^j, with c_j at the rounding floor set to 0
        std::vector<std::complex<double>> taylor;
        if (d == 1) {
            constexpr int J = 48;
            taylor.assign(J, 0.0);
            std::vector<double> floor(J, 0.0);
            for (const auto& [n, a] : psi.coefficients) {
                std::complex<double> t = a * std::polar(1.0, n[0] * z[0]);
                double mag = std::abs(a);
                for (int j = 0; j < J; ++j) {
                    taylor[j] += t;
                    floor[j] += mag;
                    t *= std::complex<double>(0.0, n[0]) / static_cast<double>(j + 1);
                    mag *= std::abs(n[0]) / static_cast<double>(j + 1);
                }
            }
            for (int j = 0; j < J; ++j)
                if (std::abs(taylor[j]) <= 64.0 * std::numeric_limits<double>::epsilon() * floor[j]) taylor[j] = 0.0;
        }
        auto eval = [&](std::span<const double> u) {
            if (taylor.empty()) return psi(u);
            const double h = u[0] - z[0];
            std::complex<double> acc = 0.0;
            for (auto it = taylor.rbegin(); it != taylor.rend(); ++it) acc = acc * h + *it;
            return acc;
        };
        auto g = [&](double rho) {
            double acc = 0.0;
            std::vector<double> u(d);
            for (std::size_t i = 0; i < ndir; ++i) {
                for (int c = 0; c < d; ++c) u[c] = z[c] + rho * dirs[i * d + c];
                const double sv = s(u);
                const double p = std::norm(eval(u));
                if (p == 0.0) continue;
                if (!(sv > 0.0)) return inf;
                acc += p / sv;
            }
            return acc / static_cast<double>(ndir);
        };
        auto ladders = detail::shell_ladders(g, {static_cast<double>(d)}, d, eps, 40, 1e-10);
        double ratio = 0.0;
        const auto v = detail::ladder_outcome(ladders[0], 20, 0.05, 1e-3, &ratio);
        ratios.push_back(ratio);
        if (v != LadderVerdict::Convergent) all = false;
    }
    if (finite) *finite = all;
    return ratios;
}

namespace {

// Coefficients of prod_j (z - e^{i u_j}) in increasing powers of z.
std::vector<std::complex<double>> root_polynomial(const std::vector<double>& roots) {
    std::vector<std::complex<double>> p{1.0};
    for (double u : roots) {
        const std::complex<double> z = std::polar(1.0, u);
        std::vector<std::complex<double>> q(p.size() + 1, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            q[i + 1] += p[i];
            q[i] -= z * p[i];
        }
        p = std::move(q);
    }
    return p;
}

// Cleans conjugate-symmetric rounding: coefficients of a real polynomial.
std::complex<double> tidy(std::complex<double> a) {
    if (std::abs(a.imag()) <= 1e-13 * std::max(1.0, std::abs(a.real()))) a.imag(0.0);
    if (std::abs(a) <= 1e-15) a = 0.0;
    return a;
}

struct CheckedZeros {
    std::vector<double> roots;  // repeated by multiplicity
    std::vector<Point> locations;
    int total = 0;
};

CheckedZeros check_zero_set(const SpectralDensity& s, const std::vector<TorusZero>& zeros) {
    const Domain dom = Domain::torus(1);
    CheckedZeros out;
    for (const auto& z : zeros) {
        const double u = dom.wrap(z.location);
        if (z.multiplicity < 0) throw Error(ErrorCode::InconsistentAnnotations, "negative multiplicity");
        bool mirrored = std::abs(u) < 1e-12 || std::abs(u + pi) < 1e-12;
        for (const auto& w : zeros)
            if (std::abs(dom.wrap(w.location + u)) < 1e-9 && w.multiplicity == z.multiplicity) mirrored = true;
        if (!mirrored)
            throw Error(ErrorCode::InconsistentAnnotations,
                        "zero set must be symmetric: -u has to be annotated with the same multiplicity as u");
        FiniteOrderOptions fo;
        fo.eps = 0.25;
        for (const auto& w : zeros) {
            const double dist = std::abs(dom.wrap(w.location - u));
            if (dist > 1e-12) fo.eps = std::min(fo.eps, 0.5 * dist);
        }
        const auto q = finite_pole_order(s, {u}, std::max(10, z.multiplicity + 2), fo);
        if (!q || *q != z.multiplicity) {
            std::ostringstream os;
            os << "zero at " << u << " is annotated with multiplicity " << z.multiplicity << " but its ladder gives "
               << (q ? std::to_string(*q) : std::string("no finite order"));
            throw Error(ErrorCode::InconsistentAnnotations, os.str());
        }
        for (int i = 0; i < z.multiplicity; ++i) out.roots.push_back(u);
        out.locations.push_back({u});
        out.total += z.multiplicity;
    }
    return out;
}

}  // namespace

LmrResult lmr_test_1d(const SpectralDensity& s, const std::vector<TorusZero>& zeros, int m) {
    if (!s.domain().is_torus() || s.dim() != 1) throw Error(ErrorCode::ValidationError, "lmr_test_1d needs a d = 1 torus density");
    if (m < 0) throw Error(ErrorCode::ValidationError, "m must be >= 0");
    const auto z = check_zero_set(s, zeros);
    LmrResult res;
    res.total_multiplicity = z.total;
    res.lmr = z.total > 2 * m;
    if (res.lmr) return res;

    TrigPolynomial psi;
    const auto p = root_polynomial(z.roots);
    const int shift = z.total / 2;
    for (std::size_t i = 0; i < p.size(); ++i) psi.coefficients[{static_cast<int>(i) - shift}] = tidy(p[i]);
    bool finite = true;
    res.witness_ladder_ratios = witness_ladder(s, psi, z.locations, &finite);
    if (!finite) throw Error(ErrorCode::InconsistentAnnotations, "witness does not have finite energy near the zeros");
    res.witness = std::move(psi);
    return res;
}

namespace {

DiscreteRigidityResult exact_1d(const SpectralDensity& s, const std::vector<ZeroAnnotation>& zeros, int m,
                                const MultiIndex& k) {
    std::vector<TorusZero> tz;
    for (const auto& z : zeros) tz.push_back({z.location.at(0), z.order});
    const auto checked = check_zero_set(s, tz);
    DiscreteRigidityResult res;
    if (checked.total > 2 * m) {
        res.rigid = true;
        res.note = "maximally rigid: more than 2m poles counted with order";
        return res;
    }
    // finite-energy psi: e^{-imu} R(e^{iu}) e^{iju}, j = 0..2m - t
    const auto R = root_polynomial(checked.roots);
    const int free = 2 * m - checked.total;
    std::vector<TrigPolynomial> basis;
    std::vector<double> ell;
    double scale = 0.0;
    for (int j = 0; j <= free; ++j) {
        TrigPolynomial b;
        for (std::size_t i = 0; i < R.size(); ++i) b.coefficients[{static_cast<int>(i) + j - m}] = tidy(R[i]);
        const auto mom = b.moment(k);
        double weight = 0.0;
        for (const auto& [n, a] : b.coefficients) weight += std::abs(a) * std::abs(monomial(n, k));
        scale = std::max(scale, weight);
        ell.push_back(mom.real());
        basis.push_back(std::move(b));
    }
    double ell2 = 0.0;
    for (double e : ell) ell2 += e * e;
    if (std::sqrt(ell2) <= 1e-8 * std::max(scale, 1.0)) {
        res.rigid = true;
        res.note = "the moment functional vanishes on every finite-energy trigonometric polynomial of degree <= m";
        return res;
    }
    TrigPolynomial w;
    w.d = 1;
    for (std::size_t j = 0; j < basis.size(); ++j)
        for (const auto& [n, a] : basis[j].coefficients) w.coefficients[n] += (ell[j] / ell2) * a;
    const double nrm = w.norm();
    for (auto& [n, a] : w.coefficients) a = tidy(a / nrm);
    res.rigid = false;
    res.witness = std::move(w);
    res.note = "finite-energy witness with nonzero moment";
    return res;
}

double bump(double x) {
    // 1 on [0, 1/4], smooth decay to 0 at 1
    if (x <= 0.25) return 1.0;
    if (x >= 1.0) return 0.0;
    const double t = (1.0 - x) / 0.75;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

DiscreteRigidityResult numeric_2d(const SpectralDensity& s, const std::vector<ZeroAnnotation>& zeros, int m,
                                  const MultiIndex& k, const DiscreteGramOptions& opt) {
    const int d = 2;
    const Domain dom = s.domain();
    const auto basis = box_points(d, m);
    const auto lags = box_points(d, 2 * m);
    const std::size_t B = basis.size(), P = lags.size(), L = opt.delta_ladder.size();
    std::vector<double> ell(B);
    double ell_norm = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        ell[i] = monomial(basis[i], k);
        ell_norm += ell[i] * ell[i];
    }
    DiscreteRigidityResult res;
    if (ell_norm == 0.0) {
        res.rigid = true;
        res.note = "the moment functional vanishes identically on the window";
        return res;
    }

    double r = opt.bump_radius;
    for (std::size_t i = 0; i < zeros.size(); ++i)
        for (std::size_t j = i + 1; j < zeros.size(); ++j) {
            double dist = 0.0;
            for (int c = 0; c < d; ++c) {
                const double t = dom.wrap(zeros[i].location[c] - zeros[j].location[c]);
                dist += t * t;
            }
            r = std::min(r, 0.5 * std::sqrt(dist));
        }
    auto chi = [&](std::span<const double> u) {
        double acc = 0.0;
        for (const auto& z : zeros) {
            double dist = 0.0;
            for (int c = 0; c < d; ++c) {
                const double t = dom.wrap(u[c] - z.location[c]);
                dist += t * t;
            }
            acc += bump(std::sqrt(dist) / r);
        }
        return acc;
    };

    double smax = 0.0;
    {
        std::vector<double> u(d);
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j) {
                u[0] = -pi + 2.0 * pi * i / 64;
                u[1] = -pi + 2.0 * pi * j / 64;
                smax = std::max(smax, s(u));
            }
    }
    if (!(smax > 0.0)) smax = 1.0;
    std::vector<double> deltas;
    for (double rel : opt.delta_ladder) deltas.push_back(rel * smax);

    // smooth part: trapezoid on the periodic grid, refined until two levels agree
    auto trapezoid = [&](int n) {
        std::vector<double> acc(P * L, 0.0);
        std::vector<double> u(d);
        const double w = (2.0 * pi / n) * (2.0 * pi / n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                u[0] = -pi + 2.0 * pi * i / n;
                u[1] = -pi + 2.0 * pi * j / n;
                const double outside = 1.0 - chi(u);
                if (outside <= 0.0) continue;
                const double sv = s(u);
                for (std::size_t p = 0; p < P; ++p) {
                    const double cs = std::cos(lags[p][0] * u[0] + lags[p][1] * u[1]);
                    for (std::size_t l = 0; l < L; ++l) acc[l * P + p] += w * outside * cs / (sv + deltas[l]);
                }
            }
        return acc;
    };
    int n = 128;
    auto smooth = trapezoid(n);
    bool agreed = false;
    while (n < 2048) {
        n *= 2;
        auto next = trapezoid(n);
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            diff = std::max(diff, std::abs(next[i] - smooth[i]));
            scale = std::max(scale, std::abs(next[i]));
        }
        smooth = std::move(next);
        if (diff <= 1e-9 * scale) {
            agreed = true;
            break;
        }
    }
    if (!agreed) throw Error(ErrorCode::QuadratureFailure, "smooth part of the Gram quadrature did not converge "
                                                           "(are all zeros annotated?)");

    std::vector<double> moments = smooth;
    for (const auto& z : zeros) {
        bool ok = true;
        auto part = detail::ball_integral(
            d, r, 60, P * L, P, 1e-10,
            [&](double rho, std::span<const double> theta, std::span<double> o) {
                double u[2];
                for (int c = 0; c < d; ++c) u[c] = z.location[c] + rho * theta[c];
                const double weight = bump(rho / r);
                const double sv = s(std::span<const double>(u, 2));
                for (std::size_t p = 0; p < P; ++p) {
                    const double cs = std::cos(lags[p][0] * u[0] + lags[p][1] * u[1]);
                    for (std::size_t l = 0; l < L; ++l) o[l * P + p] = weight * cs / (sv + deltas[l]);
                }
            },
            &ok);
        if (!ok) throw Error(ErrorCode::QuadratureFailure, "Gram quadrature near a zero did not converge");
        for (std::size_t i = 0; i < moments.size(); ++i) moments[i] += part[i];
    }

    const int side = 4 * m + 1;
    auto lag_index = [&](const std::vector<int>& a, const std::vector<int>& b) {
        return static_cast<std::size_t>((a[0] - b[0] + 2 * m) + side * (a[1] - b[1] + 2 * m));
    };
    Eigen::Map<const Eigen::VectorXd> ellv(ell.data(), static_cast<Eigen::Index>(B));
    std::vector<Eigen::VectorXd> witnesses;
    std::vector<Eigen::MatrixXd> grams;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd G(B, B);
        for (std::size_t a = 0; a < B; ++a)
            for (std::size_t b = 0; b < B; ++b) G(a, b) = moments[l * P + lag_index(basis[a], basis[b])];
        Eigen::LDLT<Eigen::MatrixXd> f(G);
        Eigen::VectorXd y = f.solve(ellv);
        const double q = ellv.dot(y);
        res.energies.push_back(1.0 / q);
        witnesses.push_back(y / q);
        grams.push_back(std::move(G));
    }
    const auto& e = res.energies;
    const double noise = 1e-7 * std::abs(e.back());
    const double last = e[L - 1] - e[L - 2], prev = e[L - 2] - e[L - 3];
    int trend = 0;  // 1 bounded, -1 unbounded
    if (std::abs(last) <= noise) trend = 1;
    else if (prev > noise) {
        const double ratio = last / prev;
        trend = ratio <= opt.converge_ratio ? 1 : (ratio >= opt.diverge_ratio ? -1 : 0);
    } else if (last > 0.0) trend = -1;

    if (trend == -1) {
        res.rigid = true;
        res.note = "least energy with unit moment grows without bound";
        return res;
    }
    if (trend == 0) {
        res.determined = false;
        res.note = "energy increments neither vanish nor persist";
        return res;
    }
    TrigPolynomial w;
    w.d = d;
    const Eigen::VectorXd& best = witnesses.back();
    const double nrm = best.norm();
    for (std::size_t i = 0; i < B; ++i) w.coefficients[basis[i]] = tidy(best[static_cast<Eigen::Index>(i)] / nrm);
    std::vector<Point> locs;
    for (const auto& z : zeros) locs.push_back(z.location);
    bool finite = true;
    if (!locs.empty()) witness_ladder(s, w, locs, &finite);
    if (!finite) {
        res.determined = false;
        res.note = "the least-energy polynomial does not pass the ladder check";
        return res;
    }
    res.rigid = false;
    res.witness = std::move(w);
    res.note = "bounded least energy with unit moment";
    return res;
}

}  // namespace

DiscreteRigidityResult k_rigid_discrete_test(const SpectralDensity& s, const std::vector<ZeroAnnotation>& zeros, int m,
                                             const MultiIndex& k, const DiscreteGramOptions& opt) {
    if (!s.domain().is_torus()) throw Error(ErrorCode::ValidationError, "k_rigid_discrete_test needs a torus density");
    if (m < 0) throw Error(ErrorCode::ValidationError, "m must be >= 0");
    if (k.dim() != s.dim()) throw Error(ErrorCode::ValidationError, "multi-index dimension does not match");
    for (const auto& z : zeros)
        if (static_cast<int>(z.location.size()) != s.dim())
            throw Error(ErrorCode::ValidationError, "zero annotation has wrong dimension");
    if (s.dim() == 1) return exact_1d(s, zeros, m, k);
    if (s.dim() == 2) {
        if (opt.delta_ladder.size() < 3) throw Error(ErrorCode::ValidationError, "need at least 3 delta levels");
        return numeric_2d(s, zeros, m, k, opt);
    }
    throw Error(ErrorCode::ValidationError, "k_rigid_discrete_test supports d <= 2");
}

}  // namespace rigidity
