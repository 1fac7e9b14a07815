#include "rigidity/spectral_density.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "rigidity/detail/sphere.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity {

namespace {
constexpr double pi = std::numbers::pi;
}

SpectralDensity::SpectralDensity(Domain domain, Eval eval, DensityFlags flags,
                                 std::optional<std::vector<ZeroAnnotation>> zeros,
                                 std::vector<Atom> atoms, std::string description)
    : domain_(domain),
      eval_(std::move(eval)),
      flags_(flags),
      zeros_(std::move(zeros)),
      atoms_(std::move(atoms)),
      description_(std::move(description)) {
    if (!eval_) throw Error(ErrorCode::ValidationError, "spectral density needs an evaluator");
    const auto d = static_cast<std::size_t>(domain_.dim);
    if (zeros_) {
        for (const auto& z : *zeros_) {
            if (z.location.size() != d)
                throw Error(ErrorCode::ValidationError, "zero annotation has wrong dimension");
            if (z.order < 0) throw Error(ErrorCode::ValidationError, "zero order must be >= 0");
        }
    }
    for (const auto& a : atoms_) {
        if (a.location.size() != d) throw Error(ErrorCode::ValidationError, "atom has wrong dimension");
        if (!(a.mass >= 0.0)) throw Error(ErrorCode::ValidationError, "atom mass must be >= 0");
    }
}

double SpectralDensity::operator()(std::span<const double> u) const {
    if (!domain_.is_torus()) return eval_(u);
    std::array<double, 8> buf{};
    std::vector<double> big;
    std::span<double> w;
    if (u.size() <= buf.size()) {
        w = std::span<double>(buf.data(), u.size());
    } else {
        big.resize(u.size());
        w = big;
    }
    for (std::size_t i = 0; i < u.size(); ++i) w[i] = domain_.wrap(u[i]);
    return eval_(w);
}

SpectralDensity SpectralDensity::with_flags(DensityFlags flags) const {
    SpectralDensity s = *this;
    s.flags_ = flags;
    return s;
}

SpectralDensity SpectralDensity::with_zeros(std::vector<ZeroAnnotation> zeros) const {
    return SpectralDensity(domain_, eval_, flags_, std::move(zeros), atoms_, description_)
        .with_factors(factors_);
}

SpectralDensity SpectralDensity::with_factors(std::vector<Factor> factors) const {
    SpectralDensity s = *this;
    s.factors_ = std::move(factors);
    return s;
}

SpectralDensity SpectralDensity::with_atoms(std::vector<Atom> atoms) const {
    return SpectralDensity(domain_, eval_, flags_, zeros_, std::move(atoms), description_)
        .with_factors(factors_);
}

SpectralDensity SpectralDensity::scaled(double c) const {
    auto inner = eval_;
    std::vector<Atom> atoms = atoms_;
    for (auto& a : atoms) a.mass *= c;
    SpectralDensity s(domain_, [inner, c](std::span<const double> u) { return c * inner(u); }, flags_,
                      zeros_, std::move(atoms), description_);
    if (!factors_.empty()) {
        auto f = factors_;
        auto f0 = f[0];
        f[0] = [f0, c](double x) { return c * f0(x); };
        s.factors_ = std::move(f);
    }
    return s;
}

namespace builtin {

namespace {
double sq(double x) { return x * x; }
}  // namespace

SpectralDensity white_noise(int d) {
    const double level = std::pow(2.0 * pi, -d);
    std::vector<SpectralDensity::Factor> f(d, [](double) { return 1.0 / (2.0 * pi); });
    return SpectralDensity(Domain::torus(d), [level](std::span<const double>) { return level; },
                           {.isotropic = false, .separable = true, .simple = true},
                           std::vector<ZeroAnnotation>{}, {}, "white noise")
        .with_factors(std::move(f));
}

SpectralDensity poisson(int d) {
    std::vector<SpectralDensity::Factor> f(d, [](double) { return 1.0; });
    return SpectralDensity(Domain::euclidean(d), [](std::span<const double>) { return 1.0; },
                           {.isotropic = true, .separable = true, .simple = true},
                           std::vector<ZeroAnnotation>{}, {}, "poisson")
        .with_factors(std::move(f));
}

SpectralDensity power_law(int d, double alpha, double c) {
    std::optional<std::vector<ZeroAnnotation>> zeros = std::vector<ZeroAnnotation>{};
    if (alpha > 0) {
        // least q with 2q + d > alpha
        const int q = alpha < d ? 0 : static_cast<int>(std::floor((alpha - d) / 2.0)) + 1;
        zeros->push_back({Point(d, 0.0), q});
    }
    return SpectralDensity(
        Domain::euclidean(d),
        [alpha, c](std::span<const double> u) {
            if (alpha == 0.0) return c;
            return c * std::pow(norm2(u), alpha);
        },
        {.isotropic = true, .separable = false, .simple = false}, std::move(zeros), {},
        "power law |u|^" + std::to_string(alpha));
}

SpectralDensity ginibre() {
    return SpectralDensity(
        Domain::euclidean(2),
        [](std::span<const double> u) { return -std::expm1(-(u[0] * u[0] + u[1] * u[1]) / (4.0 * pi)); },
        {.isotropic = true, .separable = false, .simple = true},
        std::vector<ZeroAnnotation>{{{0.0, 0.0}, 1}}, {}, "ginibre");
}

SpectralDensity gaf_scaling(double c) {
    return SpectralDensity(
        Domain::euclidean(2),
        [c](std::span<const double> u) { return c * sq(u[0] * u[0] + u[1] * u[1]); },
        {.isotropic = true, .separable = false, .simple = false},
        std::vector<ZeroAnnotation>{{{0.0, 0.0}, 2}}, {}, "gaf scaling c|u|^4");
}

SpectralDensity ma1_unit_root() {
    return SpectralDensity(
        Domain::torus(1), [](std::span<const double> u) { const double h = std::sin(0.5 * u[0]); return h * h / pi; },
        {.isotropic = false, .separable = true, .simple = true},
        std::vector<ZeroAnnotation>{{{0.0}, 1}}, {}, "ma1 unit root");
}

SpectralDensity ar1(double phi) {
    if (!(std::abs(phi) < 1.0)) throw Error(ErrorCode::ValidationError, "ar1 needs |phi| < 1");
    return SpectralDensity(
        Domain::torus(1),
        [phi](std::span<const double> u) {
            return (1.0 - phi * phi) / (2.0 * pi * (1.0 - 2.0 * phi * std::cos(u[0]) + phi * phi));
        },
        {.isotropic = false, .separable = true, .simple = true}, std::vector<ZeroAnnotation>{}, {},
        "ar1 phi=" + std::to_string(phi));
}

SpectralDensity discrete_example() {
    // int_{-pi}^{pi} (u^2 - 1)^2 du
    const double mass = 2.0 * (std::pow(pi, 5) / 5.0 - 2.0 * std::pow(pi, 3) / 3.0 + pi);
    return SpectralDensity(
        Domain::torus(1),
        [mass](std::span<const double> u) { return sq(u[0] - 1.0) * sq(u[0] + 1.0) / mass; },
        {.isotropic = false, .separable = true, .simple = true},
        std::vector<ZeroAnnotation>{{{1.0}, 1}, {{-1.0}, 1}}, {}, "(u-1)^2 (u+1)^2");
}

SpectralDensity anisotropic_line() {
    return SpectralDensity(Domain::euclidean(2),
                           [](std::span<const double> u) { return sq(u[0] - u[1]); }, {}, std::nullopt, {},
                           "(u1-u2)^2");
}

SpectralDensity quartic_axis() {
    return SpectralDensity(Domain::euclidean(2),
                           [](std::span<const double> u) { return sq(sq(u[0])); },
                           {.isotropic = false, .separable = true, .simple = false}, std::nullopt, {},
                           "u1^4")
        .with_factors({[](double x) { return sq(sq(x)); }, [](double) { return 1.0; }});
}

SpectralDensity line_zero_counterexample() {
    return SpectralDensity(
        Domain::euclidean(2),
        [](std::span<const double> u) {
            if (u[0] * u[0] + u[1] * u[1] <= 0.25) return 1.0;
            return sq(u[1]) / (1.0 + std::pow(u[1], 10)) / (1.0 + std::pow(u[0], 10));
        },
        {}, std::nullopt, {}, "line-zero counterexample");
}

std::vector<std::string> names() {
    return {"white_noise", "poisson", "power_law", "ginibre", "gaf_scaling", "ma1_unit_root", "ar1",
            "discrete_example", "anisotropic_line", "quartic_axis", "line_zero_counterexample"};
}

SpectralDensity by_name(const std::string& name,
                        const std::function<std::optional<double>(const std::string&)>& params) {
    auto get = [&](const std::string& key, double fallback) { return params(key).value_or(fallback); };
    const int d = static_cast<int>(get("d", 1));
    if (name == "white_noise") return white_noise(d);
    if (name == "poisson") return poisson(d);
    if (name == "power_law") return power_law(d, get("alpha", 2.0), get("c", 1.0));
    if (name == "ginibre") return ginibre();
    if (name == "gaf_scaling") return gaf_scaling(get("c", 1.0));
    if (name == "ma1_unit_root") return ma1_unit_root();
    if (name == "ar1") return ar1(get("phi", 0.5));
    if (name == "discrete_example") return discrete_example();
    if (name == "anisotropic_line") return anisotropic_line();
    if (name == "quartic_axis") return quartic_axis();
    if (name == "line_zero_counterexample") return line_zero_counterexample();
    throw Error(ErrorCode::ValidationError, "unknown builtin density '" + name + "'");
}

}  // namespace builtin

// ---------------------------------------------------------------------------

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

constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

bool close_rel(double a, double b, double rel) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= rel * scale + 1e-300;
}

// Rotates u in the (i, j) coordinate plane by t.
void givens(std::vector<double>& u, int i, int j, double t) {
    const double c = std::cos(t), s = std::sin(t);
    const double a = u[i], b = u[j];
    u[i] = c * a - s * b;
    u[j] = s * a + c * b;
}

}  // namespace

InvariantReport check_invariants(const SpectralDensity& s, int samples) {
    InvariantReport rep;
    const int d = s.dim();
    const bool torus = s.domain().is_torus();
    double min_value = std::numeric_limits<double>::infinity();
    std::vector<double> u(d), v(d), e(d);
    const double s0 = [&] {
        std::vector<double> z(d, 0.0);
        return s(z);
    }();

    for (int n = 1; n <= samples; ++n) {
        for (int i = 0; i < d; ++i) {
            const double h = radical_inverse(primes[i % 16], static_cast<unsigned long long>(n));
            u[i] = torus ? -pi + 2.0 * pi * h : 8.0 * (2.0 * h - 1.0) * std::pow(0.5, n % 4);
        }
        const double su = s(u);
        if (!std::isfinite(su)) {
            rep.nonnegative = false;
            rep.violations.push_back("non-finite value");
            continue;
        }
        min_value = std::min(min_value, su);
        if (su < 0.0) rep.nonnegative = false;

        for (int i = 0; i < d; ++i) v[i] = -u[i];
        const double sm = s(v);
        const double ev = std::abs(su - sm) / std::max({std::abs(su), std::abs(sm), 1e-300});
        rep.worst_evenness = std::max(rep.worst_evenness, ev);
        if (!close_rel(su, sm, 1e-12)) rep.even = false;

        if (s.flags().isotropic && d >= 2 && !torus) {
            v = u;
            const double t = 2.0 * pi * radical_inverse(primes[(d + 1) % 16], static_cast<unsigned long long>(n));
            for (int i = 0; i + 1 < d; ++i) givens(v, i, i + 1, t * (i + 1));
            const double sr = s(v);
            const double iso = std::abs(su - sr) / std::max({std::abs(su), std::abs(sr), 1e-300});
            rep.worst_isotropy = std::max(rep.worst_isotropy, iso);
            if (!close_rel(su, sr, 1e-9)) rep.isotropic = false;
        }

        if (s.flags().separable && d >= 2) {
            double lhs = su, rhs = 1.0;
            if (s0 != 0.0) {
                lhs = su * std::pow(s0, d - 1);
                for (int i = 0; i < d; ++i) {
                    std::fill(e.begin(), e.end(), 0.0);
                    e[i] = u[i];
                    rhs *= s(e);
                }
            } else if (static_cast<int>(s.factors().size()) == d) {
                for (int i = 0; i < d; ++i) rhs *= s.factors()[i](torus ? s.domain().wrap(u[i]) : u[i]);
            } else {
                rep.separable = false;
                if (n == 1) rep.violations.push_back("separable flag set, s(0) = 0 and no factors declared");
                continue;
            }
            const double sep = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
            rep.worst_separability = std::max(rep.worst_separability, sep);
            if (!close_rel(lhs, rhs, 1e-9)) rep.separable = false;
        }
    }
    rep.min_value = min_value;
    if (!rep.nonnegative) rep.violations.push_back("negative value sampled");
    if (!rep.even) rep.violations.push_back("density is not even");
    if (!rep.isotropic) rep.violations.push_back("isotropic flag set but rotation changes the value");
    if (!rep.separable && rep.violations.empty()) rep.violations.push_back("separable flag set but product check fails");
    return rep;
}

const char* to_string(LadderVerdict v) noexcept {
    switch (v) {
    case LadderVerdict::Convergent: return "convergent";
    case LadderVerdict::Divergent: return "divergent";
    case LadderVerdict::Undetermined: return "undetermined";
    }
    return "undetermined";
}

TemperednessReport validate_temperedness(const SpectralDensity& s, const LadderOptions& opt) {
    if (s.domain().is_torus())
        throw Error(ErrorCode::ValidationError, "temperedness is checked on Euclidean domains only");
    const int d = s.dim();
    if (d > 3) throw Error(ErrorCode::ValidationError, "temperedness ladder supports d <= 3");
    const auto dirs = detail::direction_set(d, d == 1 ? 2 : 256);
    const std::size_t ndir = dirs.size() / d;
    const double area = detail::sphere_area(d);
    std::vector<double> u(d);

    // mean of s over the sphere of radius rho
    auto sphere_mean = [&](double rho) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ndir; ++k) {
            for (int i = 0; i < d; ++i) u[i] = rho * dirs[k * d + i];
            acc += s(u);
        }
        return acc / static_cast<double>(ndir);
    };
    auto weight = [&](double rho) { return std::pow(1.0 + rho, -2.0 * (d + 1)); };

    quad::Options qo;
    qo.rel_tol = opt.quad_rel_tol;
    TemperednessReport rep;
    // unit ball in rho directly
    auto ball = quad::integrate([&](double rho) { return area * std::pow(rho, d - 1) * weight(rho) * sphere_mean(rho); },
                                0.0, 1.0, qo);
    rep.shell_terms.push_back(ball.value);
    for (int j = 0; j < opt.shells; ++j) {
        const double lo = std::log(std::ldexp(1.0, j));
        auto shell = quad::integrate(
            [&](double t) {
                const double rho = std::exp(t);
                const double m = sphere_mean(rho);
                if (!std::isfinite(m)) return std::numeric_limits<double>::infinity();
                return area * std::pow(rho, d) * weight(rho) * m;
            },
            lo, lo + std::log(2.0), qo);
        rep.shell_terms.push_back(std::isfinite(shell.value) ? shell.value
                                                             : std::numeric_limits<double>::infinity());
    }
    double acc = 0.0;
    for (double t : rep.shell_terms) {
        acc += t;
        rep.partial_sums.push_back(acc);
    }
    const auto fit = detail::fit_ladder(rep.shell_terms, opt.fit_window);
    rep.fitted_ratio = fit.ratio;
    if (fit.non_finite) rep.verdict = LadderVerdict::Divergent;
    else if (fit.zero_tail || fit.ratio <= 1.0 - opt.tau) rep.verdict = LadderVerdict::Convergent;
    else if (fit.ratio >= 1.0 - opt.divergence_slack) rep.verdict = LadderVerdict::Divergent;
    else rep.verdict = LadderVerdict::Undetermined;
    return rep;
}

}  // namespace rigidity
