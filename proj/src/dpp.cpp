#include "rigidity/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/expression.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity {

namespace {
constexpr double pi = std::numbers::pi;
constexpr double tail_level = 1e-14;
constexpr double max_radius = 4096.0;

double sqnorm(std::span<const double> u) {
    double a = 0.0;
    for (double x : u) a += x * x;
    return a;
}

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - (pi * x) * (pi * x) / 6.0;
    return std::sin(pi * x) / (pi * x);
}

// 1 - J0(z), 1 - sin(z)/z and 1 - cos(z) without cancellation.
double one_minus_j0(double z) {
    if (z < 0.1) {
        const double t = z * z;
        return t / 4.0 - t * t / 64.0 + t * t * t / 2304.0;
    }
    return 1.0 - std::cyl_bessel_j(0.0, z);
}
double one_minus_sinc(double z) {
    if (z < 0.1) {
        const double t = z * z;
        return t / 6.0 - t * t / 120.0 + t * t * t / 5040.0;
    }
    return 1.0 - std::sin(z) / z;
}
double one_minus_cos(double z) {
    const double h = std::sin(0.5 * z);
    return 2.0 * h * h;
}

double radial_weight(int d, double r) {
    switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * pi * r;
    default: return 4.0 * pi * r * r;
    }
}
double radial_kernel(int d, double z) {
    switch (d) {
    case 1: return one_minus_cos(z);
    case 2: return one_minus_j0(z);
    default: return one_minus_sinc(z);
    }
}

// Radius beyond which sampled values of f^2 stay below tail_level.
double truncation(const std::function<double(double)>& f, bool* resolved) {
    auto peak = [&](double a, double b) {
        double m = 0.0;
        for (int i = 0; i <= 64; ++i) {
            const double x = a + (b - a) * (i + 0.381966) / 65.0;
            m = std::max(m, f(x) * f(x));
        }
        return m;
    };
    double R = 1.0;
    while (R < max_radius && (peak(R, 2 * R) >= tail_level || peak(2 * R, 4 * R) >= tail_level)) R *= 2.0;
    *resolved = peak(R, 2 * R) < tail_level && peak(2 * R, 4 * R) < tail_level;
    return R;
}

// Two-tolerance quadrature; throws when the levels disagree.
double certified(const std::function<double(double)>& f, double a, double b, double agreement) {
    quad::Options lo, hi;
    lo.rel_tol = 1e-9;
    hi.rel_tol = 1e-12;
    lo.max_panels = hi.max_panels = 20000;
    const auto r1 = quad::integrate(f, a, b, lo);
    const auto r2 = quad::integrate(f, a, b, hi);
    if (!std::isfinite(r2.value) || std::abs(r1.value - r2.value) > agreement * std::max(1.0, std::abs(r2.value)))
        throw Error(ErrorCode::QuadratureFailure, "numeric kappa^2 transform: quadrature levels disagree");
    return r2.value;
}

double fast(const std::function<double(double)>& f, double a, double b) {
    quad::Options o;
    o.rel_tol = 1e-12;
    o.abs_tol = 1e-300;
    o.max_panels = 20000;
    return quad::integrate(f, a, b, o).value;
}

// Numeric transform in raw coordinates: intensity * F(kappa^2) = P0 - intensity * D(u),
// D(u) = int kappa^2 (1 - cos(u.x)) dx.
class NumericTransform {
public:
    enum class Mode { Radial, Tensor, Box };

    explicit NumericTransform(const DppKernel& k) : k_(k) {
        if (k.d == 1 || k.isotropic) {
            mode_ = Mode::Radial;
            if (k.d > 3) throw Error(ErrorCode::ValidationError, "radial transforms support d <= 3");
            profile_ = [kap = k.kappa, d = k.d](double r) {
                double x[3] = {r, 0.0, 0.0};
                return kap(std::span<const double>(x, d));
            };
            R_.push_back(truncation(profile_, &resolved_));
            I0_.push_back(fast([&](double r) { return radial_weight(k.d, r) * sq(profile_(r)); }, 0.0, R_[0]));
        } else if (static_cast<int>(k.factors.size()) == k.d) {
            mode_ = Mode::Tensor;
            for (const auto& f : k.factors) {
                bool ok = true;
                R_.push_back(truncation(f, &ok));
                resolved_ = resolved_ && ok;
                I0_.push_back(fast([&](double x) { return 2.0 * sq(f(x)); }, 0.0, R_.back()));
            }
        } else if (k.d == 2) {
            mode_ = Mode::Box;
            double R = 1.0;
            std::function<double(double)> diag = [&](double t) {
                double best = 0.0;
                for (double a : {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
                    double x[2] = {t * std::cos(a), t * std::sin(a)};
                    best = std::max(best, std::abs(k.kappa(std::span<const double>(x, 2))));
                }
                return best;
            };
            R = truncation(diag, &resolved_);
            R_.push_back(R);
            I0_.push_back(box([](double, double) { return 1.0; }, false, 1e-8));
        } else {
            throw Error(ErrorCode::ValidationError, "numeric transform needs an isotropic or tensor kernel in d >= 3");
        }
        P0_ = k.intensity;
        for (double v : I0_) P0_ *= v;
    }

    bool resolved() const noexcept { return resolved_; }
    double mass() const noexcept { return P0_ / k_.intensity; }  // int kappa^2
    Mode mode() const noexcept { return mode_; }

    // intensity * F(kappa^2)(u); certified against a coarser level.
    double ft(std::span<const double> u, double agreement) const {
        if (!resolved_)
            throw Error(ErrorCode::QuadratureFailure,
                        "kappa^2 tail is not below 1e-14 within radius 4096; supply a closed-form transform");
        switch (mode_) {
        case Mode::Radial: {
            const double rho = std::sqrt(sqnorm(u));
            auto f = [&](double r) {
                const double w = radial_weight(k_.d, r) * sq(profile_(r));
                if (k_.d == 1) return w * std::cos(rho * r);
                if (k_.d == 2) return w * std::cyl_bessel_j(0.0, rho * r);
                const double z = rho * r;
                return w * (z < 1e-8 ? 1.0 : std::sin(z) / z);
            };
            return k_.intensity * certified(f, 0.0, R_[0], agreement);
        }
        case Mode::Tensor: {
            double p = k_.intensity;
            for (int i = 0; i < k_.d; ++i) {
                const auto& g = k_.factors[i];
                p *= certified([&](double x) { return 2.0 * sq(g(x)) * std::cos(u[i] * x); }, 0.0, R_[i], agreement);
            }
            return p;
        }
        case Mode::Box:
            return k_.intensity *
                   box([&](double x1, double x2) { return std::cos(u[0] * x1 + u[1] * x2); }, true, agreement);
        }
        return 0.0;
    }

    // 1 - intensity F(kappa^2)(u) with the constant offset supplied by the caller.
    double structure(std::span<const double> u, double offset) const {
        switch (mode_) {
        case Mode::Radial: {
            const double rho = std::sqrt(sqnorm(u));
            thread_local const void* owner = nullptr;
            thread_local double last_rho = -1.0, last_val = 0.0;
            // directions at one radius differ only by rounding in |u|
            if (owner == this && std::abs(rho - last_rho) <= 1e-14 * rho) return offset + last_val;
            const double D = rho == 0.0 ? 0.0 : fast([&](double r) {
                return radial_weight(k_.d, r) * sq(profile_(r)) * radial_kernel(k_.d, rho * r);
            }, 0.0, R_[0]);
            owner = this;
            last_rho = rho;
            last_val = k_.intensity * D;
            return offset + last_val;
        }
        case Mode::Tensor: {
            // 1 - P0 prod(1 - D_i / I_i) = (1 - P0) + P0 (1 - prod(...))
            double lg = 0.0;
            for (int i = 0; i < k_.d; ++i) {
                const auto& g = k_.factors[i];
                const double D = u[i] == 0.0 ? 0.0 : fast([&](double x) {
                    return 2.0 * sq(g(x)) * one_minus_cos(u[i] * x);
                }, 0.0, R_[i]);
                lg += std::log1p(-D / I0_[i]);
            }
            return offset + P0_ * -std::expm1(lg);
        }
        case Mode::Box: {
            const double D = box([&](double x1, double x2) { return one_minus_cos(u[0] * x1 + u[1] * x2); }, false, 0);
            return offset + k_.intensity * D;
        }
        }
        return 0.0;
    }

private:
    static double sq(double x) { return x * x; }

    double box(const std::function<double(double, double)>& w, bool check, double agreement) const {
        const double R = R_[0];
        auto run = [&](double tol) {
            quad::Options o;
            o.rel_tol = tol;
            o.max_panels = 2000;
            return quad::integrate([&](double x1) {
                return quad::integrate([&](double x2) {
                    double x[2] = {x1, x2};
                    return sq(k_.kappa(std::span<const double>(x, 2))) * w(x1, x2);
                }, -R, R, o).value;
            }, -R, R, o).value;
        };
        const double v = run(1e-11);
        if (check) {
            const double c = run(1e-8);
            if (std::abs(v - c) > agreement * std::max(1.0, std::abs(v)))
                throw Error(ErrorCode::QuadratureFailure, "numeric kappa^2 transform: quadrature levels disagree");
        }
        return v;
    }

    DppKernel k_;
    Mode mode_ = Mode::Radial;
    std::function<double(double)> profile_;
    std::vector<double> R_, I0_;
    double P0_ = 1.0;
    bool resolved_ = true;
};

std::vector<std::vector<double>> check_points(int d) {
    std::vector<std::vector<double>> out;
    for (double r : {0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0}) {
        std::vector<double> a(d, 0.0), b(d, r / std::sqrt(static_cast<double>(d)));
        a[0] = r;
        out.push_back(a);
        if (d > 1 && r > 0) out.push_back(b);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

DppKernel DppKernel::dilated(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::ValidationError, "dilation must be positive");
    DppKernel out = *this;
    const int dim = d;
    out.kappa = [kap = kappa, c, dim](std::span<const double> x) {
        double y[8];
        for (int i = 0; i < dim; ++i) y[i] = x[i] / c;
        return kap(std::span<const double>(y, dim));
    };
    out.factors.clear();
    for (const auto& f : factors) out.factors.push_back([f, c](double x) { return f(x / c); });
    out.intensity = intensity * std::pow(c, -d);
    auto scaled_u = [c, dim](const Fn& g) {
        return Fn([g, c, dim](std::span<const double> u) {
            double v[8];
            for (int i = 0; i < dim; ++i) v[i] = u[i] * c;
            return g(std::span<const double>(v, dim));
        });
    };
    // F(kappa(./c)^2)(u) = c^d F(kappa^2)(c u); the structure factor becomes s(c u)
    if (kappa_sq_ft) {
        auto g = scaled_u(*kappa_sq_ft);
        const double cd = std::pow(c, d);
        out.kappa_sq_ft = [g, cd](std::span<const double> u) { return cd * g(u); };
    }
    if (structure_factor) out.structure_factor = scaled_u(*structure_factor);
    return out;
}

DppKernel DppKernel::unit_intensity() const {
    if (!(intensity > 0.0)) throw Error(ErrorCode::ValidationError, "kernel intensity must be positive");
    if (intensity == 1.0) return *this;
    return dilated(std::pow(intensity, 1.0 / d));
}

KernelCheck check_kernel(const DppKernel& k) {
    KernelCheck rep;
    auto fail = [&](std::string msg) {
        rep.ok = false;
        rep.violations.push_back(std::move(msg));
    };
    if (k.d < 1 || k.d > 8) throw Error(ErrorCode::ValidationError, "kernel dimension must be in 1..8");
    if (!k.kappa) throw Error(ErrorCode::ValidationError, "kernel has no kappa");
    std::vector<double> zero(k.d, 0.0);
    if (std::abs(k.kappa(zero) - 1.0) > 1e-12) fail("kappa(0) != 1");
    if (!(k.intensity > 0.0)) fail("intensity must be positive");

    const NumericTransform nt = [&] {
        try {
            return NumericTransform(k);
        } catch (const Error&) {
            DppKernel iso = k;
            iso.isotropic = true;  // fall back to a radial profile estimate for the checks
            return NumericTransform(iso);
        }
    }();
    rep.tail_resolved = nt.resolved();
    rep.kappa_sq_integral = nt.mass();
    // halton samples in a box
    const double R = 8.0;
    static const int primes[8] = {2, 3, 5, 7, 11, 13, 17, 19};
    std::vector<double> x(k.d);
    for (int i = 1; i <= 256; ++i) {
        for (int c = 0; c < k.d; ++c) {
            double f = 1.0, h = 0.0;
            for (int n = i; n > 0; n /= primes[c]) {
                f /= primes[c];
                h += f * (n % primes[c]);
            }
            x[c] = R * (2.0 * h - 1.0);
        }
        const double v = k.kappa(x);
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
            std::ostringstream os;
            os << "kappa outside [0, 1] at a sampled point (value " << v << ")";
            fail(os.str());
            break;
        }
    }
    if (!nt.resolved()) {
        // shell sums of kappa^2 must decay: per factor for tensor kernels, along the profile otherwise
        std::vector<std::function<double(double)>> w;
        if (static_cast<int>(k.factors.size()) == k.d) {
            for (const auto& f : k.factors) w.push_back([f](double r) { return 2.0 * f(r) * f(r); });
        } else {
            w.push_back([&k](double r) {
                std::vector<double> y(k.d, 0.0);
                y[0] = r;
                const double v = k.kappa(y);
                return radial_weight(k.d, r) * v * v;
            });
        }
        for (const auto& g : w) {
            double prev = 0.0, last = 0.0;
            for (double a = max_radius / 4; a < max_radius * 2; a *= 2) {
                prev = last;
                last = fast(g, a, 2 * a);
            }
            if (!(last <= 0.95 * prev)) {
                fail("kappa^2 does not appear to be integrable");
                break;
            }
        }
    }
    for (const auto& u : check_points(k.d)) {
        double F;
        if (k.kappa_sq_ft) F = (*k.kappa_sq_ft)(u);
        else if (nt.resolved()) F = nt.ft(u, 1e-6) / k.intensity;
        else break;
        if (!(F >= -1e-12 && k.intensity * F <= 1.0 + 1e-12)) {
            fail("intensity * F(kappa^2) outside [0, 1]");
            break;
        }
    }
    return rep;
}

double numeric_kappa_sq_ft(const DppKernel& k, std::span<const double> u, double agreement_tol) {
    if (static_cast<int>(u.size()) != k.d) throw Error(ErrorCode::ValidationError, "frequency has wrong dimension");
    return NumericTransform(k).ft(u, agreement_tol);
}

StructureFactor structure_factor_from_kernel(const DppKernel& raw, const StructureFactorOptions& opt) {
    const auto chk = check_kernel(raw);
    if (!chk.ok) {
        std::string msg = "invalid kernel";
        for (const auto& v : chk.violations) msg += "; " + v;
        throw Error(ErrorCode::ValidationError, msg);
    }
    const DppKernel k = opt.normalize_intensity ? raw.unit_intensity() : raw;
    const int d = k.d;
    StructureFactor out{SpectralDensity(Domain::euclidean(d), [](std::span<const double>) { return 1.0; }), 0.0, false,
                        false, std::nullopt, {}};
    out.closed_form = k.structure_factor.has_value() || k.kappa_sq_ft.has_value();

    std::shared_ptr<NumericTransform> nt;
    try {
        nt = std::make_shared<NumericTransform>(k);
    } catch (const Error&) {
        if (!out.closed_form) throw;
    }
    if (out.closed_form && opt.verify_closed_form) {
        if (nt && nt->resolved()) {
            double worst = 0.0;
            for (const auto& u : check_points(d)) {
                const double closed = k.kappa_sq_ft ? k.intensity * (*k.kappa_sq_ft)(u) : 1.0 - (*k.structure_factor)(u);
                worst = std::max(worst, std::abs(closed - nt->ft(u, opt.agreement_tol)));
            }
            out.max_mismatch = worst;
            if (worst > opt.mismatch_tol) {
                std::ostringstream os;
                os << "closed-form and numeric transforms of kappa^2 differ by " << worst;
                throw Error(ErrorCode::TransformMismatch, os.str());
            }
        } else {
            out.warnings.push_back("closed form not cross-checked: kappa^2 tail not resolved numerically");
        }
    }

    SpectralDensity::Eval eval;
    if (k.structure_factor) {
        eval = *k.structure_factor;
    } else if (k.kappa_sq_ft) {
        eval = [ft = *k.kappa_sq_ft, lam = k.intensity](std::span<const double> u) { return 1.0 - lam * ft(u); };
    } else {
        if (nt->mode() == NumericTransform::Mode::Box)
            throw Error(ErrorCode::ValidationError,
                        "a non-isotropic, non-tensor kernel needs a closed-form transform for classification");
        double offset = 1.0 - k.intensity * nt->mass();
        if (std::abs(offset) <= opt.hyperuniform_tol) offset = 0.0;
        eval = [nt, offset](std::span<const double> u) { return nt->structure(u, offset); };
    }
    std::vector<double> zero(d, 0.0);
    out.s_at_zero = eval(zero);
    out.hyperuniform = std::abs(out.s_at_zero) <= opt.hyperuniform_tol;
    if (out.hyperuniform) out.s_at_zero = std::max(0.0, out.s_at_zero);
    else out.warnings.push_back("NotHyperuniformWarning: s(0) = " + std::to_string(out.s_at_zero));

    DensityFlags flags;
    flags.isotropic = k.isotropic || d == 1;
    flags.simple = true;
    SpectralDensity s(Domain::euclidean(d), eval, flags, std::vector<ZeroAnnotation>{},
                      {}, "structure factor of " + (k.name.empty() ? std::string("kernel") : k.name));
    if (out.hyperuniform) {
        const auto q = finite_pole_order(s, zero);
        if (q) {
            s = s.with_zeros({{zero, *q}});
        } else {
            flags.simple = false;
            s = s.with_flags(flags);
            out.warnings.push_back("zero at 0 has no finite order up to 10; simple flag cleared");
        }
    }
    out.s = std::move(s);
    return out;
}

DppOrderReport dpp_rigidity_order(const DppKernel& k, int k_cap, const ClassifierOptions& opt,
                                  const StructureFactorOptions& sf) {
    if (k_cap < 0) throw Error(ErrorCode::ValidationError, "k_cap must be >= 0");
    DppOrderReport rep{structure_factor_from_kernel(k, sf), {}, -1, true};
    rep.orders = classify_orders(rep.factor.s, k_cap, opt);
    for (const auto& o : rep.orders) {
        if (o.verdict == Rigidity::KRigid) {
            rep.max_rigid_order = o.order;
            continue;
        }
        if (o.verdict != Rigidity::NotKRigid) rep.determined = false;
        break;
    }
    return rep;
}

// ---------------------------------------------------------------------------

namespace kernels {

DppKernel ginibre() {
    DppKernel k;
    k.d = 2;
    k.name = "ginibre";
    k.isotropic = true;
    k.intensity = 1.0 / pi;  // K(0, 0)
    k.kappa = [](std::span<const double> x) { return std::exp(-0.5 * sqnorm(x)); };
    k.kappa_sq_ft = [](std::span<const double> u) { return pi * std::exp(-0.25 * sqnorm(u)); };
    k.structure_factor = [](std::span<const double> u) { return -std::expm1(-0.25 * sqnorm(u)); };
    return k;
}

DppKernel sine() {
    DppKernel k;
    k.d = 1;
    k.name = "sine";
    k.isotropic = true;
    k.kappa = [](std::span<const double> x) { return std::abs(sinc(x[0])); };
    k.factors = {[](double x) { return std::abs(sinc(x)); }};
    k.kappa_sq_ft = [](std::span<const double> u) { return std::max(0.0, 1.0 - std::abs(u[0]) / (2.0 * pi)); };
    k.structure_factor = [](std::span<const double> u) { return std::min(1.0, std::abs(u[0]) / (2.0 * pi)); };
    return k;
}

DppKernel tensor_sinc() {
    DppKernel k;
    k.d = 2;
    k.name = "tensor_sinc";
    k.kappa = [](std::span<const double> x) { return std::abs(sinc(x[0]) * sinc(x[1])); };
    k.factors = {[](double x) { return std::abs(sinc(x)); }, [](double x) { return std::abs(sinc(x)); }};
    k.kappa_sq_ft = [](std::span<const double> u) {
        return std::max(0.0, 1.0 - std::abs(u[0]) / (2.0 * pi)) * std::max(0.0, 1.0 - std::abs(u[1]) / (2.0 * pi));
    };
    k.structure_factor = [](std::span<const double> u) {
        const double a = std::min(1.0, std::abs(u[0]) / (2.0 * pi));
        const double b = std::min(1.0, std::abs(u[1]) / (2.0 * pi));
        return a + b - a * b;
    };
    return k;
}

DppKernel gaussian(int d) {
    if (d < 1 || d > 3) throw Error(ErrorCode::ValidationError, "gaussian kernel supports d in 1..3");
    DppKernel k;
    k.d = d;
    k.name = "gaussian";
    k.isotropic = true;
    k.kappa = [](std::span<const double> x) { return std::exp(-0.5 * pi * sqnorm(x)); };
    k.kappa_sq_ft = [](std::span<const double> u) { return std::exp(-sqnorm(u) / (4.0 * pi)); };
    k.structure_factor = [](std::span<const double> u) { return -std::expm1(-sqnorm(u) / (4.0 * pi)); };
    return k;
}

DppKernel custom(int d, const std::string& kappa_expression, bool isotropic) {
    auto e = std::make_shared<Expression>(Expression::parse(kappa_expression, d));
    DppKernel k;
    k.d = d;
    k.name = "custom";
    k.isotropic = isotropic;
    k.kappa = [e](std::span<const double> x) { return (*e)(x); };
    return k;
}

std::vector<std::string> names() { return {"ginibre", "sine", "tensor_sinc", "gaussian"}; }

DppKernel by_name(const std::string& name) {
    if (name == "ginibre") return ginibre();
    if (name == "sine") return sine();
    if (name == "tensor_sinc") return tensor_sinc();
    if (name == "gaussian") return gaussian(3);
    throw Error(ErrorCode::ValidationError, "unknown kernel '" + name + "'");
}

}  // namespace kernels

}  // namespace rigidity
