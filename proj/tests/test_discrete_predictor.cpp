#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rigidity/covariance.hpp"
#include "rigidity/discrete_predictor.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/quadrature.hpp"
#include "schur_oracle.hpp"

using namespace rigidity;
namespace {
constexpr double pi = std::numbers::pi;

CovarianceSequence ar1_cov(double phi, int radius) {
    std::vector<double> c(radius + 1);
    for (int i = 0; i <= radius; ++i) c[i] = std::pow(phi, i);
    auto cov = CovarianceSequence::from_1d(c);
    cov.finite_support = false;
    cov.tail_bound = 2.0 * std::pow(phi, radius + 1) / (1.0 - phi);
    return cov;
}

CovarianceSequence ma1_cov() {
    CovarianceSequence c(1, 1);
    c.set({0}, 1.0);
    c.set({1}, -0.5);
    return c;
}

// Autocorrelation of a random filter plus a nugget: PSD by construction.
CovarianceSequence random_cov(std::mt19937_64& rng, int d, int support) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int len = support / 2;
    auto taps = oracle::box(d, len);
    std::vector<double> a(taps.size());
    for (auto& x : a) x = U(rng);
    CovarianceSequence c(d, 2 * len);
    for (const auto& m : oracle::box(d, 2 * len)) {
        double v = 0.0;
        for (std::size_t i = 0; i < taps.size(); ++i) {
            std::vector<int> t(d);
            bool ok = true;
            for (int j = 0; j < d; ++j) {
                t[j] = taps[i][j] + m[j];
                ok = ok && std::abs(t[j]) <= len;
            }
            if (!ok) continue;
            std::size_t idx = 0, stride = 1;
            for (int j = 0; j < d; ++j) {
                idx += (t[j] + len) * stride;
                stride *= 2 * len + 1;
            }
            v += a[i] * a[idx];
        }
        c.set(m, v);
    }
    std::vector<int> zero(d, 0);
    c.set(zero, c(zero) + 0.05);
    return c;
}

oracle::Cov as_fn(const CovarianceSequence& c) {
    return [&c](const std::vector<int>& m) { return c(m); };
}
}  // namespace

TEST_CASE("white noise: predictor is zero and the residual is the variance") {
    CovarianceSequence c(1, 0);
    c.set({0}, 1.0);
    for (int N : {1, 5, 40}) {
        const auto r = best_linear_predictor(c, {0, 1}, TargetFunctional::mass(), N);
        CHECK(r.residual_variance == doctest::Approx(1.0).epsilon(1e-14));
        for (double h : r.coefficients) CHECK(std::abs(h) < 1e-14);
        CHECK(r.annulus.size() == static_cast<std::size_t>(2 * N));
    }
}

TEST_CASE("MA(1) unit root: residual matches the dense Schur complement and decreases to zero") {
    const auto c = ma1_cov();
    const WindowSpec w{0, 1};
    double prev = 2.0;
    std::vector<int> Ns{2, 4, 8, 16, 32, 64, 128, 256};
    for (int N : Ns) {
        const auto r = best_linear_predictor(c, w, TargetFunctional::mass(), N);
        const double ref = oracle::schur_variance(as_fn(c), 1, 0, N, [](const std::vector<int>&) { return 1.0; });
        CHECK(std::abs(r.residual_variance - ref) < 1e-8);
        CHECK(r.residual_variance <= prev + 1e-12);
        CHECK(r.system_residual < 1e-10);
        prev = r.residual_variance;
    }
    // X_0 = lim of linear statistics outside 0: residual is 1/(N+1) here
    CHECK(prev == doctest::Approx(1.0 / 257.0).epsilon(1e-10));
    const auto curve = prediction_curve(c, w, TargetFunctional::mass(), Ns);
    const auto fit = rigidity_from_curve(curve);
    CHECK(fit.flag == RigidFlag::Rigid);
    CHECK(fit.limit < 1e-4);
}

TEST_CASE("AR(1): residual limit is the interpolation error") {
    for (double phi : {0.3, 0.5, 0.8}) {
        const auto c = ar1_cov(phi, 1024);
        const auto r = best_linear_predictor(c, {0, 1}, TargetFunctional::mass(), 512);
        const double lim = interpolation_error_limit(builtin::ar1(phi));
        CHECK(lim == doctest::Approx((1 - phi * phi) / (1 + phi * phi)).epsilon(1e-10));
        CHECK(r.residual_variance == doctest::Approx(lim).epsilon(1e-4));
    }
    const auto c = ar1_cov(0.5, 1024);
    const auto curve = prediction_curve(c, {0, 1}, TargetFunctional::mass(), geometric_truncations(2, 512));
    REQUIRE(curve.size() == 9);
    const auto fit = rigidity_from_curve(curve);
    CHECK(fit.flag == RigidFlag::NotRigid);
    CHECK(fit.limit == doctest::Approx(0.6).epsilon(1e-4));
    // the curve is flat to rounding, so the interval can collapse onto 0.6
    CHECK(fit.ci_low <= 0.6 + 1e-12);
    CHECK(fit.ci_high >= 0.6 - 1e-12);
}

TEST_CASE("curve fit edge cases") {
    std::vector<CurvePoint> flat;
    for (int N : geometric_truncations(1, 128)) flat.push_back({N, 0.3});
    CHECK(rigidity_from_curve(flat).flag == RigidFlag::NotRigid);
    CHECK(rigidity_from_curve(flat).limit == doctest::Approx(0.3));
    flat.resize(5);
    CHECK_THROWS_AS(rigidity_from_curve(flat), Error);
    CHECK(geometric_truncations(3, 48) == std::vector<int>{3, 6, 12, 24, 48});
}

TEST_CASE("input validation") {
    const auto c = ma1_cov();
    CHECK_THROWS_AS(best_linear_predictor(c, {2, 1}, TargetFunctional::mass(), 2), Error);
    CHECK_THROWS_AS(best_linear_predictor(c, {0, 2}, TargetFunctional::mass(), 3), Error);
    CHECK_THROWS_AS(best_linear_predictor(ar1_cov(0.5, 8), {0, 1}, TargetFunctional::mass(), 5), Error);
    CHECK_THROWS_AS(best_linear_predictor(c, {0, 1}, TargetFunctional::custom({{{1}, 1.0}}), 3), Error);
}

TEST_CASE("property: randomized covariances agree with the Schur oracle") {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 12; ++trial) {
        const int d = 1 + trial % 2;
        const auto c = random_cov(rng, d, 2 + trial % 7);
        const int m = trial % 3;
        const int N = d == 1 ? m + 1 + 7 * (trial % 5) : m + 2;
        std::vector<TargetFunctional> targets{TargetFunctional::mass()};
        targets.push_back(TargetFunctional::moment(MultiIndex{std::vector<int>(d, 1)}));
        std::vector<int> k2(d, 0);
        k2[0] = 2;
        targets.push_back(TargetFunctional::moment(MultiIndex{k2}));
        for (const auto& t : targets) {
            const WindowSpec w{m, d};
            const auto r = best_linear_predictor(c, w, t, N);
            const double ref = oracle::schur_variance(as_fn(c), d, m, N, [&](const std::vector<int>& n) { return t(n, w); });
            INFO("trial " << trial << " target " << t.str());
            CHECK(std::abs(r.residual_variance - ref) < 1e-8);
            CHECK(r.residual_variance <= r.target_variance + 1e-12);
            CHECK(r.residual_variance >= 0.0);
            if (N > m + 1) {
                const auto smaller = best_linear_predictor(c, w, t, N - 1);
                CHECK(r.residual_variance <= smaller.residual_variance + 1e-12);
            }
        }
    }
}

TEST_CASE("residual equals the spectral integral of |gamma^ - h^|^2 s") {
    const auto s = builtin::ar1(0.5);
    const auto c = covariance_from_density(s, 40);
    const WindowSpec w{1, 1};
    const auto r = best_linear_predictor(c, w, TargetFunctional::moment(MultiIndex{{1}}), 20);
    const auto h = r.coefficient_map();
    auto integrand = [&](double u) {
        std::complex<double> f = 0.0;
        for (int n = -1; n <= 1; ++n) f += static_cast<double>(n) * std::polar(1.0, n * u);
        for (const auto& [n, hn] : h) f -= hn * std::polar(1.0, n[0] * u);
        return std::norm(f) * s({u});
    };
    quad::Options qo;
    qo.rel_tol = 1e-12;
    const double spectral = quad::integrate(integrand, -pi, pi, qo).value;
    CHECK(r.residual_variance == doctest::Approx(spectral).epsilon(1e-6));
}

TEST_CASE("singular Gram matrices are flagged and still solved") {
    CovarianceSequence c(1, 0);
    c.set({0}, 0.0);
    const auto r = best_linear_predictor(c, {0, 1}, TargetFunctional::mass(), 3);
    CHECK(r.singular_gram);
    CHECK(r.residual_variance == 0.0);
    // period-2 process: X_n = (-1)^n Z, perfectly predictable
    CovarianceSequence alt(1, 8);
    for (int i = 0; i <= 8; ++i) alt.set({i}, i % 2 ? -1.0 : 1.0);
    const auto p = best_linear_predictor(alt, {0, 1}, TargetFunctional::mass(), 4);
    CHECK(p.singular_gram);
    CHECK(p.jitter <= 1e-12);
    CHECK(p.residual_variance < 1e-8);
}

TEST_CASE("trigonometric polynomials") {
    TrigPolynomial p;
    p.coefficients[{-1}] = 1.0;
    p.coefficients[{0}] = -2.0 * std::cos(1.0);
    p.coefficients[{1}] = 1.0;
    std::vector<double> u{0.3};
    std::complex<double> direct = 0.0;
    for (const auto& [n, a] : p.coefficients) direct += a * std::exp(std::complex<double>(0, n[0] * 0.3));
    CHECK(std::abs(p(u) - direct) < 1e-12);
    CHECK(std::abs(p(u) - (2 * std::cos(0.3) - 2 * std::cos(1.0))) < 1e-12);
    CHECK(p.degree() == 1);
    CHECK(p.is_even());
    CHECK(std::abs(p.moment(MultiIndex{{1}})) < 1e-15);
    CHECK(p.moment(MultiIndex{{0}}).real() == doctest::Approx(2 - 2 * std::cos(1.0)));
}

TEST_CASE("linear maximal rigidity in d = 1") {
    const auto ex = builtin::discrete_example();
    const std::vector<TorusZero> z{{1.0, 1}, {-1.0, 1}};
    SUBCASE("two simple zeros, m = 1: not LMR with a degree-1 witness") {
        const auto r = lmr_test_1d(ex, z, 1);
        CHECK_FALSE(r.lmr);
        CHECK(r.total_multiplicity == 2);
        REQUIRE(r.witness);
        CHECK(r.witness->degree() == 1);
        for (double ratio : r.witness_ladder_ratios) CHECK(ratio < 0.95);
        std::vector<double> at{1.0};
        CHECK(std::abs((*r.witness)(at)) < 1e-12);
    }
    SUBCASE("m = 0 is LMR") { CHECK(lmr_test_1d(ex, z, 0).lmr); }
    SUBCASE("unit root MA(1)") {
        CHECK(lmr_test_1d(builtin::ma1_unit_root(), {{0.0, 1}}, 0).lmr);
        CHECK_FALSE(lmr_test_1d(builtin::ma1_unit_root(), {{0.0, 1}}, 1).lmr);
    }
    SUBCASE("positive density: constant witness") {
        const auto r = lmr_test_1d(builtin::white_noise(1), {}, 0);
        CHECK_FALSE(r.lmr);
        REQUIRE(r.witness);
        CHECK(r.witness->degree() == 0);
    }
    SUBCASE("annotation errors") {
        CHECK_THROWS_AS(lmr_test_1d(ex, {{1.0, 2}, {-1.0, 2}}, 2), Error);
        CHECK_THROWS_AS(lmr_test_1d(ex, {{1.0, 1}}, 2), Error);
    }
}

TEST_CASE("k-rigidity of the two-zero discrete density") {
    const auto ex = builtin::discrete_example();
    const std::vector<ZeroAnnotation> z{{{1.0}, 1}, {{-1.0}, 1}};
    const auto r1 = k_rigid_discrete_test(ex, z, 1, MultiIndex{{1}});
    CHECK(r1.rigid);
    CHECK(r1.determined);
    const auto r0 = k_rigid_discrete_test(ex, z, 1, MultiIndex{{0}});
    CHECK_FALSE(r0.rigid);
    REQUIRE(r0.witness);
    CHECK(r0.witness->degree() == 1);
    CHECK(r0.witness->is_even());
    CHECK(std::abs(r0.witness->moment(MultiIndex{{0}})) > 1e-3);
    bool finite = false;
    witness_ladder(ex, *r0.witness, {{1.0}, {-1.0}}, &finite);
    CHECK(finite);
    const auto wn = k_rigid_discrete_test(builtin::white_noise(1), {}, 0, MultiIndex{{0}});
    CHECK_FALSE(wn.rigid);
    REQUIRE(wn.witness);
    CHECK(wn.witness->degree() == 0);
}

TEST_CASE("discrete k-rigidity in d = 2 through the regularized Gram path") {
    // 4 - 2 cos u1 - 2 cos u2 ~ |u|^2: log-divergent 1/s, so constants are excluded
    SpectralDensity s(Domain::torus(2), [](std::span<const double> u) {
        const double a = std::sin(0.5 * u[0]), b = std::sin(0.5 * u[1]);
        return (a * a + b * b) / (4.0 * pi * pi);
    });
    const std::vector<ZeroAnnotation> z{{{0.0, 0.0}, 1}};
    const auto r0 = k_rigid_discrete_test(s, z, 1, MultiIndex{{0, 0}});
    CHECK(r0.determined);
    CHECK(r0.rigid);
    const auto r1 = k_rigid_discrete_test(s, z, 1, MultiIndex{{1, 0}});
    CHECK(r1.determined);
    CHECK_FALSE(r1.rigid);
    REQUIRE(r1.witness);
    CHECK(r1.witness->degree() <= 1);
    CHECK(std::abs(r1.witness->moment(MultiIndex{{1, 0}})) > 1e-3);
    const auto wn = k_rigid_discrete_test(builtin::white_noise(2), {}, 1, MultiIndex{{0, 0}});
    CHECK_FALSE(wn.rigid);
}

TEST_CASE("cross-module: predictor curves do not contradict the exact d = 1 verdicts") {
    const auto ex = builtin::discrete_example();
    const std::vector<ZeroAnnotation> z{{{1.0}, 1}, {{-1.0}, 1}};
    const auto cov = covariance_from_density(ex, 512);
    for (int k : {0, 1}) {
        const auto verdict = k_rigid_discrete_test(ex, z, 1, MultiIndex{{k}});
        const auto curve = prediction_curve(cov, {1, 1}, TargetFunctional::moment(MultiIndex{{k}}),
                                            geometric_truncations(2, 256));
        const auto fit = rigidity_from_curve(curve);
        INFO("k = " << k << " limit " << fit.limit << " se " << fit.stderr_);
        CHECK(fit.flag != (verdict.rigid ? RigidFlag::NotRigid : RigidFlag::Rigid));
    }
}
