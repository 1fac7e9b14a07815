#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rigidity/covariance.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/expression.hpp"
#include "rigidity/quadrature.hpp"
#include "rigidity/spectral_density.hpp"

using namespace rigidity;
constexpr double pi = std::numbers::pi;

TEST_CASE("domain wrap and validation") {
    const auto t = Domain::torus(1);
    CHECK(t.wrap(pi) == doctest::Approx(-pi));
    CHECK(t.wrap(-pi) == -pi);
    CHECK(t.wrap(3 * pi + 0.25) == doctest::Approx(-pi + 0.25));
    CHECK_THROWS_AS(Domain::euclidean(0), Error);
}

TEST_CASE("expression grammar") {
    auto e = Expression::parse("2*cos(u1) - u2^2 + r", 2);
    std::vector<double> u{0.5, 2.0};
    CHECK(e(u) == doctest::Approx(2 * std::cos(0.5) - 4.0 + std::hypot(0.5, 2.0)));
    CHECK(Expression::parse("-2^2", 1)(u) == doctest::Approx(-4.0));
    CHECK(Expression::parse("2^3^2", 1)(u) == doctest::Approx(512.0));
    CHECK(Expression::parse("ifelse(u1 < 1, 3, 4)", 1)(u) == 3.0);
    CHECK_THROWS_AS(Expression::parse("u3", 2), Error);
    CHECK_THROWS_AS(Expression::parse("cos(", 1), Error);
}

TEST_CASE("gauss-kronrod integrates smooth and endpoint-singular functions") {
    auto r = quad::integrate([](double x) { return std::exp(x); }, 0.0, 1.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    auto s = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
    CHECK(s.value == doctest::Approx(2.0).epsilon(1e-9));
    auto& gl = quad::gauss_legendre(20);
    double acc = 0;
    for (int i = 0; i < 20; ++i) acc += gl.weights[i] * std::pow(gl.nodes[i], 38);
    CHECK(acc == doctest::Approx(2.0 / 39.0).epsilon(1e-14));
}

TEST_CASE("builtin densities satisfy their declared invariants") {
    for (const auto& s : {builtin::white_noise(2), builtin::poisson(3), builtin::power_law(2, 3.0),
                          builtin::ginibre(), builtin::gaf_scaling(0.5), builtin::ma1_unit_root(),
                          builtin::ar1(0.5), builtin::discrete_example(), builtin::anisotropic_line(),
                          builtin::quartic_axis(), builtin::line_zero_counterexample()}) {
        const auto rep = check_invariants(s);
        INFO(s.description());
        CHECK(rep.ok());
    }
}

TEST_CASE("invariant check catches wrong flags") {
    SpectralDensity odd(Domain::euclidean(1), [](std::span<const double> u) { return 1.0 + 0.5 * std::sin(u[0]); });
    CHECK_FALSE(check_invariants(odd).even);
    auto aniso = builtin::anisotropic_line().with_flags({.isotropic = true});
    CHECK_FALSE(check_invariants(aniso).isotropic);
    SpectralDensity neg(Domain::torus(1), [](std::span<const double> u) { return std::cos(u[0]); });
    CHECK_FALSE(check_invariants(neg).nonnegative);
    SpectralDensity notsep(Domain::euclidean(2),
                           [](std::span<const double> u) { return 1.0 + u[0] * u[0] * u[1] * u[1]; },
                           {.separable = true});
    CHECK_FALSE(check_invariants(notsep).separable);
}

TEST_CASE("temperedness ladder") {
    CHECK(validate_temperedness(builtin::poisson(2)).verdict == LadderVerdict::Convergent);
    CHECK(validate_temperedness(builtin::power_law(2, 2.0)).verdict == LadderVerdict::Convergent);
    SpectralDensity expo(Domain::euclidean(2), [](std::span<const double> u) { return std::exp(norm2(u)); });
    CHECK(validate_temperedness(expo).verdict == LadderVerdict::Divergent);
    // |u|^6 against (1+|u|)^-6 in d = 2: shells grow like rho^2
    CHECK(validate_temperedness(builtin::power_law(2, 6.0)).verdict == LadderVerdict::Divergent);
}

TEST_CASE("density_from_covariance examples") {
    CovarianceSequence white(1, 0);
    white.set({0}, 1.0);
    auto s = density_from_covariance(white);
    CHECK(s({0.3}) == doctest::Approx(1.0 / (2 * pi)));

    CovarianceSequence diff(1, 1);
    diff.set({0}, 2.0);
    diff.set({1}, -1.0);
    auto s2 = density_from_covariance(diff);
    for (double u : {-3.0, -1.0, 0.0, 0.7, 2.5})
        CHECK(s2({u}) == doctest::Approx((2 - 2 * std::cos(u)) / (2 * pi)).epsilon(1e-13));

    // AR(1) truncated at 64 against the closed form
    const double phi = 0.5;
    CovarianceSequence ar(1, 64);
    for (int m = 0; m <= 64; ++m) ar.set({m}, std::pow(phi, m) / (1 - phi * phi));
    ar.finite_support = false;
    ar.tail_bound = 2 * std::pow(phi, 65) / ((1 - phi * phi) * (1 - phi));
    auto s3 = density_from_covariance(ar);
    for (double u : {-3.0, -0.5, 0.0, 1.0, 2.0}) {
        const double exact = 1.0 / (2 * pi * (1 - 2 * phi * std::cos(u) + phi * phi));
        CHECK(std::abs(s3({u}) - exact) <= 1e-6 * exact);
    }

    CovarianceSequence infinite(1, 3);
    infinite.set({0}, 1.0);
    infinite.finite_support = false;
    CHECK_THROWS_AS(density_from_covariance(infinite), Error);

    CovarianceSequence bad(1, 1);
    bad.set({0}, 1.0);
    bad.set({1}, 0.9);
    try {
        density_from_covariance(bad);
        FAIL("expected NegativeDensity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeDensity);
    }
}

TEST_CASE("covariance_from_density examples") {
    auto c = covariance_from_density(builtin::ma1_unit_root(), 4);
    CHECK(c({0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c({1}) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(c({2})) < 1e-12);

    auto w = covariance_from_density(builtin::white_noise(1), 5);
    CHECK(w({0}) == doctest::Approx(1.0).epsilon(1e-12));
    for (int m = 1; m <= 5; ++m) CHECK(std::abs(w({m})) < 1e-12);

    // mpmath at 30 digits, two refinement levels agreeing
    const double oracle[] = {1.0, -0.82566177169623067387, 0.53010796751233968623, -0.26224490116501368917,
                             0.15275777466485254767, -0.099318699903529384192};
    auto e = covariance_from_density(builtin::discrete_example(), 5);
    for (int m = 0; m <= 5; ++m) CHECK(std::abs(e({m}) - oracle[m]) < 1e-9);

    auto w2 = covariance_from_density(builtin::white_noise(2), 2);
    CHECK(w2({0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(w2({1, -1})) < 1e-12);

    SpectralDensity sing(Domain::torus(1), [](std::span<const double> u) { return 1.0 / std::abs(u[0] - 0.3); });
    CHECK_THROWS_AS(covariance_from_density(sing, 2), Error);

    auto with_atom = builtin::white_noise(1).with_atoms({{{0.5}, 0.25}, {{-0.5}, 0.25}});
    auto ca = covariance_from_density(with_atom, 2);
    CHECK(ca({1}) == doctest::Approx(0.5 * std::cos(0.5)).epsilon(1e-10));
}

TEST_CASE("covariance round trip and variance identity (property)") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 2;
        const int support = d == 1 ? 1 + trial % 32 : 1 + trial % 4;
        // C = a * a~ : positive definite by construction
        const int L = support / 2 + 1;
        std::vector<double> a(static_cast<std::size_t>(std::pow(L, d)));
        for (auto& x : a) x = g(rng);
        CovarianceSequence c(d, L - 1);
        std::vector<int> ia(d), ib(d), diff(d);
        auto dec = [&](std::size_t i, std::vector<int>& m) {
            for (int k = 0; k < d; ++k) {
                m[k] = static_cast<int>(i % L);
                i /= L;
            }
        };
        std::vector<double> acc(c.data().size(), 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a.size(); ++j) {
                dec(i, ia);
                dec(j, ib);
                for (int k = 0; k < d; ++k) diff[k] = ia[k] - ib[k];
                acc[c.index(diff)] += a[i] * a[j];
            }
        std::vector<int> m(d);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            std::size_t r = i;
            for (int k = 0; k < d; ++k) {
                m[k] = static_cast<int>(r % (2 * L - 1)) - (L - 1);
                r /= (2 * L - 1);
            }
            c.set(m, acc[i]);
        }
        CHECK(check_covariance(c).ok());
        auto s = density_from_covariance(c);
        CHECK(check_invariants(s).ok());
        auto back = covariance_from_density(s, c.radius());
        for (std::size_t i = 0; i < acc.size(); ++i) CHECK(std::abs(back.data()[i] - c.data()[i]) < 1e-9);

        // variance of a random finite combination in 1D: both sides
        if (d == 1) {
            std::vector<double> f(4);
            for (auto& x : f) x = g(rng);
            double quadform = 0.0;
            for (int p = 0; p < 4; ++p)
                for (int q = 0; q < 4; ++q) quadform += f[p] * f[q] * c({p - q});
            auto r = quad::integrate(
                [&](double u) {
                    double re = 0, im = 0;
                    for (int p = 0; p < 4; ++p) {
                        re += f[p] * std::cos(p * u);
                        im -= f[p] * std::sin(p * u);
                    }
                    return (re * re + im * im) * s({u});
                },
                -pi, pi);
            CHECK(r.value == doctest::Approx(quadform).epsilon(1e-6));
        }
    }
}

TEST_CASE("covariance CSV round trip") {
    CovarianceSequence c(2, 1);
    c.set({0, 0}, 1.0);
    c.set({1, 0}, -0.25);
    c.set({1, -1}, 0.125);
    std::stringstream ss;
    write_covariance_csv(ss, c);
    auto back = read_covariance_csv(ss);
    CHECK(back.dim() == 2);
    CHECK(back({-1, 1}) == 0.125);
    CHECK(back({-1, 0}) == -0.25);
    std::stringstream bad("m1,value\n1,0.5\n-1,0.4\n");
    CHECK_THROWS_AS(read_covariance_csv(bad), Error);
    std::stringstream hdr("x,value\n");
    CHECK_THROWS_AS(read_covariance_csv(hdr), Error);
}
