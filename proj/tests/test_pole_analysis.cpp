#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rigidity/errors.hpp"
#include "rigidity/pole_analysis.hpp"
#include "rigidity/quadrature.hpp"

using namespace rigidity;

TEST_CASE("multi-index order and enumeration") {
    const MultiIndex a{1, 0}, b{1, 2};
    CHECK(a.precedes(b));
    CHECK_FALSE(b.precedes(a));
    CHECK(b.order() == 3);
    CHECK(b.str() == "(1,2)");
    CHECK(MultiIndex::of_order(2, 2).size() == 3);
    CHECK(MultiIndex::up_to(3, 2).size() == 10);
    CHECK_THROWS_AS(MultiIndex({-1, 0}), Error);
}

TEST_CASE("radial ladder on power laws follows power counting") {
    int undetermined = 0;
    for (int d = 1; d <= 3; ++d)
        for (int alpha = 0; alpha <= 6; ++alpha)
            for (int k = 0; k <= 2; ++k) {
                std::vector<int> kv(d, 0);
                kv[0] = k;
                const auto v = radial_pole_test(builtin::power_law(d, alpha), MultiIndex(kv));
                INFO("d=" << d << " alpha=" << alpha << " k=" << k << " ratio " << v.diagnostics.fitted_ratio);
                if (v.verdict == PoleOutcome::Undetermined) {
                    ++undetermined;
                    continue;
                }
                CHECK((v.verdict == PoleOutcome::Pole) == (alpha >= 2 * k + d));
            }
    CHECK(undetermined == 0);
}

TEST_CASE("radial examples") {
    CHECK(radial_pole_test(builtin::power_law(2, 2), MultiIndex{0, 0}).verdict == PoleOutcome::Pole);
    CHECK(radial_pole_test(builtin::power_law(3, 2), MultiIndex{0, 0, 0}).verdict == PoleOutcome::NoPole);
    CHECK(radial_pole_test(builtin::gaf_scaling(0.3), MultiIndex{1, 0}).verdict == PoleOutcome::Pole);
    CHECK(radial_pole_test(builtin::power_law(2, 2), MultiIndex{1, 0}).verdict == PoleOutcome::NoPole);
    const auto v = radial_pole_test(builtin::power_law(3, 5), MultiIndex{0, 0, 0});
    CHECK(v.diagnostics.fitted_exponent == doctest::Approx(5.0).epsilon(1e-3));
    CHECK(v.diagnostics.ladder.size() == 40);
    CHECK_THROWS_AS(radial_pole_test(builtin::poisson(4), MultiIndex{0, 0, 0, 0}), Error);
    SpectralDensity bad(Domain::euclidean(1), [](std::span<const double>) { return -1.0; });
    CHECK_THROWS_AS(radial_pole_test(bad, MultiIndex{0}), Error);
}

TEST_CASE("radial ladder is deterministic") {
    const auto a = radial_pole_test(builtin::ginibre(), MultiIndex{1, 0});
    const auto b = radial_pole_test(builtin::ginibre(), MultiIndex{1, 0});
    CHECK(a.diagnostics.ladder == b.diagnostics.ladder);
    CHECK(a.diagnostics.fitted_ratio == b.diagnostics.fitted_ratio);
}

TEST_CASE("Gram test on power laws") {
    for (int d : {1, 2})
        for (int alpha : {0, 2, 4})
            for (int k = 0; k <= 1; ++k) {
                std::vector<int> kv(d, 0);
                kv[0] = k;
                const auto v = gram_pole_test(builtin::power_law(d, alpha), MultiIndex(kv));
                INFO("d=" << d << " alpha=" << alpha << " k=" << k << " " << v.diagnostics.note);
                REQUIRE(v.verdict != PoleOutcome::Undetermined);
                CHECK((v.verdict == PoleOutcome::Pole) == (alpha >= 2 * k + d));
                if (v.verdict == PoleOutcome::NoPole) {
                    REQUIRE(v.diagnostics.witness_polynomial);
                    CHECK(v.diagnostics.witness_polynomial->at(MultiIndex(kv)) == doctest::Approx(1.0));
                }
            }
}

TEST_CASE("anisotropic line zero: order is not a scalar") {
    const auto s = builtin::anisotropic_line();
    const auto vs = gram_pole_tests(s, {MultiIndex{1, 0}, MultiIndex{0, 0}});
    REQUIRE(vs[0].verdict == PoleOutcome::NoPole);
    const auto& w = *vs[0].diagnostics.witness_polynomial;
    // normalized a_(1,0) = 1: the witness is u1 - u2
    double off = 0.0;
    for (const auto& [m, a] : w) {
        if (m == MultiIndex{1, 0}) CHECK(a == doctest::Approx(1.0));
        else if (m == MultiIndex{0, 1}) CHECK(a == doctest::Approx(-1.0).epsilon(1e-6));
        else off = std::max(off, std::abs(a));
    }
    CHECK(off < 1e-6);
    CHECK(vs[1].verdict == PoleOutcome::Pole);

    // independent check: int_{[-e,e]^2} 1 / ((u1-u2)^2 + delta) grows like delta^{-1/2}
    auto box = [](double delta) {
        quad::Options o;
        o.rel_tol = 1e-10;
        return quad::integrate([&](double x) {
            return quad::integrate([&](double y) { return 1.0 / ((x - y) * (x - y) + delta); }, -0.5, 0.5, o).value;
        }, -0.5, 0.5, o).value;
    };
    const double r1 = box(1e-6) / box(1e-4), r2 = box(1e-8) / box(1e-6);
    CHECK(r1 > 9.5);
    CHECK(r2 > 9.5);
    CHECK(std::abs(r2 - 10.0) < std::abs(r1 - 10.0));
}

TEST_CASE("quartic axis zero: poles of order (1, m)") {
    GramOptions go;
    go.degree_cap = 4;
    const std::vector<MultiIndex> ks{{1, 0}, {1, 1}, {1, 2}, {0, 0}, {0, 1}, {2, 0}};
    const auto vs = gram_pole_tests(builtin::quartic_axis(), ks, go);
    for (int i = 0; i < 5; ++i) CHECK(vs[i].verdict == PoleOutcome::Pole);
    CHECK(vs[5].verdict == PoleOutcome::NoPole);
    CHECK(check_downward_closure(vs).empty());
}

TEST_CASE("Gram input validation") {
    GramOptions go;
    go.degree_cap = 9;
    CHECK_THROWS_AS(gram_pole_test(builtin::power_law(2, 2), MultiIndex{0, 0}, go), Error);
    go.degree_cap = 1;
    CHECK_THROWS_AS(gram_pole_test(builtin::power_law(2, 2), MultiIndex{2, 0}, go), Error);
}

TEST_CASE("energy ladders are monotone in the density") {
    const auto s = builtin::power_law(2, 2);
    SpectralDensity bigger(Domain::euclidean(2), [](std::span<const double> u) {
        const double r2 = u[0] * u[0] + u[1] * u[1];
        return r2 + r2 * r2 + 0.1 * u[0] * u[0];
    });
    const std::map<MultiIndex, double> q{{MultiIndex{1, 0}, 1.0}, {MultiIndex{0, 1}, 0.5}};
    const std::vector<double> deltas{1e-2, 1e-4, 1e-6, 1e-8};
    const auto a = polynomial_energy_ladder(s, q, 0.5, deltas);
    const auto b = polynomial_energy_ladder(bigger, q, 0.5, deltas);
    for (std::size_t i = 0; i < deltas.size(); ++i) CHECK(b[i] <= a[i]);
    // int_{B(0,1/2)} (u1 + u2/2)^2 / |u|^2 = (pi/4)(1 + 1/4)/2
    CHECK(a.back() == doctest::Approx(std::numbers::pi / 4 * 0.625).epsilon(1e-5));
}

TEST_CASE("finite pole orders") {
    for (int d : {1, 3}) {
        SpectralDensity s(Domain::euclidean(d), [](std::span<const double> u) {
            double a = (u[0] - 0.3) * (u[0] - 0.3);
            for (std::size_t i = 1; i < u.size(); ++i) a += u[i] * u[i];
            return a;
        });
        Point u0(d, 0.0);
        u0[0] = 0.3;
        const auto q = finite_pole_order(s, u0);
        REQUIRE(q);
        CHECK(*q == (d == 1 ? 1 : 0));
    }
    SpectralDensity flat(Domain::euclidean(1), [](std::span<const double> u) {
        const double x = std::abs(u[0]);
        return x == 0 ? 0.0 : std::exp(-1 / x);
    });
    CHECK_FALSE(finite_pole_order(flat, {0.0}).has_value());
}

TEST_CASE("simple densities") {
    const auto g = classify_simple(builtin::ginibre());
    CHECK(g.is_simple);
    REQUIRE(g.poles.size() == 1);
    CHECK(g.poles[0].second == 1);
    const auto d = classify_simple(builtin::discrete_example());
    CHECK(d.is_simple);
    CHECK(d.poles.size() == 2);
    SpectralDensity e(Domain::torus(2), [](std::span<const double> u) { return std::exp(-norm2(u)); }, {},
                      std::vector<ZeroAnnotation>{});
    const auto r = classify_simple(e);
    CHECK(r.is_simple);
    CHECK(r.poles.empty());
    CHECK_THROWS_AS(classify_simple(builtin::anisotropic_line()), Error);
}

TEST_CASE("classifier") {
    const auto gin = classify_orders(builtin::ginibre(), 1);
    CHECK(gin[0].verdict == Rigidity::KRigid);
    CHECK(gin[1].verdict == Rigidity::NotKRigid);
    const auto gaf = classify_orders(builtin::gaf_scaling(), 2);
    CHECK(gaf[0].verdict == Rigidity::KRigid);
    CHECK(gaf[1].verdict == Rigidity::KRigid);
    CHECK(gaf[2].verdict == Rigidity::NotKRigid);
    for (const auto& o : classify_orders(builtin::poisson(2), 1)) CHECK(o.verdict == Rigidity::NotKRigid);
    const auto c = rigidity_classifier(builtin::line_zero_counterexample(), MultiIndex{0, 0});
    CHECK(c.verdict == Rigidity::SufficientOnly);
    std::vector<PoleVerdict> all;
    for (const auto& o : gaf)
        for (const auto& comp : o.components) all.insert(all.end(), comp.tests.begin(), comp.tests.end());
    CHECK(check_downward_closure(all).empty());
}

TEST_CASE("combine_verdicts rules") {
    PoleVerdict nopole{MultiIndex{0, 0}, PoleOutcome::NoPole, PoleMethod::GramNullspace, 0.5, {}};
    SpectralDensity plain(Domain::euclidean(2), [](std::span<const double>) { return 1.0; });
    CHECK(combine_verdicts(plain, MultiIndex{0, 0}, {nopole}).verdict == Rigidity::SufficientOnly);
    CHECK(combine_verdicts(plain.with_flags({.isotropic = false, .separable = false, .simple = true}), MultiIndex{0, 0},
                           {nopole})
              .verdict == Rigidity::NotKRigid);
    PoleVerdict pole = nopole;
    pole.verdict = PoleOutcome::Pole;
    CHECK(combine_verdicts(plain, MultiIndex{0, 0}, {nopole, pole}).verdict == Rigidity::KRigid);
    PoleVerdict und = nopole;
    und.verdict = PoleOutcome::Undetermined;
    CHECK(combine_verdicts(plain, MultiIndex{0, 0}, {und}).verdict == Rigidity::Undetermined);
}
