#include "rigidity/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "rigidity/dpp.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/pole_analysis.hpp"

namespace rigidity::scenarios {

namespace {

constexpr double pi = std::numbers::pi;

std::string orders_string(const std::vector<OrderClassification>& orders) {
    std::string out;
    for (const auto& o : orders) {
        if (!out.empty()) out += ' ';
        out += std::to_string(o.order) + ':' + to_string(o.verdict);
    }
    return out;
}

io::Json orders_detail(const std::vector<OrderClassification>& orders) {
    io::Json j = io::Json::array();
    for (const auto& o : orders) j.push_back({{"order", o.order}, {"verdict", to_string(o.verdict)}, {"provenance", o.provenance}});
    return j;
}

Scenario classify_scenario(std::string name, std::vector<std::string> tags, std::function<SpectralDensity()> make,
                           int k_cap, std::string expected) {
    Scenario sc{std::move(name), std::move(tags), expected, {}};
    sc.run = [make, k_cap, expected] {
        const auto orders = classify_orders(make(), k_cap);
        Outcome o;
        o.observed = orders_string(orders);
        o.pass = o.observed == expected;
        o.detail = {{"orders", orders_detail(orders)}};
        return o;
    };
    return sc;
}

Scenario dpp_scenario(std::string name, std::function<DppKernel()> make, int k_cap, int expected_order) {
    Scenario sc{std::move(name), {"dpp"}, "max rigid order " + std::to_string(expected_order), {}};
    sc.run = [make, k_cap, expected_order] {
        const auto r = dpp_rigidity_order(make(), k_cap);
        Outcome o;
        o.observed = "max rigid order " + std::to_string(r.max_rigid_order);
        o.pass = r.determined && r.max_rigid_order == expected_order;
        o.detail = {{"orders", orders_detail(r.orders)},
                    {"s_at_zero", io::number(r.factor.s_at_zero)},
                    {"hyperuniform", r.factor.hyperuniform},
                    {"warnings", r.factor.warnings}};
        return o;
    };
    return sc;
}

std::vector<ZeroAnnotation> discrete_zeros() { return {{{1.0}, 1}, {{-1.0}, 1}}; }

}  // namespace

std::vector<Scenario> bundled() {
    std::vector<Scenario> out;
    out.push_back(classify_scenario("gaf_scaling", {"classify", "gaf"}, [] { return builtin::gaf_scaling(); }, 2,
                                    "0:KRigid 1:KRigid 2:NotKRigid"));
    out.push_back(classify_scenario("ginibre_density", {"classify", "ginibre"}, [] { return builtin::ginibre(); }, 1,
                                    "0:KRigid 1:NotKRigid"));
    out.push_back(classify_scenario("poisson", {"classify", "poisson"}, [] { return builtin::poisson(2); }, 1,
                                    "0:NotKRigid 1:NotKRigid"));

    out.push_back({"discrete_k1", {"discrete"}, "rigid", [] {
                       const auto r = k_rigid_discrete_test(builtin::discrete_example(), discrete_zeros(), 1, MultiIndex{{1}});
                       Outcome o;
                       o.observed = !r.determined ? "undetermined" : r.rigid ? "rigid" : "not rigid";
                       o.pass = r.determined && r.rigid;
                       o.detail = io::to_json(r);
                       return o;
                   }});
    out.push_back({"discrete_k0", {"discrete"}, "not rigid, even degree-1 witness", [] {
                       const auto r = k_rigid_discrete_test(builtin::discrete_example(), discrete_zeros(), 1, MultiIndex{{0}});
                       Outcome o;
                       if (!r.determined) {
                           o.observed = "undetermined";
                       } else if (r.rigid) {
                           o.observed = "rigid";
                       } else if (!r.witness) {
                           o.observed = "not rigid, no witness";
                       } else {
                           o.observed = std::string("not rigid, ") + (r.witness->is_even() ? "even" : "non-even") +
                                        " degree-" + std::to_string(r.witness->degree()) + " witness";
                       }
                       o.pass = o.observed == "not rigid, even degree-1 witness";
                       o.detail = io::to_json(r);
                       return o;
                   }});
    out.push_back({"discrete_lmr", {"discrete", "lmr"}, "not LMR for m = 1, LMR for m = 0", [] {
                       const auto s = builtin::discrete_example();
                       const std::vector<TorusZero> z{{1.0, 1}, {-1.0, 1}};
                       const auto r1 = lmr_test_1d(s, z, 1), r0 = lmr_test_1d(s, z, 0);
                       Outcome o;
                       o.observed = std::string(r1.lmr ? "LMR" : "not LMR") + " for m = 1, " +
                                    (r0.lmr ? "LMR" : "not LMR") + " for m = 0";
                       o.pass = !r1.lmr && r0.lmr;
                       o.detail = {{"m1", io::to_json(r1)}, {"m0", io::to_json(r0)}};
                       return o;
                   }});

    out.push_back({"anisotropic_line", {"anisotropy"}, "(0,0):Pole (1,0):NoPole witness u1-u2", [] {
                       const auto vs = gram_pole_tests(builtin::anisotropic_line(), {MultiIndex{0, 0}, MultiIndex{1, 0}});
                       double off = 0.0;
                       if (vs[1].diagnostics.witness_polynomial) {
                           for (const auto& [m, a] : *vs[1].diagnostics.witness_polynomial) {
                               double want = m == MultiIndex{1, 0} ? 1.0 : m == MultiIndex{0, 1} ? -1.0 : 0.0;
                               off = std::max(off, std::abs(a - want));
                           }
                       } else {
                           off = INFINITY;
                       }
                       Outcome o;
                       o.observed = std::string("(0,0):") + to_string(vs[0].verdict) + " (1,0):" + to_string(vs[1].verdict) +
                                    (off <= 1e-6 ? " witness u1-u2" : " witness off span");
                       o.pass = o.observed == "(0,0):Pole (1,0):NoPole witness u1-u2";
                       o.detail = {{"witness_distance", io::number(off)}};
                       return o;
                   }});
    out.push_back({"quartic_axis", {"anisotropy"}, "Pole at (0,0) (0,1) (1,0) (1,1) (1,2); NoPole at (2,0)", [] {
                       GramOptions go;
                       go.degree_cap = 4;
                       const std::vector<MultiIndex> ks{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 2}, {2, 0}};
                       const auto vs = gram_pole_tests(builtin::quartic_axis(), ks, go);
                       Outcome o;
                       bool ok = true;
                       io::Json d = io::Json::array();
                       for (std::size_t i = 0; i < vs.size(); ++i) {
                           const auto want = i + 1 < vs.size() ? PoleOutcome::Pole : PoleOutcome::NoPole;
                           ok = ok && vs[i].verdict == want;
                           d.push_back({{"k", ks[i].k}, {"verdict", to_string(vs[i].verdict)}});
                       }
                       o.pass = ok;
                       o.observed = ok ? "Pole at (0,0) (0,1) (1,0) (1,1) (1,2); NoPole at (2,0)" : "verdicts differ";
                       o.detail = {{"verdicts", d}};
                       return o;
                   }});

    out.push_back(dpp_scenario("dpp_ginibre", [] { return kernels::ginibre(); }, 1, 0));
    out.push_back(dpp_scenario("dpp_sine", [] { return kernels::sine(); }, 1, 0));
    out.push_back(dpp_scenario("dpp_tensor_sinc", [] { return kernels::tensor_sinc(); }, 0, -1));
    out.push_back(dpp_scenario("dpp_gaussian", [] { return kernels::gaussian(3); }, 0, -1));

    out.push_back({"lmr_suite_1d", {"lmr"}, "LMR iff total multiplicity > 2m in all 36 cases", [] {
                       const auto checks = run_lmr_suite();
                       int ok = 0;
                       io::Json d = io::Json::array();
                       for (const auto& c : checks) {
                           ok += c.pass();
                           d.push_back({{"case", c.name}, {"m", c.m}, {"total_multiplicity", c.total_multiplicity},
                                        {"lmr", c.lmr}, {"pass", c.pass()}, {"error", c.error}});
                       }
                       Outcome o;
                       o.pass = ok == static_cast<int>(checks.size()) && checks.size() == 36;
                       o.observed = o.pass ? "LMR iff total multiplicity > 2m in all 36 cases"
                                           : std::to_string(ok) + " of " + std::to_string(checks.size()) + " cases agree";
                       o.detail = {{"cases", d}};
                       return o;
                   }});

    out.push_back({"counterexample", {"classify", "counterexample"}, "SufficientOnly", [] {
                       const auto c = rigidity_classifier(builtin::line_zero_counterexample(), MultiIndex{0, 0});
                       Outcome o;
                       o.observed = to_string(c.verdict);
                       o.pass = c.verdict == Rigidity::SufficientOnly;
                       o.detail = {{"provenance", c.provenance}};
                       return o;
                   }});
    return out;
}

std::vector<std::size_t> select(const std::vector<Scenario>& all, const std::optional<io::Json>& filter) {
    std::vector<std::size_t> idx;
    if (!filter) {
        for (std::size_t i = 0; i < all.size(); ++i) idx.push_back(i);
        return idx;
    }
    std::vector<std::string> keys;
    if (filter->is_string()) {
        keys.push_back(filter->get<std::string>());
    } else if (filter->is_array()) {
        for (const auto& e : *filter) {
            if (!e.is_string()) throw Error(ErrorCode::ParseError, "scenarios: expected strings");
            keys.push_back(e.get<std::string>());
        }
    } else {
        throw Error(ErrorCode::ParseError, "scenarios: expected a string or an array of strings");
    }
    std::set<std::string> used;
    for (std::size_t i = 0; i < all.size(); ++i) {
        bool hit = false;
        for (const auto& k : keys) {
            bool m = all[i].name == k;
            for (const auto& t : all[i].tags) m = m || t == k;
            if (m) used.insert(k);
            hit = hit || m;
        }
        if (hit) idx.push_back(i);
    }
    for (const auto& k : keys)
        if (!used.count(k)) throw Error(ErrorCode::ValidationError, "scenario filter '" + k + "' matches nothing");
    return idx;
}

int LmrCase::total_multiplicity() const {
    int t = 0;
    for (const auto& z : zeros) t += z.multiplicity;
    return t;
}

std::vector<LmrCase> lmr_suite() {
    // s = (1 + 0.3 cos u) prod of sin^2 factors; each factor vanishes to order 2q
    struct Factor {
        double a;  // zero at +-a (a = 0 or pi gives one zero)
        int q;
    };
    auto make = [](std::string name, std::vector<Factor> fs) {
        std::vector<TorusZero> zeros;
        for (const auto& f : fs) {
            zeros.push_back({f.a, f.q});
            if (f.a != 0.0 && f.a != pi) zeros.push_back({-f.a, f.q});
        }
        SpectralDensity s(Domain::torus(1), [fs](std::span<const double> u) {
            double v = (1.0 + 0.3 * std::cos(u[0])) / (2.0 * pi);
            for (const auto& f : fs) {
                double g;
                if (f.a == 0.0) {
                    g = std::sin(0.5 * u[0]);
                    g *= g;
                } else if (f.a == pi) {
                    g = std::cos(0.5 * u[0]);
                    g *= g;
                } else {
                    const double p = std::sin(0.5 * (u[0] - f.a)), m = std::sin(0.5 * (u[0] + f.a));
                    g = 4.0 * p * p * m * m;
                }
                v *= std::pow(g, f.q);
            }
            return v;
        });
        return LmrCase{std::move(name), std::move(s), std::move(zeros)};
    };
    return {
        make("positive", {}),
        make("zero_at_0", {{0.0, 1}}),
        make("zero_at_pi", {{pi, 1}}),
        make("zeros_0_pi", {{0.0, 1}, {pi, 1}}),
        make("pair_1", {{1.0, 1}}),
        make("double_at_0", {{0.0, 2}}),
        make("pair_and_0", {{1.5, 1}, {0.0, 1}}),
        make("triple_at_0", {{0.0, 3}}),
        make("pair_2_and_pi", {{2.0, 1}, {pi, 1}}),
        make("double_pair", {{1.0, 2}}),
        make("two_pairs", {{0.7, 1}, {2.2, 1}}),
        make("double_0_pi", {{0.0, 2}, {pi, 2}}),
    };
}

std::vector<LmrCheck> run_lmr_suite() {
    const auto cases = lmr_suite();
    std::vector<LmrCheck> out(cases.size() * 3);
    parallel_for(out.size(), [&](std::size_t i) {
        const auto& c = cases[i / 3];
        auto& r = out[i];
        r.name = c.name;
        r.m = static_cast<int>(i % 3);
        r.total_multiplicity = c.total_multiplicity();
        r.expected = r.total_multiplicity > 2 * r.m;
        try {
            const auto res = lmr_test_1d(c.s, c.zeros, r.m);
            r.lmr = res.lmr;
            if (!res.lmr) {
                r.witness_ok = res.witness.has_value();
                if (res.witness && !c.zeros.empty()) {
                    std::vector<Point> pts;
                    for (const auto& z : c.zeros) pts.push_back({z.location});
                    bool finite = false;
                    witness_ladder(c.s, *res.witness, pts, &finite);
                    r.witness_ok = finite;
                }
            }
        } catch (const Error& e) {
            r.error = e.what();
        }
    });
    return out;
}

std::vector<CalibrationCase> calibration_suite(const std::vector<std::uint64_t>& seeds) {
    auto torus1 = [](std::function<double(double)> f) {
        return SpectralDensity(Domain::torus(1), [f](std::span<const double> u) { return f(u[0]); });
    };
    struct Base {
        std::string name;
        SpectralDensity s;
        int d, m;
        TargetFunctional target;
        int N;
    };
    const double ar_norm = 1.0 / (2.0 * pi);
    std::vector<Base> bases{
        {"white", builtin::white_noise(1), 1, 0, TargetFunctional::mass(), 8},
        {"ma1_unit_root", builtin::ma1_unit_root(), 1, 0, TargetFunctional::mass(), 16},
        {"ar1_0.5", torus1([=](double u) { return ar_norm / (1.25 - std::cos(u)); }), 1, 1, TargetFunctional::mass(), 16},
        {"ar1_0.8_moment", torus1([=](double u) { return ar_norm / (1.64 - 1.6 * std::cos(u)); }), 1, 1,
         TargetFunctional::moment(MultiIndex{{1}}), 16},
        {"separable_2d",
         SpectralDensity(Domain::torus(2),
                         [](std::span<const double> u) {
                             return (1.0 + 0.5 * std::cos(u[0])) * (1.0 + 0.5 * std::cos(u[1])) / (4.0 * pi * pi);
                         }),
         2, 0, TargetFunctional::mass(), 4},
    };
    std::vector<CalibrationCase> out;
    for (const auto& b : bases) {
        for (auto seed : seeds) {
            CalibrationCase c;
            c.name = b.name + "/seed" + std::to_string(seed);
            c.spec.density = b.s;
            c.spec.d = b.d;
            c.spec.n = b.d == 1 ? 64 : 16;
            c.spec.seed = seed;
            c.m = b.m;
            c.target = b.target;
            c.N = b.N;
            c.replicates = 2000;
            out.push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace rigidity::scenarios
