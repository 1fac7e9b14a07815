#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "rigidity/errors.hpp"
#include "rigidity/gaussian_sampler.hpp"

using namespace rigidity;

namespace {
CovarianceSequence white() {
    CovarianceSequence c(1, 0);
    c.set({0}, 1.0);
    return c;
}
CovarianceSequence ma1() {
    CovarianceSequence c(1, 1);
    c.set({0}, 1.0);
    c.set({1}, -0.5);
    return c;
}
SimulationSpec spec_of(CovarianceSequence c, int n, std::uint64_t seed, int reps) {
    SimulationSpec s;
    s.covariance = std::move(c);
    s.d = s.covariance->dim();
    s.n = n;
    s.seed = seed;
    s.replicates = reps;
    return s;
}
double empirical_cov(const Realizations& r, int lag) {
    double acc = 0.0;
    long cnt = 0;
    for (int rep = 0; rep < r.replicates; ++rep)
        for (int t = 0; t + lag < r.n; ++t) {
            acc += r.at(rep, t) * r.at(rep, t + lag);
            ++cnt;
        }
    return acc / cnt;
}
}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) == C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Philox streams: uniform range, normal moments, independence of streams") {
    PhiloxStream a(7, 0), b(7, 1);
    double m = 0, v = 0, cross = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal(), y = b.normal();
        m += x;
        v += x * x;
        cross += x * y;
    }
    CHECK(std::abs(m / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(v / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
    PhiloxStream u(1, 2);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("sampled covariances match their targets") {
    const int reps = 400;
    const double band = 4.0 / std::sqrt(reps);
    SUBCASE("white noise") {
        const auto r = sample_gaussian(spec_of(white(), 256, 11, reps));
        CHECK(r.method == "circulant");
        CHECK(std::abs(empirical_cov(r, 0) - 1.0) <= band);
        CHECK(std::abs(empirical_cov(r, 1)) <= band);
    }
    SUBCASE("MA(1) unit root") {
        const auto r = sample_gaussian(spec_of(ma1(), 256, 12, reps));
        CHECK(std::abs(empirical_cov(r, 1) / empirical_cov(r, 0) + 0.5) <= band);
        for (int lag = 2; lag <= 16; ++lag) CHECK(std::abs(empirical_cov(r, lag)) <= band);
    }
    SUBCASE("AR(1) from its density") {
        SimulationSpec s;
        s.density = builtin::ar1(0.5);
        s.n = 256;
        s.seed = 13;
        s.replicates = reps;
        const auto r = sample_gaussian(s);
        for (int lag = 0; lag <= 16; ++lag) CHECK(std::abs(empirical_cov(r, lag) - std::pow(0.5, lag)) <= band);
    }
    SUBCASE("2D separable field") {
        CovarianceSequence c(2, 1);
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) c.set({i, j}, (i == 0 ? 1.0 : 0.4) * (j == 0 ? 1.0 : 0.3));
        auto s = spec_of(c, 32, 14, reps);
        const auto r = sample_gaussian(s);
        double c10 = 0, c01 = 0, c00 = 0;
        long cnt = 0;
        for (int rep = 0; rep < reps; ++rep)
            for (int y = 0; y + 1 < 32; ++y)
                for (int x = 0; x + 1 < 32; ++x) {
                    const double v = r.at(rep, x + 32 * y);
                    c00 += v * v;
                    c10 += v * r.at(rep, x + 1 + 32 * y);
                    c01 += v * r.at(rep, x + 32 * (y + 1));
                    ++cnt;
                }
        CHECK(std::abs(c00 / cnt - 1.0) <= band);
        CHECK(std::abs(c10 / cnt - 0.4) <= band);
        CHECK(std::abs(c01 / cnt - 0.3) <= band);
    }
}

TEST_CASE("simulation is reproducible and independent of the worker count") {
    auto s = spec_of(ma1(), 64, 99, 8);
    const auto a = sample_gaussian(s);
    const auto b = sample_gaussian(s);
    CHECK(a.data == b.data);
    s.seed = 100;
    CHECK(sample_gaussian(s).data != a.data);
}

TEST_CASE("invalid specs") {
    CHECK_THROWS_AS(sample_gaussian(spec_of(white(), 100, 1, 1)), Error);
    CHECK_THROWS_AS(sample_gaussian(spec_of(white(), 64, 1, 0)), Error);
    // not positive definite and no density to fall back on
    CovarianceSequence bad(1, 1);
    bad.set({0}, 1.0);
    bad.set({1}, 0.9);
    try {
        sample_gaussian(spec_of(bad, 64, 1, 1));
        FAIL("expected EmbeddingFailure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmbeddingFailure);
    }
}

TEST_CASE("empirical prediction errors match predicted residuals") {
    const auto w = empirical_prediction_check(spec_of(white(), 64, 5, 10000), 0, TargetFunctional::mass(), 4, 10000);
    CHECK(w.theoretical_residual == doctest::Approx(1.0));
    CHECK(std::abs(w.z_score) <= 5.0);
    const auto m = empirical_prediction_check(spec_of(ma1(), 1024, 6, 4000), 0, TargetFunctional::mass(), 256, 4000);
    CHECK(m.theoretical_residual == doctest::Approx(1.0 / 257.0));
    CHECK(std::abs(m.z_score) <= 5.0);
}

TEST_CASE("binary dump with sidecar") {
    auto s = spec_of(ma1(), 16, 3, 2);
    const auto r = sample_gaussian(s);
    const auto path = std::filesystem::temp_directory_path() / "rigidity_dump_test.bin";
    write_realizations(path, r, s);
    CHECK(std::filesystem::file_size(path) == 2 * 16 * 8);
    std::ifstream js(path.string() + ".json");
    const auto side = nlohmann::json::parse(js);
    CHECK(side["shape"] == nlohmann::json::array({2, 16}));
    CHECK(side["seed"] == 3);
    CHECK(side["spec_hash"] == spec_hash(s));
    std::ifstream bin(path, std::ios::binary);
    unsigned char b[8];
    bin.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    CHECK(std::bit_cast<double>(bits) == r.data[0]);
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
}
