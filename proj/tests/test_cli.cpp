#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rigidity/cli.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/json_io.hpp"
#include "rigidity/scenarios.hpp"

using namespace rigidity;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path configs = RIGIDITY_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("rigidity_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json read(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump();
    return p;
}

int run(const std::string& cmd, const fs::path& config, const fs::path& out) {
    return cli::run(cmd, {config, out, std::nullopt, std::nullopt});
}

}  // namespace

TEST_CASE("classify: Ginibre verdicts, ladder files and a stable report") {
    const auto a = scratch("gin_a"), b = scratch("gin_b");
    REQUIRE(run("classify", configs / "ginibre.json", a) == cli::Ok);
    REQUIRE(run("classify", configs / "ginibre.json", b) == cli::Ok);
    const auto v = read(a / "verdicts.json");
    CHECK(v["orders"][0]["verdict"] == "KRigid");
    CHECK(v["orders"][1]["verdict"] == "NotKRigid");
    CHECK(v["max_rigid_order"] == 0);
    CHECK(v["downward_closure_violations"].empty());
    CHECK(v["simple"]["is_simple"] == true);
    for (const auto& f : v["ladder_files"]) {
        CHECK(fs::exists(a / f.get<std::string>()));
        CHECK(slurp(a / f.get<std::string>()) == slurp(b / f.get<std::string>()));
    }
    const auto csv = slurp(a / "ladder_k0-0_RadialLadder.csv");
    CHECK(csv.rfind("shell_index,partial_sum\n", 0) == 0);
    CHECK(slurp(a / "verdicts.json") == slurp(b / "verdicts.json"));
    CHECK(slurp(a / "report.md") == slurp(b / "report.md"));
}

TEST_CASE("classify: Poisson and GAF configs") {
    const auto p = scratch("poisson"), g = scratch("gaf");
    REQUIRE(run("classify", configs / "poisson.json", p) == cli::Ok);
    for (const auto& o : read(p / "verdicts.json")["orders"]) CHECK(o["verdict"] == "NotKRigid");
    REQUIRE(run("classify", configs / "gaf_scaling.json", g) == cli::Ok);
    CHECK(read(g / "verdicts.json")["max_rigid_order"] == 1);
}

TEST_CASE("classify: --k-cap overrides the config") {
    const auto d = scratch("kcap");
    REQUIRE(cli::run("classify", {configs / "gaf_scaling.json", d, std::nullopt, 0}) == cli::Ok);
    CHECK(read(d / "verdicts.json")["orders"].size() == 1);
}

TEST_CASE("classify: undetermined verdicts give exit code 2") {
    const auto d = scratch("undet");
    const auto cfg = write_config(d, {{"density",
                                       {{"domain", {{"kind", "euclidean"}, {"d", 2}}},
                                        {"density", {{"kind", "expression"}, {"expr", "1"}}},
                                        {"flags", {{"isotropic", true}}}}},
                                      {"k_cap", 0},
                                      {"run_gram", false},
                                      {"tolerances", {{"tau", 0.99}, {"divergence_slack", 0.5}}}});
    CHECK(run("classify", cfg, d / "out") == cli::Undetermined);
    CHECK(read(d / "out" / "verdicts.json")["orders"][0]["verdict"] == "Undetermined");
}

TEST_CASE("input errors give exit code 1 and error.json") {
    const auto d = scratch("errors");
    SUBCASE("unknown key") {
        const auto cfg = write_config(d, {{"density", "densities/ginibre.json"}, {"k_cap", 1}, {"colour", "red"}});
        CHECK(run("classify", cfg, d / "out") == cli::InputError);
        const auto e = read(d / "out" / "error.json");
        CHECK(e["error"]["code"] == "ParseError");
        CHECK(e["error"]["message"].get<std::string>().find("colour") != std::string::npos);
    }
    SUBCASE("missing density file") {
        const auto cfg = write_config(d, {{"density", "nowhere.json"}});
        CHECK(run("classify", cfg, d / "out") == cli::InputError);
        CHECK(read(d / "out" / "error.json")["error"]["code"] == "ValidationError");
    }
    SUBCASE("negative density") {
        const auto cfg = write_config(d, {{"density",
                                           {{"domain", {{"kind", "torus"}, {"d", 1}}},
                                            {"density", {{"kind", "expression"}, {"expr", "cos(u1)"}}}}}});
        CHECK(run("classify", cfg, d / "out") == cli::InputError);
        CHECK(read(d / "out" / "error.json")["error"]["code"] == "NegativeDensity");
    }
    SUBCASE("malformed JSON") {
        std::ofstream(d / "bad.json") << "{\"density\": ";
        CHECK(run("classify", d / "bad.json", d / "out") == cli::InputError);
        CHECK(read(d / "out" / "error.json")["error"]["code"] == "ParseError");
    }
    SUBCASE("predict needs exactly one source") {
        const auto cfg = write_config(d, {{"m", 0}});
        CHECK(run("predict", cfg, d / "out") == cli::InputError);
    }
    SUBCASE("unknown command") { CHECK(run("plot", configs / "ginibre.json", d / "out") == cli::InputError); }
}

TEST_CASE("predict: discrete example and MA(1) covariance") {
    const auto a = scratch("pred_ex"), b = scratch("pred_ma1");
    REQUIRE(run("predict", configs / "discrete_example.json", a) == cli::Ok);
    const auto p = read(a / "prediction.json");
    CHECK(p["discrete_test"]["rigid"] == true);
    CHECK(p["prediction"]["fit"]["flag"] != "NotRigid");
    CHECK(slurp(a / "curve.csv").rfind("N,residual\n", 0) == 0);

    REQUIRE(run("predict", configs / "ma1_predict.json", b) == cli::Ok);
    const auto q = read(b / "prediction.json");
    CHECK(q["discrete_test"].is_null());
    CHECK(q["prediction"]["fit"]["flag"] == "Rigid");
    // residual 1/(N+1) for the unit-root MA(1)
    CHECK(q["prediction"]["residual_variance"].get<double>() == doctest::Approx(1.0 / 129.0).epsilon(1e-9));
}

TEST_CASE("predict: covariance from CSV, explicit truncations") {
    const auto d = scratch("pred_csv");
    std::ofstream(d / "cov.csv") << "m1,value\n0,1\n1,-0.5\n";
    const auto cfg = write_config(d, {{"covariance", "cov.csv"}, {"m", 0}, {"truncations", {4, 8, 16}}});
    REQUIRE(run("predict", cfg, d / "out") == cli::Undetermined);  // three points cannot be extrapolated
    const auto p = read(d / "out" / "prediction.json");
    CHECK(p["prediction"]["curve"].size() == 3);
    CHECK(p["prediction"]["fit"].is_null());
    CHECK(p["prediction"]["residual_variance"].get<double>() == doctest::Approx(1.0 / 17.0).epsilon(1e-9));
}

TEST_CASE("dpp: bundled kernel configs") {
    const auto d = scratch("dpp");
    REQUIRE(run("dpp", configs / "dpp_ginibre.json", d / "g") == cli::Ok);
    const auto g = read(d / "g" / "dpp.json");
    CHECK(g["report"]["max_rigid_order"] == 0);
    CHECK(g["report"]["structure_factor"]["hyperuniform"] == true);
    REQUIRE(run("dpp", configs / "dpp_tensor_sinc.json", d / "t") == cli::Ok);
    CHECK(read(d / "t" / "dpp.json")["report"]["max_rigid_order"] == -1);
    REQUIRE(run("dpp", configs / "dpp_custom.json", d / "c") == cli::Ok);
    const auto c = read(d / "c" / "dpp.json");
    CHECK(c["report"]["structure_factor"]["s_at_zero"].get<double>() == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(fs::exists(d / "c" / "structure_factor.csv"));
}

TEST_CASE("simulate: seeds, hashes and dumps") {
    const auto d = scratch("sim");
    const auto cfg = write_config(d, {{"covariance", {{"d", 1}, {"values", {{{"m", {0}}, {"value", 1.0}}, {{"m", {1}}, {"value", 0.4}}}}}},
                                      {"n", 256},
                                      {"replicates", 3},
                                      {"seed", 5},
                                      {"dump", true}});
    REQUIRE(run("simulate", cfg, d / "a") == cli::Ok);
    REQUIRE(run("simulate", cfg, d / "b") == cli::Ok);
    REQUIRE(cli::run("simulate", {cfg, d / "c", 6, std::nullopt}) == cli::Ok);
    CHECK(slurp(d / "a" / "realizations.bin") == slurp(d / "b" / "realizations.bin"));
    CHECK(slurp(d / "a" / "realizations.bin") != slurp(d / "c" / "realizations.bin"));
    CHECK(fs::file_size(d / "a" / "realizations.bin") == 3 * 256 * 8);
    const auto s = read(d / "a" / "simulation.json");
    CHECK(s["seed"] == 5);
    CHECK(read(d / "c" / "simulation.json")["seed"] == 6);
    CHECK(s["shape"] == json({3, 256, 1}));
    CHECK(read(d / "a" / "realizations.bin.json")["spec_hash"] == s["spec_hash"]);
}

TEST_CASE("reproduce: filters") {
    const auto d = scratch("repro");
    SUBCASE("empty filter is a no-op success") {
        const auto cfg = write_config(d, {{"scenarios", json::array()}});
        CHECK(run("reproduce-paper", cfg, d / "out") == cli::Ok);
        CHECK(read(d / "out" / "reproduction.json")["total"] == 0);
    }
    SUBCASE("tag filter") {
        CHECK(run("reproduce-paper", configs / "reproduce_discrete.json", d / "out") == cli::Ok);
        const auto r = read(d / "out" / "reproduction.json");
        CHECK(r["total"] == 3);
        for (const auto& s : r["scenarios"]) {
            CHECK(s["pass"] == true);
            CHECK(s["name"].get<std::string>().rfind("discrete", 0) == 0);
        }
    }
    SUBCASE("names and tags combine") {
        const auto cfg = write_config(d, {{"scenarios", {"counterexample", "dpp"}}});
        CHECK(run("reproduce-paper", cfg, d / "out") == cli::Ok);
        CHECK(read(d / "out" / "reproduction.json")["total"] == 5);
    }
    SUBCASE("unmatched entries are rejected") {
        const auto cfg = write_config(d, {{"scenarios", "discret"}});
        CHECK(run("reproduce-paper", cfg, d / "out") == cli::InputError);
    }
}

TEST_CASE("scenario selection without running") {
    const auto all = scenarios::bundled();
    CHECK(scenarios::select(all, std::nullopt).size() == all.size());
    CHECK(scenarios::select(all, json::array()).empty());
    CHECK(scenarios::select(all, json("lmr")).size() == 2);
    CHECK_THROWS_AS(scenarios::select(all, json(3)), Error);
}

TEST_CASE("json io: strict documents") {
    SUBCASE("table density interpolates multilinearly") {
        const json doc{{"domain", {{"kind", "euclidean"}, {"d", 2}}},
                       {"density", {{"kind", "table"}, {"lo", {0, 0}}, {"hi", {1, 2}}, {"n", {2, 3}},
                                    {"values", {0, 1, 2, 3, 4, 5}}}}};
        const auto s = io::parse_density(doc);
        std::vector<double> u{0.5, 1.0};
        CHECK(s(u) == doctest::Approx(2.5));
        u = {0.25, 1.5};
        CHECK(s(u) == doctest::Approx(0.25 + 3.0));
        u = {1.5, 0.0};
        CHECK_THROWS_AS(s(u), Error);
    }
    SUBCASE("torus tables must cover the period") {
        const json doc{{"domain", {{"kind", "torus"}, {"d", 1}}},
                       {"density", {{"kind", "table"}, {"lo", {0}}, {"hi", {1}}, {"n", {2}}, {"values", {1, 1}}}}};
        CHECK_THROWS_AS(io::parse_density(doc), Error);
    }
    SUBCASE("annotations and builtin parameters") {
        const json doc{{"density", {{"kind", "builtin"}, {"name", "ar1"}, {"params", {{"phi", 0.3}}}}},
                       {"zeros", json::array()},
                       {"description", "test"}};
        const auto s = io::parse_density(doc);
        REQUIRE(s.zeros());
        CHECK(s.zeros()->empty());
        CHECK(s.description() == "test");
        std::vector<double> u{0.0};
        CHECK(s(u) == doctest::Approx(0.91 / (2.0 * std::numbers::pi * 0.49)).epsilon(1e-12));
    }
    SUBCASE("wrong types and keys") {
        CHECK_THROWS_AS(io::parse_density(json{{"density", {{"kind", "builtin"}, {"name", 3}}}}), Error);
        CHECK_THROWS_AS(io::parse_target(json{{"kind", "moment"}, {"k", {1, 0}}}, 1), Error);
        CHECK_THROWS_AS(io::parse_kernel(json{{"kind", "custom"}, {"d", 1}, {"kappa", "1"}, {"extra", 1}}), Error);
    }
    SUBCASE("non-finite numbers become strings") {
        CHECK(io::number(INFINITY) == "inf");
        CHECK(io::number(-INFINITY) == "-inf");
        CHECK(io::number(NAN) == "nan");
        CHECK(io::number(1.5) == 1.5);
    }
}
