#include "rigidity/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "rigidity/covariance.hpp"
#include "rigidity/discrete_predictor.hpp"
#include "rigidity/dpp.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/gaussian_sampler.hpp"
#include "rigidity/json_io.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/pole_analysis.hpp"
#include "rigidity/scenarios.hpp"

namespace rigidity::cli {

using io::Json;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::ValidationError, "cannot write " + p.string());
    out << text;
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string kstr(const MultiIndex& k) {
    std::string s;
    for (int x : k.k) s += (s.empty() ? "" : "-") + std::to_string(x);
    return s;
}

struct Loaded {
    Json config;
    std::filesystem::path base;
};

Loaded load(const JobOptions& opt) {
    if (opt.config.empty()) throw Error(ErrorCode::ValidationError, "no --config given");
    if (!std::filesystem::exists(opt.config))
        throw Error(ErrorCode::ValidationError, "config not found: " + opt.config.string());
    std::filesystem::create_directories(opt.out);
    return {io::read_json(opt.config), opt.config.parent_path()};
}

int int_key(const Json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw Error(ErrorCode::ParseError, std::string(key) + ": expected an integer");
    return j[key].get<int>();
}

double num_key(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw Error(ErrorCode::ParseError, std::string(key) + ": expected a number");
    return j[key].get<double>();
}

bool bool_key(const Json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw Error(ErrorCode::ParseError, std::string(key) + ": expected a boolean");
    return j[key].get<bool>();
}

ClassifierOptions classifier_options(const Json& cfg) {
    ClassifierOptions o;
    o.eps = num_key(cfg, "eps", o.eps);
    o.run_gram = bool_key(cfg, "run_gram", o.run_gram);
    if (cfg.contains("tolerances")) {
        const auto& t = cfg["tolerances"];
        io::require_keys(t, {"tau", "divergence_slack", "converge_ratio", "diverge_ratio", "shells"}, "tolerances");
        o.radial.tau = num_key(t, "tau", o.radial.tau);
        o.radial.divergence_slack = num_key(t, "divergence_slack", o.radial.divergence_slack);
        o.radial.shells = int_key(t, "shells", o.radial.shells);
        o.gram.converge_ratio = num_key(t, "converge_ratio", o.gram.converge_ratio);
        o.gram.diverge_ratio = num_key(t, "diverge_ratio", o.gram.diverge_ratio);
    }
    if (!(o.eps > 0.0)) throw Error(ErrorCode::ValidationError, "eps must be positive");
    return o;
}

int k_cap_of(const Json& cfg, const JobOptions& opt, int fallback) {
    const int k = opt.k_cap ? *opt.k_cap : int_key(cfg, "k_cap", fallback);
    if (k < 0 || k > 6) throw Error(ErrorCode::ValidationError, "k_cap must be in 0..6");
    return k;
}

void write_ladders(const std::vector<OrderClassification>& orders, const std::filesystem::path& out, Json& index) {
    std::map<std::string, const PoleVerdict*> unique;
    for (const auto& o : orders)
        for (const auto& c : o.components)
            for (const auto& t : c.tests) unique.emplace("k" + kstr(t.target) + "_" + to_string(t.method), &t);
    index = Json::array();
    for (const auto& [stem, v] : unique) {
        const auto& d = v->diagnostics;
        if (!d.partial_sums.empty()) {
            std::string csv = "shell_index,partial_sum\n";
            for (std::size_t i = 0; i < d.partial_sums.size(); ++i) csv += std::to_string(i) + "," + fmt(d.partial_sums[i]) + "\n";
            write_text(out / ("ladder_" + stem + ".csv"), csv);
            index.push_back("ladder_" + stem + ".csv");
        }
        if (!d.gram_spectra.empty()) {
            std::string csv = "delta,min_energy\n";
            for (const auto& g : d.gram_spectra) csv += fmt(g.delta) + "," + fmt(g.min_energy) + "\n";
            write_text(out / ("energy_" + stem + ".csv"), csv);
            index.push_back("energy_" + stem + ".csv");
        }
    }
}

bool any_undetermined(const std::vector<OrderClassification>& orders) {
    for (const auto& o : orders)
        if (o.verdict == Rigidity::Undetermined) return true;
    return false;
}

std::string orders_markdown(const std::vector<OrderClassification>& orders) {
    std::string md = "| order | verdict | provenance |\n|---|---|---|\n";
    for (const auto& o : orders)
        md += "| " + std::to_string(o.order) + " | " + to_string(o.verdict) + " | " + o.provenance + " |\n";
    md += "\n| k | verdict | tests |\n|---|---|---|\n";
    std::map<MultiIndex, const Classification*> comps;
    for (const auto& o : orders)
        for (const auto& c : o.components) comps.emplace(c.target, &c);
    for (const auto& [k, c] : comps) {
        std::string tests;
        for (const auto& t : c->tests) {
            if (!tests.empty()) tests += ", ";
            tests += std::string(to_string(t.method)) + ": " + to_string(t.verdict);
        }
        md += "| (" + kstr(k) + ") | " + to_string(c->verdict) + " | " + tests + " |\n";
    }
    return md;
}

std::vector<int> default_truncations(int start, int N) {
    std::vector<int> Ns;
    for (int j = 0;; ++j) {
        const int n = static_cast<int>(std::lround(start * std::pow(2.0, 0.5 * j)));
        if (n > N) break;
        if (Ns.empty() || n > Ns.back()) Ns.push_back(n);
    }
    if (Ns.empty() || Ns.back() != N) Ns.push_back(N);
    return Ns;
}

}  // namespace

int run_classify(const JobOptions& opt) {
    const auto [cfg, base] = load(opt);
    io::require_keys(cfg, {"density", "k_cap", "eps", "run_gram", "tolerances", "description"}, "classify config");
    if (!cfg.contains("density")) throw Error(ErrorCode::ParseError, "classify config: missing key 'density'");
    const auto s = io::parse_density(cfg["density"], base);
    const auto inv = check_invariants(s);
    if (!inv.nonnegative) {
        if (std::find(inv.violations.begin(), inv.violations.end(), "non-finite value") != inv.violations.end())
            throw Error(ErrorCode::EvaluationFailure, "density is not finite at some sample points");
        throw Error(ErrorCode::NegativeDensity, "density takes negative values");
    }
    const int k_cap = k_cap_of(cfg, opt, 2);
    const auto copt = classifier_options(cfg);

    const auto orders = classify_orders(s, k_cap, copt);
    Json doc;
    doc["command"] = "classify";
    doc["description"] = cfg.value("description", "");
    doc["density"] = io::density_summary(s);
    doc["invariant_warnings"] = inv.violations;
    doc["k_cap"] = k_cap;
    doc["orders"] = Json::array();
    std::vector<PoleVerdict> all;
    for (const auto& o : orders) {
        doc["orders"].push_back(io::to_json(o));
        for (const auto& c : o.components) all.insert(all.end(), c.tests.begin(), c.tests.end());
    }
    doc["downward_closure_violations"] = check_downward_closure(all);
    if (s.zeros()) {
        try {
            doc["simple"] = io::to_json(classify_simple(s));
        } catch (const Error& e) {
            doc["simple"] = {{"error", e.what()}};
        }
    } else {
        doc["simple"] = nullptr;
    }
    int max_rigid = -1;
    for (const auto& o : orders) {
        if (o.verdict != Rigidity::KRigid) break;
        max_rigid = o.order;
    }
    doc["max_rigid_order"] = max_rigid;
    Json files;
    write_ladders(orders, opt.out, files);
    doc["ladder_files"] = files;
    write_text(opt.out / "verdicts.json", io::dump(doc));

    std::string md = "# Rigidity classification\n\n";
    if (!s.description().empty()) md += s.description() + "\n\n";
    md += "Domain: " + s.domain().kind_name() + ", d = " + std::to_string(s.dim()) + ". Orders 0.." +
          std::to_string(k_cap) + ".\n\n";
    md += orders_markdown(orders);
    md += "\nLargest rigid order: " + (max_rigid < 0 ? std::string("none") : std::to_string(max_rigid)) + "\n";
    write_text(opt.out / "report.md", md);
    return any_undetermined(orders) ? Undetermined : Ok;
}

int run_predict(const JobOptions& opt) {
    const auto [cfg, base] = load(opt);
    io::require_keys(cfg, {"covariance", "density", "m", "target", "N", "truncations", "description"},
                     "predict config");
    if (cfg.contains("covariance") == cfg.contains("density"))
        throw Error(ErrorCode::ParseError, "predict config: give exactly one of 'covariance' and 'density'");
    std::optional<SpectralDensity> s;
    if (cfg.contains("density")) s = io::parse_density(cfg["density"], base);
    const int d = s ? s->dim() : 0;
    const int m = int_key(cfg, "m", 0);
    if (m < 0) throw Error(ErrorCode::ValidationError, "m must be >= 0");

    std::vector<int> Ns;
    if (cfg.contains("truncations")) {
        if (cfg.contains("N")) throw Error(ErrorCode::ParseError, "predict config: give either 'N' or 'truncations'");
        for (const auto& x : cfg["truncations"]) {
            if (!x.is_number_integer()) throw Error(ErrorCode::ParseError, "truncations: expected integers");
            Ns.push_back(x.get<int>());
        }
        std::sort(Ns.begin(), Ns.end());
        Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
    } else {
        const int N = int_key(cfg, "N", 64);
        Ns = default_truncations(4 * (m + 1), N);
    }
    if (Ns.empty() || Ns.front() <= m) throw Error(ErrorCode::ValidationError, "truncations must exceed m");
    const int N = Ns.back();

    const CovarianceSequence cov = s ? covariance_from_density(*s, 2 * N) : io::parse_covariance(cfg["covariance"], base);
    const int dim = s ? d : cov.dim();
    const auto target = cfg.contains("target") ? io::parse_target(cfg["target"], dim) : TargetFunctional::mass();
    const WindowSpec window{m, dim};

    auto pred = best_linear_predictor(cov, window, target, N);
    pred.curve = prediction_curve(cov, window, target, Ns);
    if (pred.curve.size() >= 8) pred.fit = rigidity_from_curve(pred.curve);

    Json doc;
    doc["command"] = "predict";
    doc["description"] = cfg.value("description", "");
    doc["d"] = dim;
    doc["m"] = m;
    doc["target"] = target.str();
    doc["N"] = N;
    doc["prediction"] = io::to_json(pred);
    bool undetermined = !pred.fit || pred.fit->flag == RigidFlag::Undetermined;
    doc["discrete_test"] = nullptr;
    if (s && s->zeros() && target.kind != TargetFunctional::Kind::Custom) {
        const MultiIndex k = target.kind == TargetFunctional::Kind::Moment ? target.k : MultiIndex(std::vector<int>(dim, 0));
        const auto r = k_rigid_discrete_test(*s, *s->zeros(), m, k);
        doc["discrete_test"] = io::to_json(r);
        doc["discrete_test"]["k"] = k.k;
        undetermined = undetermined || !r.determined;
    }
    write_text(opt.out / "prediction.json", io::dump(doc));
    std::string csv = "N,residual\n";
    for (const auto& p : pred.curve) csv += std::to_string(p.N) + "," + fmt(p.residual) + "\n";
    write_text(opt.out / "curve.csv", csv);
    return undetermined ? Undetermined : Ok;
}

int run_dpp(const JobOptions& opt) {
    const auto [cfg, base] = load(opt);
    io::require_keys(cfg, {"kernel", "k_cap", "normalize_intensity", "verify_closed_form", "eps", "description"},
                     "dpp config");
    if (!cfg.contains("kernel")) throw Error(ErrorCode::ParseError, "dpp config: missing key 'kernel'");
    const auto kernel = io::parse_kernel(cfg["kernel"]);
    const int k_cap = k_cap_of(cfg, opt, 1);
    StructureFactorOptions sf;
    sf.normalize_intensity = bool_key(cfg, "normalize_intensity", true);
    sf.verify_closed_form = bool_key(cfg, "verify_closed_form", true);
    ClassifierOptions co;
    co.eps = num_key(cfg, "eps", co.eps);
    const auto r = dpp_rigidity_order(kernel, k_cap, co, sf);

    Json doc;
    doc["command"] = "dpp";
    doc["description"] = cfg.value("description", "");
    doc["kernel"] = {{"name", kernel.name}, {"d", kernel.d}, {"intensity", io::number(kernel.intensity)},
                     {"isotropic", kernel.isotropic}, {"tensor", !kernel.factors.empty()}};
    doc["k_cap"] = k_cap;
    doc["report"] = io::to_json(r);
    write_text(opt.out / "dpp.json", io::dump(doc));

    std::string csv = "u,s\n";
    std::vector<double> u(kernel.d, 0.0);
    for (int i = 0; i <= 200; ++i) {
        u[0] = 0.05 * i;
        csv += fmt(u[0]) + "," + fmt(r.factor.s(u)) + "\n";
    }
    write_text(opt.out / "structure_factor.csv", csv);
    return r.determined ? Ok : Undetermined;
}

int run_simulate(const JobOptions& opt) {
    const auto [cfg, base] = load(opt);
    io::require_keys(cfg, {"density", "covariance", "n", "replicates", "seed", "dump", "check", "description"},
                     "simulate config");
    if (cfg.contains("covariance") == cfg.contains("density"))
        throw Error(ErrorCode::ParseError, "simulate config: give exactly one of 'covariance' and 'density'");
    SimulationSpec spec;
    if (cfg.contains("density")) {
        spec.density = io::parse_density(cfg["density"], base);
        spec.d = spec.density->dim();
    } else {
        spec.covariance = io::parse_covariance(cfg["covariance"], base);
        spec.d = spec.covariance->dim();
    }
    spec.n = int_key(cfg, "n", spec.d == 1 ? 1024 : 64);
    spec.replicates = int_key(cfg, "replicates", 1);
    if (cfg.contains("seed")) {
        if (!cfg["seed"].is_number_unsigned()) throw Error(ErrorCode::ParseError, "seed: expected an unsigned integer");
        spec.seed = cfg["seed"].get<std::uint64_t>();
    }
    if (opt.seed) spec.seed = *opt.seed;

    const auto r = sample_gaussian(spec);
    Json doc;
    doc["command"] = "simulate";
    doc["description"] = cfg.value("description", "");
    doc["method"] = r.method;
    doc["embedding_size"] = r.embedding_size;
    doc["min_eigenvalue"] = io::number(r.min_eigenvalue);
    doc["seed"] = spec.seed;
    doc["spec_hash"] = spec_hash(spec);
    doc["shape"] = {r.replicates, r.n, r.d};

    // empirical autocovariance along axis 0, averaged over replicates and rows
    const int lags = std::min(16, r.n / 2);
    const auto theory = spec_covariance(spec, lags);
    std::vector<double> emp(lags + 1, 0.0);
    const std::size_t rows = r.d == 1 ? 1 : r.n;
    for (int rep = 0; rep < r.replicates; ++rep)
        for (std::size_t row = 0; row < rows; ++row)
            for (int l = 0; l <= lags; ++l) {
                double acc = 0.0;
                for (int i = 0; i < r.n; ++i) acc += r.at(rep, row * r.n + i) * r.at(rep, row * r.n + (i + l) % r.n);
                emp[l] += acc / r.n;
            }
    std::string csv = "lag,empirical,theoretical\n";
    Json cov = Json::array();
    for (int l = 0; l <= lags; ++l) {
        emp[l] /= static_cast<double>(r.replicates * rows);
        std::vector<int> lag(spec.d, 0);
        lag[0] = l;
        const double t = theory(lag);
        csv += std::to_string(l) + "," + fmt(emp[l]) + "," + fmt(t) + "\n";
        cov.push_back({{"lag", l}, {"empirical", io::number(emp[l])}, {"theoretical", io::number(t)}});
    }
    doc["autocovariance"] = cov;
    write_text(opt.out / "autocovariance.csv", csv);

    doc["check"] = nullptr;
    if (cfg.contains("check")) {
        const auto& c = cfg["check"];
        io::require_keys(c, {"m", "target", "N", "replicates"}, "check");
        const int m = int_key(c, "m", 0);
        const auto target = c.contains("target") ? io::parse_target(c["target"], spec.d) : TargetFunctional::mass();
        const auto ec = empirical_prediction_check(spec, m, target, int_key(c, "N", 8), int_key(c, "replicates", 1000));
        doc["check"] = io::to_json(ec);
    }
    doc["dump"] = nullptr;
    if (bool_key(cfg, "dump", false)) {
        write_realizations(opt.out / "realizations.bin", r, spec);
        doc["dump"] = "realizations.bin";
    }
    write_text(opt.out / "simulation.json", io::dump(doc));
    return Ok;
}

int run_reproduce(const JobOptions& opt) {
    const auto [cfg, base] = load(opt);
    io::require_keys(cfg, {"scenarios", "description"}, "reproduce config");
    const auto all = scenarios::bundled();
    const auto chosen = scenarios::select(all, cfg.contains("scenarios") ? std::optional<Json>(cfg["scenarios"]) : std::nullopt);

    std::vector<scenarios::Outcome> outcomes(chosen.size());
    parallel_for(chosen.size(), [&](std::size_t i) {
        try {
            outcomes[i] = all[chosen[i]].run();
        } catch (const Error& e) {
            outcomes[i] = {false, std::string("error: ") + to_string(e.code()) + ": " + e.what(), nullptr};
        } catch (const std::exception& e) {
            outcomes[i] = {false, std::string("error: ") + e.what(), nullptr};
        }
    });

    Json doc;
    doc["command"] = "reproduce-paper";
    doc["description"] = cfg.value("description", "");
    doc["scenarios"] = Json::array();
    std::string md = "# Reproduction report\n\n| scenario | tags | expected | observed | result |\n|---|---|---|---|---|\n";
    int passed = 0;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto& sc = all[chosen[i]];
        const auto& o = outcomes[i];
        passed += o.pass;
        doc["scenarios"].push_back({{"name", sc.name}, {"tags", sc.tags}, {"expected", sc.expected},
                                    {"observed", o.observed}, {"pass", o.pass}, {"detail", o.detail}});
        std::string tags;
        for (const auto& t : sc.tags) tags += (tags.empty() ? "" : ", ") + t;
        md += "| " + sc.name + " | " + tags + " | " + sc.expected + " | " + o.observed + " | " +
              (o.pass ? "pass" : "FAIL") + " |\n";
    }
    doc["passed"] = passed;
    doc["total"] = chosen.size();
    md += "\n" + std::to_string(passed) + " of " + std::to_string(chosen.size()) + " scenarios match.\n";
    write_text(opt.out / "reproduction.json", io::dump(doc));
    write_text(opt.out / "reproduction.md", md);
    return passed == static_cast<int>(chosen.size()) ? Ok : Mismatch;
}

int run(const std::string& command, const JobOptions& opt) {
    auto fail = [&](const std::string& code, const std::string& msg) {
        std::cerr << "rigidity: " << code << ": " << msg << "\n";
        try {
            std::filesystem::create_directories(opt.out);
            Json e{{"error", {{"code", code}, {"message", msg}, {"command", command}}}};
            write_text(opt.out / "error.json", io::dump(e));
        } catch (...) {
        }
        return static_cast<int>(InputError);
    };
    try {
        if (command == "classify") return run_classify(opt);
        if (command == "predict") return run_predict(opt);
        if (command == "dpp") return run_dpp(opt);
        if (command == "simulate") return run_simulate(opt);
        if (command == "reproduce-paper") return run_reproduce(opt);
        return fail("ValidationError", "unknown command '" + command + "'");
    } catch (const Error& e) {
        return fail(to_string(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail("ParseError", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail("ValidationError", e.what());
    }
}

}  // namespace rigidity::cli
