#include "rigidity/json_io.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/expression.hpp"

namespace rigidity::io {

namespace {

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

const Json& need(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) parse_error(where + ": missing key '" + key + "'");
    return j.at(key);
}

template <class T>
T get(const Json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        parse_error(where + ": wrong type (" + std::string(j.type_name()) + ")");
    }
}

int get_int(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) parse_error(where + ": expected an integer");
    return j.get<int>();
}

std::vector<double> get_vec(const Json& j, const std::string& where) {
    if (!j.is_array()) parse_error(where + ": expected an array of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) parse_error(where + ": expected an array of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

std::vector<int> get_ivec(const Json& j, const std::string& where) {
    if (!j.is_array()) parse_error(where + ": expected an array of integers");
    std::vector<int> v;
    for (const auto& x : j) v.push_back(get_int(x, where));
    return v;
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::ValidationError, "file not found: " + path.string());
    return path;
}

// Multilinear interpolation on a uniform grid, axis 0 fastest.
struct Table {
    int d = 1;
    std::vector<double> lo, hi;
    std::vector<int> n;
    std::vector<double> values;
    bool torus = false;

    double operator()(std::span<const double> u) const {
        std::size_t base = 0, stride = 1;
        std::vector<std::size_t> strides(d);
        std::vector<double> frac(d);
        std::vector<int> cell(d);
        for (int i = 0; i < d; ++i) {
            const double h = (hi[i] - lo[i]) / (n[i] - 1);
            double t = (u[i] - lo[i]) / h;
            if (t < -1e-9 || t > n[i] - 1 + 1e-9) {
                std::ostringstream os;
                os << "table density evaluated outside its grid (axis " << i + 1 << ", value " << u[i] << ")";
                throw Error(ErrorCode::EvaluationFailure, os.str());
            }
            t = std::clamp(t, 0.0, static_cast<double>(n[i] - 1));
            int c = std::min(static_cast<int>(t), n[i] - 2);
            cell[i] = c;
            frac[i] = t - c;
            strides[i] = stride;
            base += c * stride;
            stride *= n[i];
        }
        double acc = 0.0;
        for (int corner = 0; corner < (1 << d); ++corner) {
            double w = 1.0;
            std::size_t idx = base;
            for (int i = 0; i < d; ++i) {
                const bool up = (corner >> i) & 1;
                w *= up ? frac[i] : 1.0 - frac[i];
                if (up) idx += strides[i];
            }
            if (w != 0.0) acc += w * values[idx];
        }
        return acc;
    }
};

Domain parse_domain(const Json& j) {
    require_keys(j, {"kind", "d"}, "domain");
    const auto kind = get<std::string>(need(j, "kind", "domain"), "domain.kind");
    const int d = get_int(need(j, "d", "domain"), "domain.d");
    if (kind == "torus") return Domain::torus(d);
    if (kind == "euclidean") return Domain::euclidean(d);
    parse_error("domain.kind must be 'torus' or 'euclidean'");
}

DensityFlags parse_flags(const Json& j, DensityFlags f) {
    require_keys(j, {"isotropic", "separable", "simple"}, "flags");
    if (j.contains("isotropic")) f.isotropic = get<bool>(j["isotropic"], "flags.isotropic");
    if (j.contains("separable")) f.separable = get<bool>(j["separable"], "flags.separable");
    if (j.contains("simple")) f.simple = get<bool>(j["simple"], "flags.simple");
    return f;
}

}  // namespace

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) parse_error(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) parse_error(where + ": unknown key '" + key + "'");
    }
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ValidationError, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        parse_error(path.string() + ": " + e.what());
    }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

SpectralDensity parse_density(const Json& in, const std::filesystem::path& base) {
    if (in.is_string()) {
        const auto path = resolve(in.get<std::string>(), base);
        return parse_density(read_json(path), path.parent_path());
    }
    require_keys(in, {"domain", "density", "flags", "zeros", "atoms", "description"}, "density document");
    const auto& dens = need(in, "density", "density document");
    const auto kind = get<std::string>(need(dens, "kind", "density"), "density.kind");

    std::optional<SpectralDensity> s;
    std::optional<Domain> domain;
    if (in.contains("domain")) domain = parse_domain(in["domain"]);
    DensityFlags flags;
    if (kind == "builtin") {
        require_keys(dens, {"kind", "name", "params"}, "density");
        const auto name = get<std::string>(need(dens, "name", "density"), "density.name");
        Json params = dens.value("params", Json::object());
        if (!params.is_object()) parse_error("density.params: expected an object");
        for (const auto& [k, v] : params.items())
            if (!v.is_number()) parse_error("density.params." + k + ": expected a number");
        s = builtin::by_name(name, [&](const std::string& key) -> std::optional<double> {
            if (params.contains(key)) return params[key].get<double>();
            if (key == "d" && domain) return domain->dim;
            return std::nullopt;
        });
        if (domain && !(*domain == s->domain()))
            throw Error(ErrorCode::ValidationError, "domain does not match builtin '" + name + "'");
        flags = s->flags();
    } else {
        if (!domain) parse_error("density document: 'domain' is required for " + kind + " densities");
        if (kind == "expression") {
            require_keys(dens, {"kind", "expr"}, "density");
            auto e = std::make_shared<Expression>(
                Expression::parse(get<std::string>(need(dens, "expr", "density"), "density.expr"), domain->dim));
            s = SpectralDensity(*domain, [e](std::span<const double> u) { return (*e)(u); });
        } else if (kind == "table") {
            require_keys(dens, {"kind", "lo", "hi", "n", "values"}, "density");
            auto t = std::make_shared<Table>();
            t->d = domain->dim;
            t->torus = domain->is_torus();
            t->lo = get_vec(need(dens, "lo", "density"), "density.lo");
            t->hi = get_vec(need(dens, "hi", "density"), "density.hi");
            t->n = get_ivec(need(dens, "n", "density"), "density.n");
            t->values = get_vec(need(dens, "values", "density"), "density.values");
            if (t->d > 3) throw Error(ErrorCode::ValidationError, "table densities support d <= 3");
            if (static_cast<int>(t->lo.size()) != t->d || static_cast<int>(t->hi.size()) != t->d ||
                static_cast<int>(t->n.size()) != t->d)
                throw Error(ErrorCode::ValidationError, "table grid arrays must have d entries");
            std::size_t count = 1;
            for (int i = 0; i < t->d; ++i) {
                if (t->n[i] < 2 || !(t->hi[i] > t->lo[i]))
                    throw Error(ErrorCode::ValidationError, "table grid needs n >= 2 and hi > lo");
                if (t->torus && (t->lo[i] > -std::numbers::pi + 1e-9 || t->hi[i] < std::numbers::pi - 1e-9))
                    throw Error(ErrorCode::ValidationError, "torus table must cover [-pi, pi]");
                count *= t->n[i];
            }
            if (t->values.size() != count) throw Error(ErrorCode::ValidationError, "table has the wrong number of values");
            s = SpectralDensity(*domain, [t](std::span<const double> u) { return (*t)(u); });
        } else {
            parse_error("density.kind must be 'expression', 'table' or 'builtin'");
        }
    }
    if (in.contains("flags")) s = s->with_flags(parse_flags(in["flags"], flags));
    if (in.contains("zeros")) {
        if (!in["zeros"].is_array()) parse_error("zeros: expected an array");
        std::vector<ZeroAnnotation> zs;
        for (const auto& z : in["zeros"]) {
            require_keys(z, {"location", "order"}, "zeros[]");
            ZeroAnnotation a{get_vec(need(z, "location", "zeros[]"), "zeros[].location"),
                             get_int(need(z, "order", "zeros[]"), "zeros[].order")};
            if (static_cast<int>(a.location.size()) != s->dim() || a.order < 0)
                throw Error(ErrorCode::ValidationError, "zero annotation has wrong dimension or negative order");
            zs.push_back(std::move(a));
        }
        s = s->with_zeros(std::move(zs));
    }
    if (in.contains("atoms")) {
        if (!in["atoms"].is_array()) parse_error("atoms: expected an array");
        std::vector<Atom> atoms;
        for (const auto& a : in["atoms"]) {
            require_keys(a, {"location", "mass"}, "atoms[]");
            atoms.push_back({get_vec(need(a, "location", "atoms[]"), "atoms[].location"),
                             get<double>(need(a, "mass", "atoms[]"), "atoms[].mass")});
        }
        s = s->with_atoms(std::move(atoms));
    }
    if (in.contains("description")) {
        const auto desc = get<std::string>(in["description"], "description");
        const auto& old = *s;
        s = SpectralDensity(old.domain(), [old](std::span<const double> u) { return old(u); }, old.flags(),
                            old.zeros(), old.atoms(), desc)
                .with_factors(old.factors());
    }
    return *s;
}

Json density_summary(const SpectralDensity& s) {
    Json j;
    j["domain"] = {{"kind", s.domain().kind_name()}, {"d", s.dim()}};
    j["flags"] = {{"isotropic", s.flags().isotropic}, {"separable", s.flags().separable}, {"simple", s.flags().simple}};
    j["description"] = s.description();
    if (s.zeros()) {
        j["zeros"] = Json::array();
        for (const auto& z : *s.zeros()) j["zeros"].push_back({{"location", z.location}, {"order", z.order}});
    } else {
        j["zeros"] = nullptr;
    }
    j["atoms"] = Json::array();
    for (const auto& a : s.atoms()) j["atoms"].push_back({{"location", a.location}, {"mass", a.mass}});
    return j;
}

CovarianceSequence parse_covariance(const Json& j, const std::filesystem::path& base) {
    auto from_csv = [&](const std::string& p) {
        std::ifstream in(resolve(p, base));
        return read_covariance_csv(in);
    };
    if (j.is_string()) return from_csv(j.get<std::string>());
    require_keys(j, {"csv", "d", "values", "finite_support", "tail_bound"}, "covariance");
    std::optional<CovarianceSequence> c;
    if (j.contains("csv")) {
        if (j.contains("values")) parse_error("covariance: give either 'csv' or 'values'");
        c = from_csv(get<std::string>(j["csv"], "covariance.csv"));
    } else {
        const int d = get_int(need(j, "d", "covariance"), "covariance.d");
        const auto& vals = need(j, "values", "covariance");
        if (!vals.is_array()) parse_error("covariance.values: expected an array");
        int radius = 0;
        for (const auto& v : vals) {
            require_keys(v, {"m", "value"}, "covariance.values[]");
            for (int x : get_ivec(need(v, "m", "covariance.values[]"), "covariance.values[].m")) radius = std::max(radius, std::abs(x));
        }
        c = CovarianceSequence(d, radius);
        for (const auto& v : vals) {
            const auto m = get_ivec(v["m"], "covariance.values[].m");
            if (static_cast<int>(m.size()) != d) throw Error(ErrorCode::ValidationError, "covariance lag has wrong dimension");
            c->set(m, get<double>(need(v, "value", "covariance.values[]"), "covariance.values[].value"));
        }
    }
    if (j.contains("finite_support")) c->finite_support = get<bool>(j["finite_support"], "covariance.finite_support");
    if (j.contains("tail_bound")) c->tail_bound = get<double>(j["tail_bound"], "covariance.tail_bound");
    return *c;
}

TargetFunctional parse_target(const Json& j, int d) {
    require_keys(j, {"kind", "k", "weights"}, "target");
    const auto kind = get<std::string>(need(j, "kind", "target"), "target.kind");
    if (kind == "mass") return TargetFunctional::mass();
    if (kind == "moment") {
        const auto k = get_ivec(need(j, "k", "target"), "target.k");
        if (static_cast<int>(k.size()) != d) throw Error(ErrorCode::ValidationError, "target.k has wrong dimension");
        return TargetFunctional::moment(MultiIndex(k));
    }
    if (kind == "custom") {
        std::map<std::vector<int>, double> w;
        const auto& ws = need(j, "weights", "target");
        if (!ws.is_array()) parse_error("target.weights: expected an array");
        for (const auto& e : ws) {
            require_keys(e, {"m", "w"}, "target.weights[]");
            w[get_ivec(need(e, "m", "target.weights[]"), "target.weights[].m")] =
                get<double>(need(e, "w", "target.weights[]"), "target.weights[].w");
        }
        return TargetFunctional::custom(std::move(w));
    }
    parse_error("target.kind must be 'mass', 'moment' or 'custom'");
}

DppKernel parse_kernel(const Json& j) {
    if (j.is_string()) return kernels::by_name(j.get<std::string>());
    require_keys(j, {"kind", "d", "kappa", "isotropic", "intensity", "name"}, "kernel");
    const auto kind = get<std::string>(need(j, "kind", "kernel"), "kernel.kind");
    if (kind != "custom") {
        if (j.size() > 1) parse_error("kernel: builtin kernels take no further keys");
        return kernels::by_name(kind);
    }
    auto k = kernels::custom(get_int(need(j, "d", "kernel"), "kernel.d"),
                             get<std::string>(need(j, "kappa", "kernel"), "kernel.kappa"),
                             j.contains("isotropic") ? get<bool>(j["isotropic"], "kernel.isotropic") : false);
    if (j.contains("intensity")) k.intensity = get<double>(j["intensity"], "kernel.intensity");
    if (j.contains("name")) k.name = get<std::string>(j["name"], "kernel.name");
    return k;
}

// ---------------------------------------------------------------------------

Json to_json(const MultiIndex& k) { return k.k; }

Json to_json(const PoleVerdict& v) {
    Json j;
    j["target"] = to_json(v.target);
    j["verdict"] = to_string(v.verdict);
    j["method"] = to_string(v.method);
    j["epsilon"] = number(v.epsilon);
    const auto& d = v.diagnostics;
    Json diag;
    diag["fitted_exponent"] = number(d.fitted_exponent);
    diag["fitted_ratio"] = number(d.fitted_ratio);
    diag["ladder"] = Json::array();
    for (double x : d.ladder) diag["ladder"].push_back(number(x));
    diag["partial_sums"] = Json::array();
    for (double x : d.partial_sums) diag["partial_sums"].push_back(number(x));
    diag["gram_spectra"] = Json::array();
    for (const auto& g : d.gram_spectra) {
        Json e{{"delta", number(g.delta)}, {"min_energy", number(g.min_energy)}};
        e["eigenvalues"] = Json::array();
        for (double x : g.eigenvalues) e["eigenvalues"].push_back(number(x));
        diag["gram_spectra"].push_back(std::move(e));
    }
    if (d.witness_polynomial) {
        Json w = Json::array();
        for (const auto& [m, a] : *d.witness_polynomial) w.push_back({{"m", m.k}, {"coefficient", number(a)}});
        diag["witness_polynomial"] = std::move(w);
    } else {
        diag["witness_polynomial"] = nullptr;
    }
    diag["witness_energy"] = Json::array();
    for (double x : d.witness_energy) diag["witness_energy"].push_back(number(x));
    diag["note"] = d.note;
    j["diagnostics"] = std::move(diag);
    return j;
}

Json to_json(const Classification& c) {
    Json j{{"target", to_json(c.target)}, {"verdict", to_string(c.verdict)}, {"provenance", c.provenance}};
    j["tests"] = Json::array();
    for (const auto& t : c.tests) j["tests"].push_back(to_json(t));
    return j;
}

Json to_json(const OrderClassification& o) {
    Json j{{"order", o.order}, {"verdict", to_string(o.verdict)}, {"provenance", o.provenance}};
    j["components"] = Json::array();
    for (const auto& c : o.components) j["components"].push_back(to_json(c));
    return j;
}

Json to_json(const CurveFit& f) {
    return {{"flag", to_string(f.flag)}, {"limit", number(f.limit)}, {"stderr", number(f.stderr_)},
            {"b", number(f.b)}, {"beta", number(f.beta)}, {"ci_low", number(f.ci_low)}, {"ci_high", number(f.ci_high)}};
}

Json to_json(const PredictionResult& r) {
    Json j;
    j["target_variance"] = number(r.target_variance);
    j["residual_variance"] = number(r.residual_variance);
    j["raw_residual"] = number(r.raw_residual);
    j["system_residual"] = number(r.system_residual);
    j["singular_gram"] = r.singular_gram;
    j["jitter"] = number(r.jitter);
    Json coef = Json::array();
    for (std::size_t i = 0; i < r.annulus.size(); ++i)
        coef.push_back({{"n", r.annulus[i]}, {"h", number(r.coefficients[i])}});
    j["coefficients"] = std::move(coef);
    j["curve"] = Json::array();
    for (const auto& p : r.curve) j["curve"].push_back({{"N", p.N}, {"residual", number(p.residual)}});
    j["fit"] = r.fit ? to_json(*r.fit) : Json(nullptr);
    return j;
}

Json to_json(const TrigPolynomial& p) {
    Json j = Json::array();
    for (const auto& [n, a] : p.coefficients)
        j.push_back({{"m", n}, {"re", number(a.real())}, {"im", number(a.imag())}});
    return j;
}

Json to_json(const LmrResult& r) {
    Json j{{"lmr", r.lmr}, {"total_multiplicity", r.total_multiplicity}};
    j["witness"] = r.witness ? to_json(*r.witness) : Json(nullptr);
    j["witness_ladder_ratios"] = Json::array();
    for (double x : r.witness_ladder_ratios) j["witness_ladder_ratios"].push_back(number(x));
    return j;
}

Json to_json(const DiscreteRigidityResult& r) {
    Json j{{"rigid", r.rigid}, {"determined", r.determined}, {"note", r.note}};
    j["witness"] = r.witness ? to_json(*r.witness) : Json(nullptr);
    j["energies"] = Json::array();
    for (double x : r.energies) j["energies"].push_back(number(x));
    return j;
}

Json to_json(const StructureFactor& s) {
    Json j{{"s_at_zero", number(s.s_at_zero)}, {"hyperuniform", s.hyperuniform}, {"closed_form", s.closed_form},
           {"warnings", s.warnings}};
    j["max_mismatch"] = s.max_mismatch ? number(*s.max_mismatch) : Json(nullptr);
    j["density"] = density_summary(s.s);
    return j;
}

Json to_json(const DppOrderReport& r) {
    Json j{{"max_rigid_order", r.max_rigid_order}, {"determined", r.determined}, {"structure_factor", to_json(r.factor)}};
    j["orders"] = Json::array();
    for (const auto& o : r.orders) j["orders"].push_back(to_json(o));
    return j;
}

Json to_json(const EmpiricalCheck& c) {
    return {{"empirical_mse", number(c.empirical_mse)}, {"theoretical_residual", number(c.theoretical_residual)},
            {"z_score", number(c.z_score)}, {"replicates", c.replicates}, {"method", c.method}};
}

Json to_json(const SimpleReport& r) {
    Json j{{"is_simple", r.is_simple}, {"lower_bound_holds", r.lower_bound_holds},
           {"lower_bound_c", number(r.lower_bound_c)}, {"lower_bound_p", number(r.lower_bound_p)}, {"notes", r.notes}};
    j["poles"] = Json::array();
    for (const auto& [u, q] : r.poles) j["poles"].push_back({{"location", u}, {"order", q}});
    return j;
}

}  // namespace rigidity::io
