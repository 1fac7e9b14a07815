#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rigidity/cli.hpp"
#include "rigidity/covariance.hpp"
#include "rigidity/discrete_predictor.hpp"
#include "rigidity/dpp.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/gaussian_sampler.hpp"
#include "rigidity/json_io.hpp"
#include "rigidity/pole_analysis.hpp"

namespace py = pybind11;
using namespace rigidity;
using io::Json;

namespace {

Json parse(const std::string& text) { return Json::parse(text); }

std::string classify(const std::string& density, int k_cap, double eps) {
    const auto s = io::parse_density(parse(density));
    ClassifierOptions opt;
    opt.eps = eps;
    Json out = Json::array();
    for (const auto& o : classify_orders(s, k_cap, opt)) out.push_back(io::to_json(o));
    return out.dump();
}

std::string pole_test(const std::string& density, std::vector<int> k, const std::string& method) {
    const auto s = io::parse_density(parse(density));
    const MultiIndex mk(std::move(k));
    if (method == "radial") return io::to_json(radial_pole_test(s, mk)).dump();
    if (method == "gram") return io::to_json(gram_pole_test(s, mk)).dump();
    throw Error(ErrorCode::ValidationError, "method must be 'radial' or 'gram'");
}

std::string predict(const std::string& covariance, int m, const std::string& target, std::vector<int> truncations) {
    const auto cov = io::parse_covariance(parse(covariance));
    const auto t = io::parse_target(parse(target), cov.dim());
    const WindowSpec w{m, cov.dim()};
    if (truncations.empty()) throw Error(ErrorCode::ValidationError, "need at least one truncation");
    std::sort(truncations.begin(), truncations.end());
    auto r = best_linear_predictor(cov, w, t, truncations.back());
    r.curve = prediction_curve(cov, w, t, truncations);
    if (r.curve.size() >= 8) r.fit = rigidity_from_curve(r.curve);
    return io::to_json(r).dump();
}

std::string discrete_test(const std::string& density, int m, std::vector<int> k) {
    const auto s = io::parse_density(parse(density));
    if (!s.zeros()) throw Error(ErrorCode::MissingAnnotations, "the density needs annotated zeros");
    return io::to_json(k_rigid_discrete_test(s, *s.zeros(), m, MultiIndex(std::move(k)))).dump();
}

std::string dpp(const std::string& kernel, int k_cap) {
    return io::to_json(dpp_rigidity_order(io::parse_kernel(parse(kernel)), k_cap)).dump();
}

py::array_t<double> simulate(const std::string& density, int n, int replicates, std::uint64_t seed) {
    SimulationSpec spec;
    spec.density = io::parse_density(parse(density));
    spec.d = spec.density->dim();
    spec.n = n;
    spec.replicates = replicates;
    spec.seed = seed;
    Realizations r;
    {
        py::gil_scoped_release release;
        r = sample_gaussian(spec);
    }
    std::vector<py::ssize_t> shape{r.replicates, r.n};
    if (r.d == 2) shape.push_back(r.n);
    py::array_t<double> out(shape);
    std::copy(r.data.begin(), r.data.end(), out.mutable_data());
    return out;
}

double interpolation_limit(const std::string& density) {
    return interpolation_error_limit(io::parse_density(parse(density)));
}

int run_cli(const std::string& command, const std::string& config, const std::string& out,
            std::optional<std::uint64_t> seed, std::optional<int> k_cap) {
    py::gil_scoped_release release;
    return cli::run(command, {config, out, seed, k_cap});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Linear rigidity of stationary random measures (compiled core)";
    static py::exception<Error> rigidity_error(m, "RigidityError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(rigidity_error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });
    m.def("classify", &classify, py::arg("density"), py::arg("k_cap") = 2, py::arg("eps") = 0.5);
    m.def("pole_test", &pole_test, py::arg("density"), py::arg("k"), py::arg("method") = "radial");
    m.def("predict", &predict, py::arg("covariance"), py::arg("m"), py::arg("target"), py::arg("truncations"));
    m.def("discrete_test", &discrete_test, py::arg("density"), py::arg("m"), py::arg("k"));
    m.def("dpp", &dpp, py::arg("kernel"), py::arg("k_cap") = 1);
    m.def("simulate", &simulate, py::arg("density"), py::arg("n"), py::arg("replicates") = 1, py::arg("seed") = 0);
    m.def("interpolation_limit", &interpolation_limit, py::arg("density"));
    m.def("run_cli", &run_cli, py::arg("command"), py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
          py::arg("k_cap") = py::none());
    m.def("builtin_densities", [] { return builtin::names(); });
    m.def("builtin_kernels", [] { return kernels::names(); });
}
