#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "rigidity/covariance.hpp"
#include "rigidity/discrete_predictor.hpp"
#include "rigidity/dpp.hpp"
#include "rigidity/gaussian_sampler.hpp"
#include "rigidity/pole_analysis.hpp"
#include "rigidity/spectral_density.hpp"

namespace rigidity::io {

using Json = nlohmann::json;

/// Throws ParseError naming the first key of `j` not in `allowed`.
void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// Reads a JSON file; ParseError on syntax errors.
Json read_json(const std::filesystem::path& path);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string dump(const Json& j);

/// Density document:
///   {"domain": {"kind": "torus"|"euclidean", "d": int},
///    "density": {"kind": "expression", "expr": "..."} |
///               {"kind": "builtin", "name": "...", "params": {...}} |
///               {"kind": "table", "lo": [..], "hi": [..], "n": [..], "values": [..]},
///    "flags": {...}, "zeros": [{"location": [..], "order": q}],
///    "atoms": [{"location": [..], "mass": m}], "description": "..."}
/// A string value is read as a path relative to `base`.
SpectralDensity parse_density(const Json& j, const std::filesystem::path& base = {});
Json density_summary(const SpectralDensity& s);

/// {"csv": path} | {"d": int, "values": [{"m": [..], "value": v}], "finite_support": bool}
/// or a path string to a CSV file.
CovarianceSequence parse_covariance(const Json& j, const std::filesystem::path& base = {});

/// {"kind": "mass"} | {"kind": "moment", "k": [..]} | {"kind": "custom", "weights": [{"m": [..], "w": v}]}
TargetFunctional parse_target(const Json& j, int d);

/// "ginibre" | "sine" | "tensor_sinc" | "gaussian" or
/// {"kind": "custom", "d": int, "kappa": "expr", "isotropic": bool, "intensity": v}
DppKernel parse_kernel(const Json& j);

Json to_json(const MultiIndex& k);
Json to_json(const PoleVerdict& v);
Json to_json(const Classification& c);
Json to_json(const OrderClassification& o);
Json to_json(const CurveFit& f);
Json to_json(const PredictionResult& r);
Json to_json(const TrigPolynomial& p);
Json to_json(const LmrResult& r);
Json to_json(const DiscreteRigidityResult& r);
Json to_json(const StructureFactor& s);
Json to_json(const DppOrderReport& r);
Json to_json(const EmpiricalCheck& c);
Json to_json(const SimpleReport& r);

/// Finite doubles as numbers, non-finite ones as the strings "inf", "-inf", "nan".
Json number(double v);

}  // namespace rigidity::io
