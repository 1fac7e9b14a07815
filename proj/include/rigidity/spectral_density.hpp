#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rigidity/domain.hpp"

namespace rigidity {

struct DensityFlags {
    bool isotropic = false;
    bool separable = false;
    bool simple = false;
};

/// A declared zero of s (a pole of 1/s) with its claimed finite order q:
/// the least q with  int_{B(u0, eps)} |u - u0|^{2q} / s(u) du < infinity.
struct ZeroAnnotation {
    Point location;
    int order = 0;
};

/// Point mass of the singular part of the spectral measure.
struct Atom {
    Point location;
    double mass = 0.0;
};

/// Density of the absolutely continuous part of a spectral measure, plus the
/// structural information the rigidity tests rely on. Immutable; copies share
/// the underlying callable.
class SpectralDensity {
public:
    using Eval = std::function<double(std::span<const double>)>;
    using Factor = std::function<double(double)>;

    SpectralDensity(Domain domain, Eval eval, DensityFlags flags = {},
                    std::optional<std::vector<ZeroAnnotation>> zeros = std::nullopt,
                    std::vector<Atom> atoms = {}, std::string description = {});

    /// Evaluates s(u); torus coordinates are wrapped into [-pi, pi).
    double operator()(std::span<const double> u) const;
    double operator()(std::initializer_list<double> u) const {
        return (*this)(std::span<const double>(u.begin(), u.size()));
    }

    const Domain& domain() const noexcept { return domain_; }
    int dim() const noexcept { return domain_.dim; }
    const DensityFlags& flags() const noexcept { return flags_; }
    const std::optional<std::vector<ZeroAnnotation>>& zeros() const noexcept { return zeros_; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    const std::string& description() const noexcept { return description_; }
    /// Per-axis factors s_i with s(u) = prod_i s_i(u_i), when declared.
    const std::vector<Factor>& factors() const noexcept { return factors_; }

    SpectralDensity with_flags(DensityFlags flags) const;
    SpectralDensity with_zeros(std::vector<ZeroAnnotation> zeros) const;
    SpectralDensity with_factors(std::vector<Factor> factors) const;
    SpectralDensity with_atoms(std::vector<Atom> atoms) const;
    /// c * s, with atoms scaled alike.
    SpectralDensity scaled(double c) const;

private:
    Domain domain_;
    Eval eval_;
    DensityFlags flags_;
    std::optional<std::vector<ZeroAnnotation>> zeros_;
    std::vector<Atom> atoms_;
    std::string description_;
    std::vector<Factor> factors_;
};

/// Densities used throughout the examples and tests. Discrete (torus) models
/// are normalized to C(0) = 1.
namespace builtin {

SpectralDensity white_noise(int d = 1);
SpectralDensity poisson(int d);
/// c |u|^alpha on R^d.
SpectralDensity power_law(int d, double alpha, double c = 1.0);
/// Unit-intensity Ginibre structure factor 1 - exp(-|u|^2 / (4 pi)).
SpectralDensity ginibre();
/// c |u|^4 in d = 2: the small-frequency behavior of the planar GAF zeros.
SpectralDensity gaf_scaling(double c = 1.0);
/// X_n = (e_n - e_{n-1}) / sqrt(2): s(u) = (1 - cos u) / (2 pi).
SpectralDensity ma1_unit_root();
/// AR(1) with coefficient phi, unit variance.
SpectralDensity ar1(double phi);
/// (u - 1)^2 (u + 1)^2 on [-pi, pi), normalized to C(0) = 1.
SpectralDensity discrete_example();
/// (u1 - u2)^2 on R^2.
SpectralDensity anisotropic_line();
/// u1^4 on R^2.
SpectralDensity quartic_axis();
/// 1 on the ball of radius 1/2, u2^2 / (1 + u2^10) / (1 + u1^10) outside.
SpectralDensity line_zero_counterexample();

std::vector<std::string> names();
/// Looks up a builtin by name; `params` supplies optional numeric
/// parameters (alpha, c, phi, d).
SpectralDensity by_name(const std::string& name,
                        const std::function<std::optional<double>(const std::string&)>& params);

}  // namespace builtin

struct InvariantReport {
    bool nonnegative = true;
    bool even = true;
    bool isotropic = true;   ///< vacuous unless the isotropic flag is set
    bool separable = true;   ///< vacuous unless the separable flag is set
    double worst_evenness = 0.0;
    double worst_isotropy = 0.0;
    double worst_separability = 0.0;
    double min_value = 0.0;
    std::vector<std::string> violations;

    bool ok() const noexcept { return nonnegative && even && isotropic && separable; }
};

/// Samples s at deterministic quasi-random points and checks nonnegativity,
/// evenness (1e-12 relative) and the declared isotropy (1e-9) / separability.
InvariantReport check_invariants(const SpectralDensity& s, int samples = 512);

enum class LadderVerdict { Convergent, Divergent, Undetermined };
const char* to_string(LadderVerdict v) noexcept;

struct TemperednessReport {
    std::vector<double> shell_terms;   ///< term 0 is the unit ball, then [2^j, 2^{j+1}]
    std::vector<double> partial_sums;
    double fitted_ratio = 0.0;
    LadderVerdict verdict = LadderVerdict::Undetermined;
};

struct LadderOptions {
    int shells = 40;
    int fit_window = 20;
    double tau = 0.05;           ///< convergent iff fitted ratio <= 1 - tau
    double divergence_slack = 1e-3;  ///< divergent iff fitted ratio >= 1 - slack
    double quad_rel_tol = 1e-10;
};

/// Partial sums of  int (1 + |u|)^{-2(d+1)} s(u) du  over dyadic shells,
/// with a ratio-test verdict. Euclidean domains with d <= 3.
TemperednessReport validate_temperedness(const SpectralDensity& s, const LadderOptions& opt = {});

}  // namespace rigidity
