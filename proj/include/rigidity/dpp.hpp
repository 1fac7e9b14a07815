#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rigidity/pole_analysis.hpp"
#include "rigidity/spectral_density.hpp"

namespace rigidity {

/// Stationary determinantal kernel through its reduced modulus
/// kappa(x) = |K(0, x)| / K(0, 0) and intensity K(0, 0).
/// The structure factor is 1 - intensity * F(kappa^2).
struct DppKernel {
    using Fn = std::function<double(std::span<const double>)>;

    int d = 1;
    Fn kappa;
    double intensity = 1.0;
    bool isotropic = false;
    /// kappa(x) = prod_i factors[i](x_i), when set.
    std::vector<std::function<double(double)>> factors;
    /// Closed-form F(kappa^2)(u), if known.
    std::optional<Fn> kappa_sq_ft;
    /// Closed-form 1 - intensity F(kappa^2)(u), evaluated without cancellation.
    std::optional<Fn> structure_factor;
    std::string name;

    /// Same process with space rescaled so that the intensity is 1:
    /// x -> intensity^{1/d} x.
    DppKernel unit_intensity() const;
    /// Dilation x -> c x of the point process (intensity c^{-d} times).
    DppKernel dilated(double c) const;
};

struct KernelCheck {
    bool ok = true;
    double kappa_sq_integral = 0.0;  ///< int kappa^2
    double truncation_radius = 0.0;  ///< kappa^2 < 1e-14 beyond (capped)
    bool tail_resolved = true;       ///< false when the cap was hit
    std::vector<std::string> violations;
};

/// kappa(0) = 1, 0 <= kappa <= 1, kappa^2 integrable and 0 <= F(kappa^2) <= 1
/// on sampled points.
KernelCheck check_kernel(const DppKernel& k);

struct StructureFactorOptions {
    bool normalize_intensity = true;
    double hyperuniform_tol = 1e-10;
    double mismatch_tol = 1e-6;
    double agreement_tol = 1e-8;
    bool verify_closed_form = true;
};

struct StructureFactor {
    SpectralDensity s;
    double s_at_zero = 0.0;
    bool hyperuniform = false;
    bool closed_form = false;
    /// Largest |closed form - numeric| of intensity F(kappa^2) on the check points.
    std::optional<double> max_mismatch;
    std::vector<std::string> warnings;  ///< e.g. NotHyperuniformWarning
};

/// s = 1 - F(kappa^2) on R^d (unit intensity unless disabled). Numeric
/// transforms use the radial reduction for isotropic kernels, products of 1D
/// transforms for tensor kernels, and a 2D tensor rule otherwise.
StructureFactor structure_factor_from_kernel(const DppKernel& k, const StructureFactorOptions& opt = {});

/// intensity F(kappa^2)(u) by quadrature (raw coordinates, no closed form).
/// Throws QuadratureFailure when two resolutions disagree beyond tol.
double numeric_kappa_sq_ft(const DppKernel& k, std::span<const double> u, double agreement_tol = 1e-8);

struct DppOrderReport {
    StructureFactor factor;
    std::vector<OrderClassification> orders;
    int max_rigid_order = -1;  ///< largest k with KRigid at every order <= k; -1 if none
    bool determined = true;
};

/// Classifies orders 0..k_cap of the structure factor with the simple flag
/// set and the zero at 0 annotated when hyperuniform.
DppOrderReport dpp_rigidity_order(const DppKernel& k, int k_cap, const ClassifierOptions& opt = {},
                                  const StructureFactorOptions& sf = {});

namespace kernels {

/// Planar Ginibre: |K(0, x)| = exp(-|x|^2 / 2) / pi.
DppKernel ginibre();
/// Sine kernel in d = 1: K(0, x) = sin(pi x) / (pi x).
DppKernel sine();
/// sinc(x1) sinc(x2) in d = 2.
DppKernel tensor_sinc();
/// exp(-pi |x|^2 / 2) in d = 3 (unit intensity).
DppKernel gaussian(int d = 3);
/// kappa from an expression in x1..xd / r; intensity 1.
DppKernel custom(int d, const std::string& kappa_expression, bool isotropic);

std::vector<std::string> names();
DppKernel by_name(const std::string& name);

}  // namespace kernels

}  // namespace rigidity
