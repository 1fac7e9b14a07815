#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rigidity/spectral_density.hpp"

namespace rigidity {

/// Covariances C(m) = E(X_0 X_m) of a stationary process on Z^d, stored on
/// the box |m|_inf <= radius. Entries outside the box are zero when the
/// support is declared finite; otherwise `tail_bound` (if any) bounds
/// sum_{|m|_inf > radius} |C(m)|.
class CovarianceSequence {
public:
    CovarianceSequence(int d, int radius);

    int dim() const noexcept { return dim_; }
    int radius() const noexcept { return radius_; }
    Domain domain() const { return Domain::torus(dim_); }

    /// C(m); zero outside the stored box.
    double operator()(std::span<const int> m) const noexcept;
    double operator()(std::initializer_list<int> m) const noexcept {
        return (*this)(std::span<const int>(m.begin(), m.size()));
    }
    /// Sets C(m) and C(-m).
    void set(std::span<const int> m, double value);
    void set(std::initializer_list<int> m, double value) {
        set(std::span<const int>(m.begin(), m.size()), value);
    }

    bool finite_support = true;
    std::optional<double> tail_bound;

    /// Raw box storage, axis 0 fastest, offset by radius.
    const std::vector<double>& data() const noexcept { return values_; }
    std::size_t index(std::span<const int> m) const noexcept;
    bool contains(std::span<const int> m) const noexcept;

    /// Same sequence restricted (or zero-padded) to a new radius.
    CovarianceSequence resized(int radius) const;

    /// c * C.
    CovarianceSequence scaled(double c) const;

    /// Builds a sequence from C(0..) in d = 1.
    static CovarianceSequence from_1d(std::span<const double> c);

private:
    int dim_;
    int radius_;
    std::vector<double> values_;
};

struct CovarianceCheck {
    bool even = true;
    bool bounded = true;       ///< |C(m)| <= C(0)
    bool psd = true;           ///< Gram on a box has eigenvalues >= -1e-10 C(0)
    double min_eigenvalue = 0.0;
    std::vector<std::string> violations;
    bool ok() const noexcept { return even && bounded && psd; }
};

/// Checks evenness, |C(m)| <= C(0) and positive semidefiniteness of the
/// Toeplitz Gram matrix on the box of half-width `gram_half_width` (default:
/// min(radius, 12) in d = 1, smaller in higher d).
CovarianceCheck check_covariance(const CovarianceSequence& c, int gram_half_width = -1);

/// Frequency grid for the nonnegativity check of density_from_covariance.
struct FrequencyGrid {
    int points_per_axis = 0;  ///< 0 selects max(64, 4 * radius) rounded to a power of two
};

/// s(u) = (2 pi)^{-d} sum_m C(m) cos(m . u). Throws NonSummableCovariance for
/// an infinite support without tail bound, NegativeDensity if the synthesized
/// density dips below -1e-8 on the grid.
SpectralDensity density_from_covariance(const CovarianceSequence& c, const FrequencyGrid& grid = {});

struct CovarianceQuadOptions {
    double rel_tol = 1e-11;
};

/// C(m) = int_{T^d} e^{i m.u} s(u) du (+ atoms) for |m|_inf <= radius.
/// Throws QuadratureFailure if refinement does not converge.
CovarianceSequence covariance_from_density(const SpectralDensity& s, int radius,
                                           const CovarianceQuadOptions& opt = {});

/// CSV with header m1,..,md,value. Missing entries are zero; entries given
/// for both m and -m must agree.
CovarianceSequence read_covariance_csv(std::istream& in);
void write_covariance_csv(std::ostream& out, const CovarianceSequence& c);

}  // namespace rigidity
