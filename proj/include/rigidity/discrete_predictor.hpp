#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rigidity/covariance.hpp"
#include "rigidity/pole_analysis.hpp"

namespace rigidity {

/// A = [[-m, m]]^d.
struct WindowSpec {
    int m = 0;
    int d = 1;
    std::size_t size() const;
    std::vector<std::vector<int>> points() const;
    bool contains(const std::vector<int>& n) const noexcept;
};

/// gamma on A: the indicator (mass), a monomial n^k, or explicit weights.
struct TargetFunctional {
    enum class Kind { Mass, Moment, Custom };
    Kind kind = Kind::Mass;
    MultiIndex k;                                   ///< Moment
    std::map<std::vector<int>, double> weights;     ///< Custom

    static TargetFunctional mass() { return {}; }
    static TargetFunctional moment(MultiIndex k);
    static TargetFunctional custom(std::map<std::vector<int>, double> w);

    /// gamma(n) for n in the window; zero outside.
    double operator()(const std::vector<int>& n, const WindowSpec& w) const;
    std::string str() const;
};

enum class RigidFlag { Rigid, NotRigid, Undetermined };
const char* to_string(RigidFlag f) noexcept;

struct CurvePoint {
    int N = 0;
    double residual = 0.0;
};

struct CurveFit {
    RigidFlag flag = RigidFlag::Undetermined;
    double limit = 0.0;      ///< fitted a in a + b N^{-beta}
    double stderr_ = 0.0;    ///< standard error of a
    double b = 0.0;
    double beta = 0.0;
    double ci_low = 0.0, ci_high = 0.0;  ///< limit -+ 1.96 stderr
};

struct PredictionResult {
    std::vector<std::vector<int>> annulus;  ///< observation points, in solver order
    std::vector<double> coefficients;       ///< h(n) for each annulus point
    double target_variance = 0.0;           ///< Var(X(gamma))
    double residual_variance = 0.0;         ///< Var(X(gamma) - X(h)), clamped to >= 0
    double raw_residual = 0.0;              ///< unclamped value of the quadratic form
    double system_residual = 0.0;           ///< relative residual of the normal equations
    bool singular_gram = false;             ///< jitter was needed
    double jitter = 0.0;
    std::vector<CurvePoint> curve;
    std::optional<CurveFit> fit;

    std::map<std::vector<int>, double> coefficient_map() const;
};

/// Best linear predictor of X(gamma) from X(n), n in [[N]]^d \ [[m]]^d, by the
/// normal equations on the covariance Gram matrix. Cholesky first; a diagonal
/// jitter of at most 1e-12 C(0) is added when the Gram matrix is numerically
/// singular (reported through singular_gram).
PredictionResult best_linear_predictor(const CovarianceSequence& cov, const WindowSpec& window,
                                       const TargetFunctional& target, int N);

/// Residual variance for each truncation, solved concurrently.
std::vector<CurvePoint> prediction_curve(const CovarianceSequence& cov, const WindowSpec& window,
                                         const TargetFunctional& target, const std::vector<int>& Ns);

/// Fits residual(N) ~ a + b N^{-beta}, beta in [0.25, 3], by least squares in
/// relative error (weights 1/residual^2). Rigid iff
/// a <= max(1e-6, 3 se(a)); NotRigid iff a >= 10 se(a) and a >= 1e-4.
CurveFit rigidity_from_curve(const std::vector<CurvePoint>& curve);

/// Geometric truncations start, 2 start, ... up to max (inclusive when hit).
std::vector<int> geometric_truncations(int start, int max);

/// Limit of the residual for predicting X_0 from all X_n, n != 0:
/// (2 pi)^2 / int s^{-1} under the convention C(m) = int e^{imu} s(u) du.
double interpolation_error_limit(const SpectralDensity& s);

/// psi(u) = sum_n a_n e^{i n.u}.
struct TrigPolynomial {
    int d = 1;
    std::map<std::vector<int>, std::complex<double>> coefficients;

    std::complex<double> operator()(std::span<const double> u) const;
    int degree() const;  ///< max |n|_inf over nonzero coefficients
    /// sum_n n^k a_n, i.e. (-i)^{|k|} d^k psi(0).
    std::complex<double> moment(const MultiIndex& k) const;
    bool is_even(double tol = 1e-12) const;
    double norm() const;  ///< l2 norm of the coefficients
};

/// Zero of s on the torus with its finite order.
struct TorusZero {
    double location = 0.0;
    int multiplicity = 0;
};

struct LmrResult {
    bool lmr = false;
    int total_multiplicity = 0;
    std::optional<TrigPolynomial> witness;
    std::vector<double> witness_ladder_ratios;  ///< one per zero
};

/// Linear maximal rigidity on [[m]] in d = 1: LMR iff the poles of 1/s
/// (counted with their finite orders) number more than 2m. Otherwise
/// returns the witness prod_j (e^{iu} - e^{iu_j}) e^{-i floor(t/2) u}.
/// Multiplicities are checked against finite_pole_order and the zero set must
/// be symmetric; violations throw InconsistentAnnotations.
LmrResult lmr_test_1d(const SpectralDensity& s, const std::vector<TorusZero>& zeros, int m);

struct DiscreteRigidityResult {
    bool rigid = false;
    bool determined = true;  ///< false when the numeric path is inconclusive
    std::optional<TrigPolynomial> witness;
    std::vector<double> energies;  ///< numeric path: least energy along the delta ladder
    std::string note;
};

struct DiscreteGramOptions {
    std::vector<double> delta_ladder{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};  ///< relative to max s
    double converge_ratio = 0.7;
    double diverge_ratio = 0.9;
    double bump_radius = 2.5;  ///< capped at half the distance between zeros
};

/// k-rigidity on [[m]]^d: rigid iff every psi in E([[m]]^d) with
/// int |psi|^2 / s < infinity has sum_n n^k a_n = 0. Exact root factoring in
/// d = 1; in d = 2 a regularized Gram test over trigonometric monomials
/// (zeros of s must be annotated, isolated points).
DiscreteRigidityResult k_rigid_discrete_test(const SpectralDensity& s, const std::vector<ZeroAnnotation>& zeros, int m,
                                             const MultiIndex& k, const DiscreteGramOptions& opt = {});

/// Convergence ladder of int_{B(u0, eps)} |psi|^2 / s near each zero; returns
/// the fitted shell ratios (< 1 - tau means finite). In d = 1 psi is expanded
/// about each zero and Taylor coefficients at the rounding floor are dropped.
std::vector<double> witness_ladder(const SpectralDensity& s, const TrigPolynomial& psi,
                                   const std::vector<Point>& zeros, bool* finite);

}  // namespace rigidity
