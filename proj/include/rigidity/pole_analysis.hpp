#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rigidity/spectral_density.hpp"

namespace rigidity {

/// Multi-index k in N^d with the componentwise partial order.
struct MultiIndex {
    std::vector<int> k;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> v);
    MultiIndex(std::initializer_list<int> v) : MultiIndex(std::vector<int>(v)) {}

    int dim() const noexcept { return static_cast<int>(k.size()); }
    int order() const noexcept;
    /// this <= other componentwise.
    bool precedes(const MultiIndex& other) const noexcept;
    std::string str() const;  ///< "(1,0)"

    static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(d, 0)); }
    /// All multi-indices with |k| == order (graded lexicographic, first axis highest).
    static std::vector<MultiIndex> of_order(int d, int order);
    /// All multi-indices with |k| <= order.
    static std::vector<MultiIndex> up_to(int d, int order);

    auto operator<=>(const MultiIndex&) const = default;
};

enum class PoleOutcome { Pole, NoPole, Undetermined };
enum class PoleMethod { RadialLadder, GramNullspace, AnnotatedExact };
const char* to_string(PoleOutcome v) noexcept;
const char* to_string(PoleMethod m) noexcept;

struct GramLevel {
    double delta = 0.0;                ///< absolute regularization added to s
    std::vector<double> eigenvalues;   ///< of the Jacobi-scaled Gram matrix, ascending
    double min_energy = 0.0;           ///< min of int |Q|^2/(s+delta) over Q with a_k = 1
};

struct PoleDiagnostics {
    double fitted_exponent = 0.0;  ///< alpha in s ~ c |u|^alpha (radial ladder)
    double fitted_ratio = 0.0;     ///< shell-to-shell ratio of the ladder, or of energy increments
    std::vector<double> ladder;    ///< shell terms (radial) or partial sums
    std::vector<double> partial_sums;
    std::vector<GramLevel> gram_spectra;
    /// Coefficients of u^m (in the original frequency variable), a_k = 1.
    std::optional<std::map<MultiIndex, double>> witness_polynomial;
    std::vector<double> witness_energy;  ///< int |Q|^2/(s+delta) along the delta ladder
    std::string note;
};

struct PoleVerdict {
    MultiIndex target;
    PoleOutcome verdict = PoleOutcome::Undetermined;
    PoleMethod method = PoleMethod::RadialLadder;
    double epsilon = 0.0;
    PoleDiagnostics diagnostics;
};

struct RadialOptions {
    int shells = 40;
    int fit_window = 20;
    double tau = 0.05;
    double divergence_slack = 1e-3;
    int directions = 512;
    double rel_tol = 1e-10;
};

/// Shell ladder for  int_{B(0,eps)} |u|^{2|k|} / s_hat(u) du  where s_hat(u)
/// is the supremum of s over the sphere of radius |u| (sampled directions).
/// Pole when the shell terms do not decay, NoPole when they decay
/// geometrically with ratio <= 1 - tau. d <= 3.
PoleVerdict radial_pole_test(const SpectralDensity& s, const MultiIndex& k, double eps = 0.5,
                             const RadialOptions& opt = {});

struct GramOptions {
    int degree_cap = -1;                             ///< -1: max(2, |k|)
    std::vector<double> eps_ladder{0.5, 0.25};
    /// Regularizations relative to the supremum of s on the ball.
    std::vector<double> delta_ladder{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
    int shells = 60;
    double rel_tol = 1e-10;
    double converge_ratio = 0.7;  ///< energy increments shrinking at least this fast: finite
    double diverge_ratio = 0.9;   ///< increments not shrinking: infinite
    double max_condition = 1e14;
};

/// Anisotropic k-pole test over polynomials of degree <= D on B(0, eps):
/// tracks the least regularized energy  int |Q|^2 / (s + delta)  among Q
/// with a_k = 1 as delta decreases. A bounded energy gives NoPole and the
/// minimizing polynomial as witness; an unbounded one gives Pole.
PoleVerdict gram_pole_test(const SpectralDensity& s, const MultiIndex& k, const GramOptions& opt = {});

/// Runs the Gram test for several targets sharing one set of Gram matrices.
std::vector<PoleVerdict> gram_pole_tests(const SpectralDensity& s, const std::vector<MultiIndex>& ks,
                                         const GramOptions& opt = {});

/// int_{B(0,eps)} |Q(u)|^2 / (s(u) + delta) du for each delta (absolute).
std::vector<double> polynomial_energy_ladder(const SpectralDensity& s, const std::map<MultiIndex, double>& q,
                                             double eps, const std::vector<double>& deltas);

/// Decided from the annotated finite order q at 0 for isotropic densities:
/// Pole iff |k| < q (no annotation at 0 means s(0) > 0 and NoPole).
PoleVerdict annotated_pole_test(const SpectralDensity& s, const MultiIndex& k);

struct FiniteOrderOptions {
    double eps = 0.25;
    RadialOptions ladder{};
};

/// Least q <= q_cap with  int_{B(u0,eps)} |u-u0|^{2q} / s(u) du < infinity, by
/// the shell ladder recentered at u0 (directional mean of 1/s).
std::optional<int> finite_pole_order(const SpectralDensity& s, const Point& u0, int q_cap = 10,
                                     const FiniteOrderOptions& opt = {});

struct SimpleReport {
    bool is_simple = false;
    std::vector<std::pair<Point, int>> poles;
    bool lower_bound_holds = false;
    double lower_bound_c = 0.0;
    double lower_bound_p = 0.0;
    std::vector<std::string> notes;
};

/// Checks the annotated zeros for finite order and samples the bound
/// s(u) >= c (1 + |u|)^{-p} away from them. Throws MissingAnnotations when
/// the density carries no zero annotations.
SimpleReport classify_simple(const SpectralDensity& s, int q_cap = 10);

enum class Rigidity { KRigid, NotKRigid, SufficientOnly, Undetermined };
const char* to_string(Rigidity r) noexcept;

struct ClassifierOptions {
    double eps = 0.5;
    RadialOptions radial{};
    GramOptions gram{};
    bool run_gram = true;
};

struct Classification {
    MultiIndex target;
    Rigidity verdict = Rigidity::Undetermined;
    std::string provenance;
    std::vector<PoleVerdict> tests;
};

/// Combines pole verdicts for one target with the structural flags of s.
Classification combine_verdicts(const SpectralDensity& s, const MultiIndex& k, std::vector<PoleVerdict> tests);

/// Runs the radial ladder and (when it does not already find a pole) the
/// Gram test at 0, then combines them.
Classification rigidity_classifier(const SpectralDensity& s, const MultiIndex& k, const ClassifierOptions& opt = {});

struct OrderClassification {
    int order = 0;
    Rigidity verdict = Rigidity::Undetermined;
    std::string provenance;
    std::vector<Classification> components;  ///< one per multi-index with |k| <= order
};

/// Integer rigidity order: k-rigid means rigid for every multi-index of
/// total order <= k.
std::vector<OrderClassification> classify_orders(const SpectralDensity& s, int k_cap,
                                                 const ClassifierOptions& opt = {});

/// Pole at k must imply Pole at every k' <= k. Returns human-readable
/// descriptions of violated pairs.
std::vector<std::string> check_downward_closure(const std::vector<PoleVerdict>& verdicts);

}  // namespace rigidity
