#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace rigidity {

/// Frequency-side domain of a stationary field: the Fourier dual of R^d
/// (Euclidean) or of Z^d (the torus [-pi, pi)^d).
struct Domain {
    enum class Kind { Euclidean, Torus };

    Kind kind = Kind::Euclidean;
    int dim = 1;

    static Domain euclidean(int d);
    static Domain torus(int d);

    bool is_torus() const noexcept { return kind == Kind::Torus; }

    /// Maps a torus coordinate into [-pi, pi). Identity for Euclidean domains.
    double wrap(double x) const noexcept {
        if (!is_torus()) return x;
        constexpr double two_pi = 2.0 * std::numbers::pi;
        if (x >= -std::numbers::pi && x < std::numbers::pi) return x;
        double y = std::fmod(x + std::numbers::pi, two_pi);
        if (y < 0) y += two_pi;
        return y - std::numbers::pi;
    }

    std::string kind_name() const { return is_torus() ? "torus" : "euclidean"; }

    bool operator==(const Domain&) const = default;
};

using Point = std::vector<double>;

inline double norm2(std::span<const double> u) noexcept {
    double s = 0.0;
    for (double x : u) s += x * x;
    return std::sqrt(s);
}

}  // namespace rigidity
