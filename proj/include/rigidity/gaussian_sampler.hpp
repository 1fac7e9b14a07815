#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rigidity/covariance.hpp"
#include "rigidity/discrete_predictor.hpp"
#include "rigidity/spectral_density.hpp"

namespace rigidity {

/// Philox4x32-10 counter-based generator.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Counter block(Counter ctr, Key key) noexcept;
};

/// Stream of doubles for (seed, stream): counter words 2..3 hold the stream,
/// words 0..1 the position.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept;
    double uniform() noexcept;  ///< in (0, 1)
    double normal() noexcept;   ///< Box-Muller

private:
    Philox4x32::Key key_;
    Philox4x32::Counter ctr_;
    Philox4x32::Counter buf_{};
    int used_ = 4;
    std::optional<double> spare_;
};

struct SimulationSpec {
    std::optional<SpectralDensity> density;
    std::optional<CovarianceSequence> covariance;
    int d = 1;
    int n = 1024;            ///< length (d = 1) or side (d = 2); power of two
    std::uint64_t seed = 0;
    int replicates = 1;
};

struct Realizations {
    int d = 1;
    int n = 0;
    int replicates = 0;
    std::vector<double> data;  ///< replicate-major; within a replicate axis 0 fastest
    std::string method;        ///< "circulant" or "spectral"
    int embedding_size = 0;
    double min_eigenvalue = 0.0;  ///< of the circulant embedding, relative to the largest

    std::size_t field_size() const { return d == 1 ? n : static_cast<std::size_t>(n) * n; }
    double at(int replicate, std::size_t i) const { return data[replicate * field_size() + i]; }
};

/// Covariance of the spec on the box of the given radius (from the density if none is given).
CovarianceSequence spec_covariance(const SimulationSpec& spec, int radius);

/// Exact circulant embedding (grown up to 8x when the first embedding has
/// negative eigenvalues), then spectral synthesis from the density.
/// Throws EmbeddingFailure when neither applies.
Realizations sample_gaussian(const SimulationSpec& spec);

struct EmpiricalCheck {
    double empirical_mse = 0.0;
    double theoretical_residual = 0.0;
    double z_score = 0.0;
    int replicates = 0;
    std::string method;
};

/// Applies the best linear predictor for (m, target, N) to simulated paths and
/// compares the mean squared error with the predicted residual variance.
EmpiricalCheck empirical_prediction_check(const SimulationSpec& spec, int m, const TargetFunctional& target, int N,
                                          int replicates);

/// FNV-1a hash of the spec's covariance, sizes and seed.
std::string spec_hash(const SimulationSpec& spec);

/// Writes little-endian float64 data plus a JSON sidecar (<path>.json).
void write_realizations(const std::filesystem::path& path, const Realizations& r, const SimulationSpec& spec);

}  // namespace rigidity
