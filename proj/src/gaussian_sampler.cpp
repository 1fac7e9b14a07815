#include "rigidity/gaussian_sampler.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "rigidity/detail/fftw_lock.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity {

namespace {
constexpr double pi = std::numbers::pi;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_power_of_two(int n) {
    int p = 1;
    while (p < n) p *= 2;
    return p;
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using Buffer = std::unique_ptr<fftw_complex[], FftwFree>;

Buffer alloc(std::size_t n) {
    auto* p = fftw_alloc_complex(n);
    if (!p) throw std::bad_alloc();
    return Buffer(p);
}

// Draws stationary Gaussian fields from the square roots of circulant eigenvalues.
class CirculantSampler {
public:
    CirculantSampler(const SimulationSpec& spec) : d_(spec.d), n_(spec.n), seed_(spec.seed) {
        if (d_ != 1 && d_ != 2) throw Error(ErrorCode::ValidationError, "simulation supports d = 1 or 2");
        if (!power_of_two(n_)) throw Error(ErrorCode::ValidationError, "simulation size must be a power of two");
        if (d_ == 2 && n_ > 1024) throw Error(ErrorCode::ValidationError, "2D simulations are limited to 1024^2");
        std::string why;
        for (int f = 1; f <= 8 && lambda_.empty(); f *= 2) {
            M_ = 2 * n_ * f;
            if (!spec.covariance && !spec.density) throw Error(ErrorCode::ValidationError, "simulation needs a density or covariance");
            CovarianceSequence cov(d_, 0);
            try {
                cov = spec_covariance(spec, M_ / 2);
            } catch (const Error& e) {
                why = e.what();
                break;
            }
            try_embedding(cov);
        }
        if (lambda_.empty() && spec.density) spectral(*spec.density);
        if (lambda_.empty())
            throw Error(ErrorCode::EmbeddingFailure,
                        "circulant embedding has negative eigenvalues and no usable density for spectral synthesis" +
                            (why.empty() ? std::string() : " (" + why + ")"));
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        auto a = alloc(size()), b = alloc(size());
        plan_ = d_ == 1 ? fftw_plan_dft_1d(M_, a.get(), b.get(), FFTW_FORWARD, FFTW_ESTIMATE)
                        : fftw_plan_dft_2d(M_, M_, a.get(), b.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~CirculantSampler() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        if (plan_) fftw_destroy_plan(plan_);
    }
    CirculantSampler(const CirculantSampler&) = delete;
    CirculantSampler& operator=(const CirculantSampler&) = delete;

    std::size_t size() const { return d_ == 1 ? M_ : static_cast<std::size_t>(M_) * M_; }
    std::size_t field_size() const { return d_ == 1 ? n_ : static_cast<std::size_t>(n_) * n_; }
    const std::string& method() const { return method_; }
    int embedding() const { return M_; }
    double min_eigenvalue() const { return min_rel_; }

    // Real part of the FFT of sqrt(lambda) times complex white noise.
    void draw(std::uint64_t replicate, double* out) const {
        PhiloxStream rng(seed_, replicate);
        auto in = alloc(size()), res = alloc(size());
        for (std::size_t j = 0; j < size(); ++j) {
            const double a = rng.normal(), b = rng.normal();
            in[j][0] = sqrt_lambda_[j] * a;
            in[j][1] = sqrt_lambda_[j] * b;
        }
        fftw_execute_dft(plan_, in.get(), res.get());
        if (d_ == 1) {
            for (int t = 0; t < n_; ++t) out[t] = res[t][0];
        } else {
            for (int t2 = 0; t2 < n_; ++t2)
                for (int t1 = 0; t1 < n_; ++t1) out[t1 + static_cast<std::size_t>(n_) * t2] = res[t1 * static_cast<std::size_t>(M_) + t2][0];
        }
    }

private:
    int lag(int j) const { return j <= M_ / 2 ? j : j - M_; }

    void try_embedding(const CovarianceSequence& cov) {
        const std::size_t S = size();
        auto buf = alloc(S);
        if (d_ == 1) {
            for (int j = 0; j < M_; ++j) {
                buf[j][0] = cov({std::abs(lag(j))});
                buf[j][1] = 0.0;
            }
        } else {
            for (int j1 = 0; j1 < M_; ++j1)
                for (int j2 = 0; j2 < M_; ++j2) {
                    buf[j1 * static_cast<std::size_t>(M_) + j2][0] = cov({lag(j1), lag(j2)});
                    buf[j1 * static_cast<std::size_t>(M_) + j2][1] = 0.0;
                }
        }
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            fftw_plan p = d_ == 1 ? fftw_plan_dft_1d(M_, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE)
                                  : fftw_plan_dft_2d(M_, M_, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
            fftw_execute(p);
            fftw_destroy_plan(p);
        }
        double lo = buf[0][0], hi = buf[0][0];
        for (std::size_t j = 0; j < S; ++j) {
            lo = std::min(lo, buf[j][0]);
            hi = std::max(hi, buf[j][0]);
        }
        min_rel_ = hi > 0 ? lo / hi : lo;
        if (!(hi > 0) || lo < -1e-10 * hi) return;
        lambda_.resize(S);
        sqrt_lambda_.resize(S);
        for (std::size_t j = 0; j < S; ++j) {
            lambda_[j] = std::max(0.0, buf[j][0]);
            sqrt_lambda_[j] = std::sqrt(lambda_[j] / static_cast<double>(S));
        }
        method_ = "circulant";
    }

    // eigenvalues (2 pi)^d s(2 pi j / M)
    void spectral(const SpectralDensity& s) {
        M_ = 2 * n_ * 8;
        const std::size_t S = size();
        lambda_.assign(S, 0.0);
        sqrt_lambda_.assign(S, 0.0);
        const double scale = std::pow(2.0 * pi, d_);
        double u[2];
        for (std::size_t j = 0; j < S; ++j) {
            const int j1 = d_ == 1 ? static_cast<int>(j) : static_cast<int>(j / M_);
            const int j2 = d_ == 1 ? 0 : static_cast<int>(j % M_);
            u[0] = 2.0 * pi * lag(j1) / M_;
            u[1] = 2.0 * pi * lag(j2) / M_;
            const double v = s(std::span<const double>(u, d_));
            if (!(v >= 0.0) || !std::isfinite(v)) {
                lambda_.clear();
                sqrt_lambda_.clear();
                return;
            }
            lambda_[j] = scale * v;
            sqrt_lambda_[j] = std::sqrt(lambda_[j] / static_cast<double>(S));
        }
        method_ = "spectral";
        min_rel_ = 0.0;
    }

    int d_, n_, M_ = 0;
    std::uint64_t seed_;
    std::vector<double> lambda_, sqrt_lambda_;
    std::string method_;
    double min_rel_ = 0.0;
    fftw_plan plan_ = nullptr;
};

}  // namespace

// ---------------------------------------------------------------------------

Philox4x32::Counter Philox4x32::block(Counter c, Key k) noexcept {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u, W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += W0;
            k[1] += W1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(M0, c[0], hi0, lo0);
        mulhilo(M1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

double PhiloxStream::uniform() noexcept {
    if (used_ >= 3) {
        buf_ = Philox4x32::block(ctr_, key_);
        if (++ctr_[0] == 0) ++ctr_[1];
        used_ = 0;
    }
    const std::uint64_t bits = (static_cast<std::uint64_t>(buf_[used_]) << 32) | buf_[used_ + 1];
    used_ += 2;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double PhiloxStream::normal() noexcept {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * pi * uniform();
    spare_ = r * std::sin(t);
    return r * std::cos(t);
}

CovarianceSequence spec_covariance(const SimulationSpec& spec, int radius) {
    if (spec.covariance) {
        const auto& c = *spec.covariance;
        if (c.dim() != spec.d) throw Error(ErrorCode::ValidationError, "covariance dimension does not match the spec");
        if (radius <= c.radius() || c.finite_support) return c.resized(radius);
        throw Error(ErrorCode::ValidationError, "covariance is needed up to lag " + std::to_string(radius) +
                                                    " but only " + std::to_string(c.radius()) + " is available");
    }
    if (!spec.density) throw Error(ErrorCode::ValidationError, "simulation needs a density or covariance");
    if (spec.density->dim() != spec.d || !spec.density->domain().is_torus())
        throw Error(ErrorCode::ValidationError, "simulation density must live on the torus of the spec dimension");
    return covariance_from_density(*spec.density, radius);
}

Realizations sample_gaussian(const SimulationSpec& spec) {
    if (spec.replicates < 1) throw Error(ErrorCode::ValidationError, "replicates must be >= 1");
    const CirculantSampler sampler(spec);
    Realizations out;
    out.d = spec.d;
    out.n = spec.n;
    out.replicates = spec.replicates;
    out.method = sampler.method();
    out.embedding_size = sampler.embedding();
    out.min_eigenvalue = sampler.min_eigenvalue();
    out.data.resize(sampler.field_size() * spec.replicates);
    parallel_for(spec.replicates, [&](std::size_t r) { sampler.draw(r, out.data.data() + r * sampler.field_size()); });
    return out;
}

EmpiricalCheck empirical_prediction_check(const SimulationSpec& spec, int m, const TargetFunctional& target, int N,
                                          int replicates) {
    if (replicates < 2) throw Error(ErrorCode::ValidationError, "need at least 2 replicates");
    const auto cov = spec_covariance(spec, 2 * N);
    const WindowSpec window{m, spec.d};
    const auto pred = best_linear_predictor(cov, window, target, N);

    SimulationSpec sim = spec;
    sim.n = std::max(spec.n, next_power_of_two(2 * N + 1));
    sim.replicates = replicates;
    const CirculantSampler sampler(sim);
    const int n = sim.n;
    auto offset = [&](const std::vector<int>& p) {
        std::size_t idx = 0, stride = 1;
        for (int x : p) {
            idx += static_cast<std::size_t>(x + N) * stride;
            stride *= n;
        }
        return idx;
    };
    std::vector<std::pair<std::size_t, double>> terms;
    for (const auto& a : window.points()) {
        const double g = target(a, window);
        if (g != 0.0) terms.emplace_back(offset(a), g);
    }
    for (std::size_t i = 0; i < pred.annulus.size(); ++i)
        if (pred.coefficients[i] != 0.0) terms.emplace_back(offset(pred.annulus[i]), -pred.coefficients[i]);

    std::vector<double> sq(replicates);
    parallel_for(replicates, [&](std::size_t r) {
        std::vector<double> field(sampler.field_size());
        sampler.draw(r, field.data());
        double e = 0.0;
        for (const auto& [idx, w] : terms) e += w * field[idx];
        sq[r] = e * e;
    });
    EmpiricalCheck out;
    out.replicates = replicates;
    out.method = sampler.method();
    out.empirical_mse = quad::pairwise_sum(sq) / replicates;
    out.theoretical_residual = pred.residual_variance;
    const double sd = pred.residual_variance * std::sqrt(2.0 / replicates);
    if (sd > 0.0) out.z_score = (out.empirical_mse - pred.residual_variance) / sd;
    else out.z_score = out.empirical_mse > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
    return out;
}

std::string spec_hash(const SimulationSpec& spec) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    mix(&spec.d, sizeof spec.d);
    mix(&spec.n, sizeof spec.n);
    mix(&spec.seed, sizeof spec.seed);
    mix(&spec.replicates, sizeof spec.replicates);
    const auto c = spec_covariance(spec, spec.d == 1 ? 16 : 4);
    for (double v : c.data()) mix(&v, sizeof v);
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

void write_realizations(const std::filesystem::path& path, const Realizations& r, const SimulationSpec& spec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ValidationError, "cannot open " + path.string());
    for (double v : r.data) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 8);
    }
    nlohmann::ordered_json side;
    side["byte_order"] = "little";
    side["dtype"] = "float64";
    side["method"] = r.method;
    side["seed"] = spec.seed;
    std::vector<int> shape{r.replicates};
    for (int i = 0; i < r.d; ++i) shape.push_back(r.n);
    side["shape"] = shape;
    side["spec_hash"] = spec_hash(spec);
    std::ofstream js(path.string() + ".json");
    js << side.dump(2) << "\n";
}

}  // namespace rigidity
