#include "rigidity/covariance.hpp"
#include "rigidity/detail/fftw_lock.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/quadrature.hpp"

namespace rigidity {

namespace {

constexpr double pi = std::numbers::pi;

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Decodes a flat box index into m (axis 0 fastest).
void decode(std::size_t flat, int radius, std::vector<int>& m) {
    const std::size_t side = 2 * static_cast<std::size_t>(radius) + 1;
    for (auto& mi : m) {
        mi = static_cast<int>(flat % side) - radius;
        flat /= side;
    }
}

}  // namespace

CovarianceSequence::CovarianceSequence(int d, int radius) : dim_(d), radius_(radius) {
    if (d < 1) throw Error(ErrorCode::ValidationError, "covariance dimension must be >= 1");
    if (radius < 0) throw Error(ErrorCode::ValidationError, "covariance radius must be >= 0");
    values_.assign(ipow(2 * static_cast<std::size_t>(radius) + 1, d), 0.0);
}

bool CovarianceSequence::contains(std::span<const int> m) const noexcept {
    for (int mi : m)
        if (mi < -radius_ || mi > radius_) return false;
    return true;
}

std::size_t CovarianceSequence::index(std::span<const int> m) const noexcept {
    const std::size_t side = 2 * static_cast<std::size_t>(radius_) + 1;
    std::size_t flat = 0, stride = 1;
    for (int mi : m) {
        flat += static_cast<std::size_t>(mi + radius_) * stride;
        stride *= side;
    }
    return flat;
}

double CovarianceSequence::operator()(std::span<const int> m) const noexcept {
    if (static_cast<int>(m.size()) != dim_ || !contains(m)) return 0.0;
    return values_[index(m)];
}

void CovarianceSequence::set(std::span<const int> m, double value) {
    if (static_cast<int>(m.size()) != dim_) throw Error(ErrorCode::ValidationError, "index has wrong dimension");
    if (!contains(m)) throw Error(ErrorCode::ValidationError, "index outside the covariance box");
    values_[index(m)] = value;
    std::vector<int> neg(m.begin(), m.end());
    for (auto& x : neg) x = -x;
    values_[index(neg)] = value;
}

CovarianceSequence CovarianceSequence::resized(int radius) const {
    CovarianceSequence out(dim_, radius);
    out.finite_support = finite_support;
    out.tail_bound = tail_bound;
    std::vector<int> m(dim_);
    for (std::size_t i = 0; i < out.values_.size(); ++i) {
        decode(i, radius, m);
        out.values_[i] = (*this)(m);
    }
    if (radius < radius_) {
        double tail = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            decode(i, radius_, m);
            if (!out.contains(m)) tail += std::abs(values_[i]);
        }
        if (tail > 0.0) {
            out.finite_support = false;
            out.tail_bound = tail + (finite_support ? 0.0 : tail_bound.value_or(0.0));
            if (!finite_support && !tail_bound) out.tail_bound.reset();
        }
    }
    return out;
}

CovarianceSequence CovarianceSequence::scaled(double c) const {
    CovarianceSequence out = *this;
    for (auto& v : out.values_) v *= c;
    if (out.tail_bound) *out.tail_bound *= std::abs(c);
    return out;
}

CovarianceSequence CovarianceSequence::from_1d(std::span<const double> c) {
    if (c.empty()) throw Error(ErrorCode::ValidationError, "empty covariance");
    CovarianceSequence out(1, static_cast<int>(c.size()) - 1);
    for (std::size_t i = 0; i < c.size(); ++i) out.set({static_cast<int>(i)}, c[i]);
    return out;
}

CovarianceCheck check_covariance(const CovarianceSequence& c, int gram_half_width) {
    CovarianceCheck rep;
    const int d = c.dim();
    const int R = c.radius();
    std::vector<int> m(d), neg(d);
    const double c0 = c(std::vector<int>(d, 0));
    for (std::size_t i = 0; i < c.data().size(); ++i) {
        decode(i, R, m);
        for (int k = 0; k < d; ++k) neg[k] = -m[k];
        const double a = c.data()[i];
        if (std::abs(a - c(neg)) > 1e-12 * std::max(std::abs(c0), 1e-300)) rep.even = false;
        if (std::abs(a) > c0 * (1.0 + 1e-12)) rep.bounded = false;
    }
    if (gram_half_width < 0) {
        const int cap = d == 1 ? 12 : (d == 2 ? 4 : 2);
        gram_half_width = std::min(R, cap);
    }
    const int side = 2 * gram_half_width + 1;
    const std::size_t n = ipow(static_cast<std::size_t>(side), d);
    std::vector<std::vector<int>> pts(n, std::vector<int>(d));
    for (std::size_t i = 0; i < n; ++i) decode(i, gram_half_width, pts[i]);
    Eigen::MatrixXd G(n, n);
    std::vector<int> diff(d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            for (int k = 0; k < d; ++k) diff[k] = pts[i][k] - pts[j][k];
            G(i, j) = c(diff);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    if (rep.min_eigenvalue < -1e-10 * std::abs(c0)) rep.psd = false;
    if (!rep.even) rep.violations.push_back("C(m) != C(-m)");
    if (!rep.bounded) rep.violations.push_back("|C(m)| exceeds C(0)");
    if (!rep.psd) rep.violations.push_back("Gram matrix is not positive semidefinite");
    return rep;
}

SpectralDensity density_from_covariance(const CovarianceSequence& c, const FrequencyGrid& grid) {
    if (!c.finite_support && !c.tail_bound)
        throw Error(ErrorCode::NonSummableCovariance,
                    "covariance support is not finite and no decay bound was declared");
    const int d = c.dim();
    const int R = c.radius();
    const double norm = std::pow(2.0 * pi, -d);

    // Nonnegativity on a grid fine enough to avoid aliasing.
    int n = grid.points_per_axis;
    if (n <= 0) {
        n = 64;
        while (n < 4 * R) n *= 2;
    }
    if (n < 2 * R + 1) throw Error(ErrorCode::ValidationError, "frequency grid is coarser than the covariance support");
    const std::size_t total = ipow(static_cast<std::size_t>(n), d);
    if (total > (std::size_t{1} << 26)) throw Error(ErrorCode::ValidationError, "frequency grid too large");
    {
        std::vector<std::complex<double>> buf(total, 0.0);
        std::vector<int> m(d);
        for (std::size_t i = 0; i < c.data().size(); ++i) {
            const double v = c.data()[i];
            if (v == 0.0) continue;
            decode(i, R, m);
            std::size_t flat = 0, stride = 1;
            for (int k = 0; k < d; ++k) {
                flat += static_cast<std::size_t>((m[k] % n + n) % n) * stride;
                stride *= n;
            }
            buf[flat] += v;
        }
        std::vector<int> dims(d, n);
        std::reverse(dims.begin(), dims.end());  // axis 0 is fastest in our layout
        auto* data = reinterpret_cast<fftw_complex*>(buf.data());
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            plan = fftw_plan_dft(d, dims.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& z : buf) lo = std::min(lo, z.real() * norm);
        const double slack = 1e-8 + c.tail_bound.value_or(0.0) * norm;
        if (lo < -slack) {
            std::ostringstream os;
            os << "synthesized density reaches " << lo << " on the frequency grid";
            throw Error(ErrorCode::NegativeDensity, os.str());
        }
    }

    SpectralDensity::Eval eval;
    if (d == 1) {
        auto a = std::make_shared<std::vector<double>>(R + 1);
        for (int k = 0; k <= R; ++k) (*a)[k] = c({k});
        // Clenshaw for sum_k a_k cos(k u) with the m and -m terms folded.
        eval = [a, norm](std::span<const double> u) {
            const double x = std::cos(u[0]);
            double b1 = 0.0, b2 = 0.0;
            for (std::size_t k = a->size() - 1; k >= 1; --k) {
                const double b0 = 2.0 * (*a)[k] + 2.0 * x * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            return norm * ((*a)[0] + x * b1 - b2);
        };
    } else {
        struct Term {
            std::vector<int> m;
            double weight;
        };
        auto terms = std::make_shared<std::vector<Term>>();
        std::vector<int> m(d);
        for (std::size_t i = 0; i < c.data().size(); ++i) {
            const double v = c.data()[i];
            if (v == 0.0) continue;
            decode(i, R, m);
            // keep one representative of each +-m pair
            int first = 0;
            for (int k = d - 1; k >= 0; --k)
                if (m[k] != 0) {
                    first = m[k];
                    break;
                }
            if (first < 0) continue;
            terms->push_back({m, first == 0 ? v : 2.0 * v});
        }
        eval = [terms, norm](std::span<const double> u) {
            double acc = 0.0;
            for (const auto& t : *terms) {
                double ph = 0.0;
                for (std::size_t k = 0; k < u.size(); ++k) ph += t.m[k] * u[k];
                acc += t.weight * std::cos(ph);
            }
            return norm * acc;
        };
    }
    std::vector<Atom> atoms;
    return SpectralDensity(Domain::torus(d), std::move(eval), {}, std::nullopt, std::move(atoms),
                           "trigonometric series of radius " + std::to_string(R));
}

namespace {

std::vector<double> cosine_moments_1d(const std::function<double(double)>& f, int R, double rel_tol) {
    quad::Options qo;
    qo.rel_tol = rel_tol;
    qo.max_panels = std::max(4000, 24 * (R + 1));
    const std::size_t K = static_cast<std::size_t>(R) + 1;
    auto res = quad::integrate_vector(
        [&](double u, std::span<double> out) {
            const double v = f(u);
            const double c1 = std::cos(u);
            double cm1 = c1, cm = 1.0;
            for (std::size_t k = 0; k < K; ++k) {
                out[k] = v * cm;
                const double next = 2.0 * c1 * cm - cm1;
                cm1 = cm;
                cm = next;
            }
        },
        -pi, pi, K, K, qo);
    if (!res.converged)
        throw Error(ErrorCode::QuadratureFailure,
                    "adaptive quadrature of the covariance did not converge (non-integrable singularity?)");
    return res.values;
}

// Tensor Gauss-Legendre evaluation of C(m) for |m|_inf <= R at a given number
// of panels per axis.
std::vector<double> tensor_moments(const SpectralDensity& s, int R, int panels) {
    const int d = s.dim();
    const auto& rule = quad::gauss_legendre(16);
    const int n = panels * 16;
    std::vector<double> x(n), w(n);
    const double h = 2.0 * pi / panels;
    for (int p = 0; p < panels; ++p)
        for (int j = 0; j < 16; ++j) {
            x[p * 16 + j] = -pi + h * (p + 0.5 * (rule.nodes[j] + 1.0));
            w[p * 16 + j] = 0.5 * h * rule.weights[j];
        }
    const int K = 2 * R + 1;
    Eigen::MatrixXcd E(K, n);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < n; ++j) E(k, j) = w[j] * std::polar(1.0, (k - R) * x[j]);

    const std::size_t total = ipow(static_cast<std::size_t>(n), d);
    Eigen::VectorXcd T(static_cast<Eigen::Index>(total));
    std::vector<double> u(d);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t r = i;
        for (int k = 0; k < d; ++k) {
            u[k] = x[r % n];
            r /= n;
        }
        const double v = s(u);
        if (!std::isfinite(v)) throw Error(ErrorCode::QuadratureFailure, "density is not finite on the quadrature grid");
        T[static_cast<Eigen::Index>(i)] = v;
    }
    std::size_t rest = total / n;
    int cur = n;
    for (int axis = 0; axis < d; ++axis) {
        Eigen::Map<Eigen::MatrixXcd> M(T.data(), cur, static_cast<Eigen::Index>(rest));
        Eigen::MatrixXcd P = (E * M).transpose();  // rest x K
        T = Eigen::Map<Eigen::VectorXcd>(P.data(), P.size());
        cur = (axis + 1 < d) ? n : K;
        rest = static_cast<std::size_t>(P.size()) / cur;
    }
    std::vector<double> out(static_cast<std::size_t>(T.size()));
    for (Eigen::Index i = 0; i < T.size(); ++i) out[static_cast<std::size_t>(i)] = T[i].real();
    return out;
}

}  // namespace

CovarianceSequence covariance_from_density(const SpectralDensity& s, int radius, const CovarianceQuadOptions& opt) {
    if (!s.domain().is_torus()) throw Error(ErrorCode::ValidationError, "covariance_from_density needs a torus domain");
    if (radius < 0) throw Error(ErrorCode::ValidationError, "radius must be >= 0");
    const int d = s.dim();
    CovarianceSequence out(d, radius);
    out.finite_support = false;
    std::vector<int> m(d);

    if (d == 1) {
        auto c = cosine_moments_1d([&](double u) { return s({u}); }, radius, opt.rel_tol);
        for (int k = 0; k <= radius; ++k) out.set({k}, c[k]);
    } else if (s.flags().separable && static_cast<int>(s.factors().size()) == d) {
        std::vector<std::vector<double>> axis(d);
        for (int k = 0; k < d; ++k) axis[k] = cosine_moments_1d(s.factors()[k], radius, opt.rel_tol);
        for (std::size_t i = 0; i < out.data().size(); ++i) {
            decode(i, radius, m);
            double v = 1.0;
            for (int k = 0; k < d; ++k) v *= axis[k][std::abs(m[k])];
            out.set(m, v);
        }
    } else {
        if (d > 3) throw Error(ErrorCode::ValidationError, "non-separable covariance quadrature supports d <= 3");
        const int max_n = d == 2 ? 2048 : 256;
        int panels = std::max(4, (radius + 1) / 2);
        auto prev = tensor_moments(s, radius, panels);
        bool ok = false;
        while (2 * panels * 16 <= max_n) {
            panels *= 2;
            auto next = tensor_moments(s, radius, panels);
            double scale = 0.0, diff = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                scale = std::max(scale, std::abs(next[i]));
                diff = std::max(diff, std::abs(next[i] - prev[i]));
            }
            prev = std::move(next);
            if (diff <= std::max(opt.rel_tol * 100.0, 1e-9) * scale) {
                ok = true;
                break;
            }
        }
        if (!ok) throw Error(ErrorCode::QuadratureFailure, "tensor quadrature levels disagree");
        for (std::size_t i = 0; i < prev.size(); ++i) {
            decode(i, radius, m);
            out.set(m, prev[i]);
        }
    }

    for (const auto& a : s.atoms()) {
        for (std::size_t i = 0; i < out.data().size(); ++i) {
            decode(i, radius, m);
            std::vector<int> neg(m);
            for (auto& x : neg) x = -x;
            if (out.index(neg) < i) continue;  // the pair was already updated
            double ph = 0.0;
            for (int k = 0; k < d; ++k) ph += m[k] * a.location[k];
            out.set(m, out(m) + a.mass * std::cos(ph));
        }
    }
    return out;
}

CovarianceSequence read_covariance_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty covariance CSV");
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(0, cell.find_first_not_of(" \t\r"));
            cell.erase(cell.find_last_not_of(" \t\r") + 1);
            out.push_back(cell);
        }
        return out;
    };
    const auto header = split(line);
    const int d = static_cast<int>(header.size()) - 1;
    if (d < 1 || header.back() != "value")
        throw Error(ErrorCode::ParseError, "covariance CSV header must be m1,..,md,value");
    for (int k = 0; k < d; ++k)
        if (header[k] != "m" + std::to_string(k + 1))
            throw Error(ErrorCode::ParseError, "unexpected covariance CSV column '" + header[k] + "'");

    std::vector<std::pair<std::vector<int>, double>> rows;
    int radius = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split(line);
        if (static_cast<int>(cells.size()) != d + 1)
            throw Error(ErrorCode::ParseError, "covariance CSV line " + std::to_string(lineno) + " has wrong arity");
        std::vector<int> m(d);
        double v = 0.0;
        try {
            for (int k = 0; k < d; ++k) {
                std::size_t pos = 0;
                m[k] = std::stoi(cells[k], &pos);
                if (pos != cells[k].size()) throw std::invalid_argument("trailing");
                radius = std::max(radius, std::abs(m[k]));
            }
            std::size_t pos = 0;
            v = std::stod(cells[d], &pos);
            if (pos != cells[d].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "covariance CSV line " + std::to_string(lineno) + " is not numeric");
        }
        rows.emplace_back(std::move(m), v);
    }
    CovarianceSequence out(d, radius);
    std::vector<char> seen(out.data().size(), 0);
    for (const auto& [m, v] : rows) {
        std::vector<int> neg(m);
        for (auto& x : neg) x = -x;
        const auto i = out.index(m), j = out.index(neg);
        if ((seen[i] || seen[j]) && std::abs(out(m) - v) > 1e-12 * std::max(1.0, std::abs(v)))
            throw Error(ErrorCode::ValidationError, "covariance CSV is not even or has duplicate entries");
        out.set(m, v);
        seen[i] = seen[j] = 1;
    }
    return out;
}

void write_covariance_csv(std::ostream& out, const CovarianceSequence& c) {
    const int d = c.dim();
    for (int k = 0; k < d; ++k) out << "m" << (k + 1) << ",";
    out << "value\n";
    std::vector<int> m(d);
    char buf[64];
    for (std::size_t i = 0; i < c.data().size(); ++i) {
        decode(i, c.radius(), m);
        for (int k = 0; k < d; ++k) out << m[k] << ",";
        std::snprintf(buf, sizeof buf, "%.17g", c.data()[i]);
        out << buf << "\n";
    }
}

}  // namespace rigidity
