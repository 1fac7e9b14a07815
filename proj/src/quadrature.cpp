#include "rigidity/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>

namespace rigidity::quad {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        kron += wgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
    }
    return Panel{a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, const Options& opt) {
    Result res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<Panel> heap;
    heap.push(gk15(f, a, b));
    double total = heap.top().value;
    double err = heap.top().error;
    int panels = 1;
    while (!(err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) && panels < opt.max_panels) {
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = gk15(f, worst.a, mid);
        Panel right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
        if (!std::isfinite(total)) break;
    }
    // Re-sum from the panels so the result does not carry incremental drift.
    std::vector<Panel> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    std::vector<double> vals, errs;
    for (const auto& p : all) {
        vals.push_back(p.value);
        errs.push_back(p.error);
    }
    res.value = pairwise_sum(vals);
    res.error = pairwise_sum(errs);
    res.panels = panels;
    res.converged = std::isfinite(res.value) &&
                    res.error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(res.value));
    return res;
}

namespace {

struct VPanel {
    double a = 0, b = 0;
    std::vector<double> value;
    std::vector<double> error;
};

VPanel gk15_vector(const VectorIntegrand& f, double a, double b, std::size_t dim,
                   std::vector<double>& scratch) {
    VPanel p;
    p.a = a;
    p.b = b;
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::vector<double> kron(dim, 0.0), gauss(dim, 0.0);
    scratch.assign(dim, 0.0);
    f(c, scratch);
    for (std::size_t i = 0; i < dim; ++i) {
        kron[i] = scratch[i] * wgk[7];
        gauss[i] = scratch[i] * wg[3];
    }
    std::vector<double> s2(dim);
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        f(c - dx, scratch);
        f(c + dx, s2);
        for (std::size_t i = 0; i < dim; ++i) {
            const double s = scratch[i] + s2[i];
            kron[i] += wgk[j] * s;
            if (j % 2 == 1) gauss[i] += wg[j / 2] * s;
        }
    }
    p.value.resize(dim);
    p.error.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        p.value[i] = kron[i] * h;
        p.error[i] = std::abs((kron[i] - gauss[i]) * h);
    }
    return p;
}

}  // namespace

VectorResult integrate_vector(const VectorIntegrand& f, double a, double b, std::size_t dim,
                              std::size_t group_size, const Options& opt) {
    VectorResult res;
    res.values.assign(dim, 0.0);
    if (dim == 0 || a == b) {
        res.converged = true;
        return res;
    }
    if (group_size == 0 || dim % group_size != 0) group_size = dim;
    const std::size_t groups = dim / group_size;

    std::vector<double> scratch;
    std::vector<VPanel> panels;
    const int initial = std::max(1, opt.initial_panels);
    std::vector<double> total(dim, 0.0);
    for (int p = 0; p < initial; ++p) {
        const double lo = a + (b - a) * p / initial;
        const double hi = p + 1 == initial ? b : a + (b - a) * (p + 1) / initial;
        panels.push_back(gk15_vector(f, lo, hi, dim, scratch));
        for (std::size_t i = 0; i < dim; ++i) total[i] += panels.back().value[i];
    }
    std::vector<double> scales(groups);
    std::vector<double> bad;
    // Panel badness: worst group error relative to that group's magnitude.
    auto badness = [&](const std::vector<double>& e) {
        double worst = 0.0;
        for (std::size_t g = 0; g < groups; ++g) {
            double m = 0.0;
            for (std::size_t i = g * group_size; i < (g + 1) * group_size; ++i) m = std::max(m, e[i]);
            worst = std::max(worst, m / scales[g]);
        }
        return worst;
    };

    for (;;) {
        for (std::size_t g = 0; g < groups; ++g) {
            double s = 0.0;
            for (std::size_t i = g * group_size; i < (g + 1) * group_size; ++i)
                s = std::max(s, std::abs(total[i]));
            scales[g] = std::max(s, opt.abs_tol);
        }
        bad.resize(panels.size());
        double sum_bad = 0.0;
        for (std::size_t k = 0; k < panels.size(); ++k) {
            bad[k] = badness(panels[k].error);
            sum_bad += bad[k];
        }
        bool finite = true;
        for (double v : total) finite = finite && std::isfinite(v);
        if (sum_bad <= opt.rel_tol || !finite || static_cast<int>(panels.size()) >= opt.max_panels) {
            res.error = sum_bad;
            res.converged = finite && sum_bad <= opt.rel_tol;
            break;
        }
        // Split the worst panels until they cover half of the outstanding error.
        std::vector<std::size_t> order(panels.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return bad[x] != bad[y] ? bad[x] > bad[y] : x < y;
        });
        double covered = 0.0;
        std::vector<std::size_t> split;
        for (std::size_t k : order) {
            if (covered >= 0.5 * sum_bad) break;
            if (static_cast<int>(panels.size() + split.size()) >= opt.max_panels) break;
            covered += bad[k];
            split.push_back(k);
        }
        for (std::size_t k : split) {
            VPanel old = std::move(panels[k]);
            const double mid = 0.5 * (old.a + old.b);
            VPanel left = gk15_vector(f, old.a, mid, dim, scratch);
            VPanel right = gk15_vector(f, mid, old.b, dim, scratch);
            for (std::size_t i = 0; i < dim; ++i)
                total[i] += left.value[i] + right.value[i] - old.value[i];
            panels[k] = std::move(left);
            panels.push_back(std::move(right));
        }
    }

    std::sort(panels.begin(), panels.end(), [](const VPanel& x, const VPanel& y) { return x.a < y.a; });
    std::vector<double> col(panels.size());
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = 0; k < panels.size(); ++k) col[k] = panels[k].value[i];
        res.values[i] = pairwise_sum(col);
    }
    res.panels = static_cast<int>(panels.size());
    return res;
}

const Rule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(r)).first->second;
}

double pairwise_sum(std::span<const double> x) noexcept {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

}  // namespace rigidity::quad
