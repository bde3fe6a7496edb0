#pragma once

#include "fsde/engine.hpp"
#include "fsde/segment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace fsde {

struct DiscreteDist {
    std::vector<double> atoms;
    std::vector<double> weights;

    void validate() const {
        if (atoms.size() != weights.size() || atoms.empty())
            throw std::invalid_argument("DiscreteDist: atoms/weights mismatch");
        double s = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("DiscreteDist: bad weight");
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("DiscreteDist: weights must sum to 1");
    }
};

namespace detail {
/// Quantile resample to n points: empirical (step) quantile of the sorted
/// sample at levels (i+1/2)/n, so duplicating a sample set leaves it fixed.
inline std::vector<double> quantile_resample(std::vector<double> sorted, size_t n) {
    std::vector<double> out(n);
    const size_t m = sorted.size();
    for (size_t i = 0; i < n; ++i) {
        const double lvl = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const size_t k = std::min(static_cast<size_t>(lvl * static_cast<double>(m)), m - 1);
        out[i] = sorted[k];
    }
    return out;
}
} // namespace detail

/// Exact empirical W2 on the line: sorted-sample pairing is the optimal
/// coupling. Unequal sizes are quantile-resampled to the larger count.
inline double w2_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::domain_error("w2_1d: empty sample set");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa.size() != sb.size()) {
        const size_t n = std::max(sa.size(), sb.size());
        sa = detail::quantile_resample(std::move(sa), n);
        sb = detail::quantile_resample(std::move(sb), n);
    }
    double acc = 0.0;
    for (size_t i = 0; i < sa.size(); ++i) {
        const double d = sa[i] - sb[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(sa.size()));
}

namespace detail {
/// Jonker-Volgenant shortest augmenting paths; returns the minimal total
/// cost of a perfect assignment of the n x n matrix (row-major).
inline double hungarian_min_cost(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = inf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<size_t>(p[static_cast<size_t>(j)] - 1) * n + (j - 1)];
    return total;
}
} // namespace detail

/// Exact path-space W2 between two equal-size segment ensembles under cost
/// segment_distance^2, by optimal assignment. Capped at n <= 512; larger
/// ensembles should use the synchronous-coupling upper bound instead.
inline double w2_supnorm_assignment(std::span<const Segment> a, std::span<const Segment> b) {
    if (a.empty() || a.size() != b.size())
        throw std::invalid_argument("w2_supnorm_assignment: need equal nonempty ensembles");
    if (a.size() > 512) throw std::invalid_argument("w2_supnorm_assignment: n > 512, use the coupling bound");
    const int n = static_cast<int>(a.size());
    std::vector<double> cost(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = segment_distance(a[static_cast<size_t>(i)], b[static_cast<size_t>(j)]);
            cost[static_cast<size_t>(i) * n + j] = d * d;
        }
    const double total = detail::hungarian_min_cost(cost, n);
    return std::sqrt(std::max(total, 0.0) / n);
}

struct DivergenceEstimate {
    double tv = 0.0;
    double kl = 0.0; // +inf marker when some p_i > 0 has q_i = 0
    int n_bins = 0;
    double lo = 0.0, hi = 0.0;
};

/// Histogram width by Freedman-Diaconis on the pooled sample, clamped to
/// [16, 256] bins.
inline int freedman_diaconis_bins(std::vector<double> pooled) {
    std::sort(pooled.begin(), pooled.end());
    const size_t n = pooled.size();
    const double q1 = pooled[static_cast<size_t>(0.25 * (n - 1))];
    const double q3 = pooled[static_cast<size_t>(0.75 * (n - 1))];
    const double iqr = q3 - q1;
    const double range = pooled.back() - pooled.front();
    if (iqr <= 0.0 || range <= 0.0) return 16;
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
    const int bins = static_cast<int>(std::ceil(range / width));
    return std::clamp(bins, 16, 256);
}

/// Plug-in histogram TV and KL on 1-D marginals with common binning over the
/// pooled range; KL uses 0 log 0 = 0 and the infinity marker on q-null bins.
inline DivergenceEstimate divergence_estimators(std::span<const double> a, std::span<const double> b,
                                                int n_bins = 0) {
    if (a.empty() || b.empty()) throw std::domain_error("divergence_estimators: empty sample set");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    DivergenceEstimate est;
    est.n_bins = n_bins >= 2 ? n_bins : freedman_diaconis_bins(pooled);
    const auto [mn, mx] = std::minmax_element(pooled.begin(), pooled.end());
    est.lo = *mn;
    est.hi = *mx;
    const double width = (est.hi > est.lo) ? (est.hi - est.lo) : 1.0;

    std::vector<double> p(static_cast<size_t>(est.n_bins), 0.0), q(static_cast<size_t>(est.n_bins), 0.0);
    auto bin_of = [&](double x) {
        int k = static_cast<int>((x - est.lo) / width * est.n_bins);
        return std::clamp(k, 0, est.n_bins - 1);
    };
    for (double x : a) p[static_cast<size_t>(bin_of(x))] += 1.0 / static_cast<double>(a.size());
    for (double x : b) q[static_cast<size_t>(bin_of(x))] += 1.0 / static_cast<double>(b.size());

    double tv = 0.0, kl = 0.0;
    bool infinite = false;
    for (int k = 0; k < est.n_bins; ++k) {
        const double pk = p[static_cast<size_t>(k)], qk = q[static_cast<size_t>(k)];
        tv += std::abs(pk - qk);
        if (pk > 0.0) {
            if (qk == 0.0)
                infinite = true;
            else
                kl += pk * std::log(pk / qk);
        }
    }
    est.tv = 0.5 * tv;
    est.kl = infinite ? std::numeric_limits<double>::infinity() : kl;
    return est;
}

struct PinskerReport {
    bool holds = false;
    double slack = 0.0; // kl/2 - tv^2
    double tv = 0.0;
    double kl = 0.0;
    bool kl_infinite = false; // flagged: inequality then trivially true
};

/// Exact Pinsker relation |p-q|_var^2 <= (1/2) Ent(p|q) on a discrete pair
/// over a common atom set (index-aligned).
inline PinskerReport pinsker_check(const DiscreteDist& p, const DiscreteDist& q) {
    p.validate();
    q.validate();
    if (p.atoms.size() != q.atoms.size())
        throw std::invalid_argument("pinsker_check: need a common atom set");
    PinskerReport r;
    double tv = 0.0, kl = 0.0;
    for (size_t i = 0; i < p.weights.size(); ++i) {
        const double pi = p.weights[i], qi = q.weights[i];
        tv += std::abs(pi - qi);
        if (pi > 0.0) {
            if (qi == 0.0)
                r.kl_infinite = true;
            else
                kl += pi * std::log(pi / qi);
        }
    }
    r.tv = 0.5 * tv;
    r.kl = r.kl_infinite ? std::numeric_limits<double>::infinity() : kl;
    if (r.kl_infinite) {
        r.holds = true;
        r.slack = std::numeric_limits<double>::infinity();
    } else {
        r.slack = 0.5 * r.kl - r.tv * r.tv;
        r.holds = r.slack >= -1e-12;
    }
    return r;
}

struct RateFit {
    double kappa1 = 0.0; // fitted prefactor
    double kappa2 = 0.0; // fitted decay rate (-slope)
    double ci = 0.0;     // 95% half width on kappa2
    double r_squared = 0.0;
    int n_points = 0;
    double t_lo = 0.0, t_hi = 0.0;
};

struct WindowError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// OLS of log(estimate) on t over the window; kappa2 = -slope.
inline RateFit fit_rate(const MomentSeries& series, double t_lo, double t_hi) {
    std::vector<double> ts, ys;
    for (size_t i = 0; i < series.times.size(); ++i) {
        const double t = series.times[i];
        if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
        const double y = series.mean_sq_sup[i];
        if (!(y > 0.0)) throw WindowError("fit_rate: nonpositive entry inside the window");
        ts.push_back(t);
        ys.push_back(std::log(y));
    }
    const int n = static_cast<int>(ts.size());
    if (n < 4) throw WindowError("fit_rate: need >= 4 positive entries in the window");
    double st = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
        st += ts[static_cast<size_t>(i)];
        sy += ys[static_cast<size_t>(i)];
    }
    const double mt = st / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dt = ts[static_cast<size_t>(i)] - mt;
        const double dy = ys[static_cast<size_t>(i)] - my;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw WindowError("fit_rate: degenerate time window");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mt;
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = ys[static_cast<size_t>(i)] - (intercept + slope * ts[static_cast<size_t>(i)]);
        ss_res += r * r;
    }
    RateFit f;
    f.kappa1 = std::exp(intercept);
    f.kappa2 = -slope;
    f.n_points = n;
    f.t_lo = t_lo;
    f.t_hi = t_hi;
    if (n > 2) {
        const double se = std::sqrt(ss_res / (n - 2) / sxx);
        f.ci = 1.959963984540054 * se;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

} // namespace fsde
