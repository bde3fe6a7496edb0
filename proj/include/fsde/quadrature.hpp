#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fsde {

/// Gauss-Hermite rule for weight e^{-x^2} (physicists' convention),
/// nodes by Newton iteration on the recurrence. Weights sum to sqrt(pi).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussHermite(int n) {
        if (n < 1) throw std::invalid_argument("GaussHermite: n must be >= 1");
        nodes.resize(static_cast<size_t>(n));
        weights.resize(static_cast<size_t>(n));
        const double pim4 = 0.7511255444649425; // pi^{-1/4}
        const int mid = (n + 1) / 2;
        double z = 0.0;
        for (int i = 0; i < mid; ++i) {
            if (i == 0)
                z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
            else if (i == 1)
                z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
            else if (i == 2)
                z = 1.86 * z - 0.86 * nodes[static_cast<size_t>(n - 1)];
            else if (i == 3)
                z = 1.91 * z - 0.91 * nodes[static_cast<size_t>(n - 2)];
            else
                z = 2.0 * z - nodes[static_cast<size_t>(n - i + 1)];
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p1 = pim4, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                const double dz = p1 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-15) break;
            }
            nodes[static_cast<size_t>(n - 1 - i)] = z;
            nodes[static_cast<size_t>(i)] = -z;
            weights[static_cast<size_t>(n - 1 - i)] = 2.0 / (pp * pp);
            weights[static_cast<size_t>(i)] = weights[static_cast<size_t>(n - 1 - i)];
        }
        if (n % 2 == 1) nodes[static_cast<size_t>(mid - 1)] = 0.0;
    }
};

/// Discretization of int_0^inf e^{-lambda t} g(t) dt: substitute s = lambda t,
/// log-spaced trapezoid on s in (s_min, s_max], weights carry e^{-s}/lambda
/// and are normalized so that sum w_j = 1/lambda exactly (the rule integrates
/// the pure exponential without truncation error; checked by the invariant
/// against 1/lambda).
struct QuadratureConfig {
    int n_hermite = 32;
    int n_t = 128;
    double s_min = 1e-6;
    double s_max = 40.0;

    void validate() const {
        if (n_hermite < 16) throw std::invalid_argument("QuadratureConfig: n_hermite must be >= 16");
        if (n_t < 64) throw std::invalid_argument("QuadratureConfig: n_t must be >= 64");
        if (!(s_min > 0.0 && s_max > s_min)) throw std::invalid_argument("QuadratureConfig: bad s range");
    }
};

struct ExpTimeGrid {
    std::vector<double> t_nodes;
    std::vector<double> weights; // include the e^{-lambda t} factor
    double lambda = 1.0;

    ExpTimeGrid(double lambda_, const QuadratureConfig& cfg) : lambda(lambda_) {
        cfg.validate();
        if (!(lambda_ > 0.0)) throw std::domain_error("ExpTimeGrid: lambda must be > 0");
        const int n = cfg.n_t;
        t_nodes.resize(static_cast<size_t>(n));
        weights.resize(static_cast<size_t>(n));
        std::vector<double> s(static_cast<size_t>(n));
        const double llo = std::log(cfg.s_min), lhi = std::log(cfg.s_max);
        for (int i = 0; i < n; ++i) s[static_cast<size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double left = (i == 0) ? s[0] : s[static_cast<size_t>(i - 1)];
            const double right = (i == n - 1) ? s[static_cast<size_t>(n - 1)] : s[static_cast<size_t>(i + 1)];
            const double panel = 0.5 * (right - left) + (i == 0 ? 0.5 * (s[0] - 0.0) : 0.0);
            const double w = panel * std::exp(-s[static_cast<size_t>(i)]);
            weights[static_cast<size_t>(i)] = w;
            total += w;
            t_nodes[static_cast<size_t>(i)] = s[static_cast<size_t>(i)] / lambda;
        }
        // Rescale so sum weights = 1/lambda exactly.
        const double scale = 1.0 / (lambda * total);
        for (auto& w : weights) w *= scale;
    }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

} // namespace fsde
