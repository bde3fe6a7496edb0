#pragma once

#include "fsde/quadrature.hpp"
#include "fsde/rng.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace fsde {

/// Reference process dZ = -beta Z dt + dW: Gaussian with mean e^{-beta t} x
/// and variance (1 - e^{-2 beta t}) / (2 beta).
struct OUParams {
    double beta = 1.0;

    double mean_factor(double t) const { return std::exp(-beta * t); }

    double noise_var(double t) const {
        // -expm1 keeps precision for small beta*t
        return -std::expm1(-2.0 * beta * t) / (2.0 * beta);
    }

    double noise_std(double t) const { return std::sqrt(noise_var(t)); }
};

/// P_t^0 f(x) = E f(e^{-beta t} x + noise_std(t) N) by Gauss-Hermite.
inline double ou_apply(const std::function<double(double)>& f, double t, double x, const OUParams& ou,
                       const GaussHermite& gh) {
    if (!(t > 0.0)) throw std::domain_error("ou_apply: t must be > 0");
    const double m = ou.mean_factor(t) * x;
    const double s = ou.noise_std(t) * M_SQRT2;
    double acc = 0.0;
    for (size_t k = 0; k < gh.nodes.size(); ++k) acc += gh.weights[k] * f(m + s * gh.nodes[k]);
    return acc / std::sqrt(M_PI);
}

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo of the gradient representation
///   d/dx P_t^0 f(x) = E[ f(Z_t^x)/t * int_0^t e^{-beta r} dW(r) ].
/// The pair (Z_t - e^{-beta t} x, int e^{-beta r} dW) is jointly Gaussian with
///   Var Z~ = Var S = (1-e^{-2 beta t})/(2 beta),  Cov = t e^{-beta t},
/// and is sampled exactly in law from two independent normals.
inline McEstimate bismut_gradient_mc(const std::function<double(double)>& f, double t, double x,
                                     const OUParams& ou, long n_samples, uint64_t seed) {
    if (!(t > 0.0)) throw std::domain_error("bismut_gradient_mc: t must be > 0");
    if (n_samples < 100) throw std::invalid_argument("bismut_gradient_mc: need n_samples >= 100");
    const double vz = ou.noise_var(t);
    const double cov = t * std::exp(-ou.beta * t);
    const double c1 = cov / std::sqrt(vz);
    const double c2 = std::sqrt(std::max(vz - cov * cov / vz, 0.0));
    const double mean = ou.mean_factor(t) * x;
    const CounterRng rng(seed);

    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        const auto g = rng.normal_pair(static_cast<uint64_t>(i), 0, 0);
        const double z = mean + std::sqrt(vz) * g[0];
        const double sint = c1 * g[0] + c2 * g[1];
        const double v = f(z) * sint / t;
        sum += v;
        sum_sq += v * v;
    }
    McEstimate e;
    const double n = static_cast<double>(n_samples);
    e.estimate = sum / n;
    const double var = std::max(sum_sq / n - e.estimate * e.estimate, 0.0) * n / (n - 1.0);
    e.std_error = std::sqrt(var / n);
    return e;
}

} // namespace fsde
