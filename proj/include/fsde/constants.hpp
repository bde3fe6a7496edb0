#pragma once

#include "fsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fsde {

/// Gamma function, Lanczos approximation (g = 7, 9 coefficients) with the
/// reflection formula below 0.5. Double-precision accurate on (0, 10].
inline double gamma_fn(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma_fn: argument must be > 0");
    static constexpr double g = 7.0;
    static constexpr double coef[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    if (x < 0.5) {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return M_PI / (std::sin(M_PI * x) * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    double a = coef[0];
    for (int i = 1; i < 9; ++i) a += coef[i] / (z + i);
    const double t = z + g + 0.5;
    return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

/// lambda0(delta) = ((1+delta)/delta sqrt(pi) |b|_inf)^2 v ((1+delta)/delta |b|_inf)
inline double lambda0(const ModelParams& p, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("lambda0: delta must lie in (0,1)");
    const double c = (1.0 + delta) / delta * p.b_inf;
    return std::max(c * c * M_PI, c);
}

/// Upsilon(lambda, delta) =
///   2 Gamma(alpha/2) lambda^{-alpha/2}
///     ((1+delta) kappa + 2 delta |b|_inf + 4 (1+delta)(3+1/lambda) |b|_inf^2)
inline double upsilon(const ModelParams& p, double lambda, double delta) {
    if (!(lambda > 0.0)) throw std::domain_error("upsilon: lambda must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("upsilon: delta must lie in (0,1)");
    const double bracket = (1.0 + delta) * p.kappa + 2.0 * delta * p.b_inf +
                           4.0 * (1.0 + delta) * (3.0 + 1.0 / lambda) * p.b_inf * p.b_inf;
    return 2.0 * gamma_fn(p.alpha / 2.0) * std::pow(lambda, -p.alpha / 2.0) * bracket;
}

namespace detail {
inline void require_above_lambda0(const ModelParams& p, const TuningParams& t) {
    t.validate();
    if (!(t.lambda > lambda0(p, t.delta)))
        throw std::invalid_argument("tuning: lambda must exceed lambda0(delta)");
}
} // namespace detail

/// Lambda(lambda, eps, delta) =
///   2/(1-eps) ((1+d)d lambda + beta d + (1+d)^2 lambda_B + (1+d) Upsilon |B|_inf)
///   + 1/(1-eps) (dim + 4/((1-d)^2 eps)) Upsilon^2
inline double lambda_big(const ModelParams& p, const TuningParams& t) {
    detail::require_above_lambda0(p, t);
    const double dd = t.delta, ee = t.eps;
    const double ups = upsilon(p, t.lambda, dd);
    const double lin = (1.0 + dd) * dd * t.lambda + p.beta * dd +
                       (1.0 + dd) * (1.0 + dd) * p.lambda_B + (1.0 + dd) * ups * p.B_inf;
    const double quad = (static_cast<double>(p.d) + 4.0 / ((1.0 - dd) * (1.0 - dd) * ee)) * ups * ups;
    return 2.0 / (1.0 - ee) * lin + quad / (1.0 - ee);
}

/// Sigma(lambda) = (1-delta)^{-2} (2(1+d)d lambda + 2 beta d + 2(1+d)^2 lambda_B
///                 + 2(1+d) Upsilon |B|_inf + dim Upsilon^2)
/// Satisfies Sigma/(1-eps) + 4 Upsilon^2 / ((1-delta)^4 eps (1-eps)) = Lambda/(1-delta)^2.
inline double sigma_lambda(const ModelParams& p, const TuningParams& t) {
    detail::require_above_lambda0(p, t);
    const double dd = t.delta;
    const double ups = upsilon(p, t.lambda, dd);
    const double s = 2.0 * (1.0 + dd) * dd * t.lambda + 2.0 * p.beta * dd +
                     2.0 * (1.0 + dd) * (1.0 + dd) * p.lambda_B +
                     2.0 * (1.0 + dd) * ups * p.B_inf + static_cast<double>(p.d) * ups * ups;
    return s / ((1.0 - dd) * (1.0 - dd));
}

/// Derived contraction data for one tuning triple.
///   prefactor = e^{2 beta r0/(1-delta)^2} / (1-eps)
///   rate      = e^{2 beta r0/(1-delta)^2}/(1-delta)^2 (Lambda - 2 beta e^{-2 beta r0/(1-delta)^2})
///   feasible <=> Lambda < 2 beta e^{-2 beta r0/(1-delta)^2}
struct ContractionCertificate {
    TuningParams tuning;
    double lambda0 = 0.0;
    double upsilon = 0.0;
    double lambda_big = 0.0;
    double rate = 0.0;
    double prefactor = 1.0;
    bool feasible = false;
    double kappa2 = 0.0; // -rate when feasible, else 0
    double kappa0 = 1.0; // instantiated as prefactor
};

inline ContractionCertificate make_certificate(const ModelParams& p, const TuningParams& t) {
    detail::require_above_lambda0(p, t);
    ContractionCertificate c;
    c.tuning = t;
    c.lambda0 = lambda0(p, t.delta);
    c.upsilon = upsilon(p, t.lambda, t.delta);
    c.lambda_big = lambda_big(p, t);
    const double om = 1.0 - t.delta;
    const double expo = std::exp(2.0 * p.beta * p.r0 / (om * om));
    const double threshold = 2.0 * p.beta / expo;
    c.prefactor = expo / (1.0 - t.eps);
    c.rate = expo / (om * om) * (c.lambda_big - threshold);
    c.feasible = c.lambda_big < threshold;
    c.kappa2 = c.feasible ? -c.rate : 0.0;
    c.kappa0 = c.prefactor;
    return c;
}

/// Theorem bound: prefactor * exp(rate * t) * |xi-eta|_inf^2.
inline double contraction_bound(const ModelParams& p, const TuningParams& t, double time,
                                double init_sq) {
    if (time < 0.0) throw std::domain_error("contraction_bound: t must be >= 0");
    if (init_sq < 0.0) throw std::domain_error("contraction_bound: init_sq must be >= 0");
    const ContractionCertificate c = make_certificate(p, t);
    return c.prefactor * std::exp(c.rate * time) * init_sq;
}

/// Grid-and-refine search configuration. The coarse pass scans
/// delta (log), eps (linear) and, per delta, lambda log-spaced above
/// lambda0(delta); refinement re-grids a shrinking box around the incumbent.
struct SearchConfig {
    int n_delta = 16;
    double delta_lo = 0.01, delta_hi = 0.5;
    int n_eps = 8;
    double eps_lo = 0.05, eps_hi = 0.9;
    int n_lambda = 32;
    double lambda_margin = 1.0001;  // multiplicative floor above lambda0
    double lambda_hi_scale = 1.0e4; // upper end: scale*(1+lambda0)
    double lambda_floor = 1e-8;     // lower end when lambda0 == 0
    int refine_rounds = 3;
    int refine_points = 9;
    double refine_span = 4.0;

    void validate() const {
        if (n_delta < 1 || n_eps < 1 || n_lambda < 1 || refine_points < 2)
            throw std::invalid_argument("SearchConfig: empty search grid");
    }
};

struct SearchResult {
    std::optional<ContractionCertificate> best; // feasible minimizer of rate, if any
    ContractionCertificate incumbent;           // overall rate minimizer (may be infeasible)
    SearchConfig grid;
    long evaluated = 0;
};

namespace detail {

inline std::vector<double> logspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    if (n == 1) { v[0] = lo; return v; }
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        v[static_cast<size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    return v;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<size_t>(n));
    if (n == 1) { v[0] = lo; return v; }
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// Lexicographic (delta, eps, lambda) tie-break keeps the reduction
// order-independent when grid points evaluate to equal rates.
inline bool better(const ContractionCertificate& a, const ContractionCertificate& b) {
    if (a.rate != b.rate) return a.rate < b.rate;
    if (a.tuning.delta != b.tuning.delta) return a.tuning.delta < b.tuning.delta;
    if (a.tuning.eps != b.tuning.eps) return a.tuning.eps < b.tuning.eps;
    return a.tuning.lambda < b.tuning.lambda;
}

} // namespace detail

/// Deterministic scan for the rate-minimizing tuning triple. Coarse
/// log/linear grid, then `refine_rounds` local re-grids around the incumbent
/// (the box may extend past the coarse extent; delta and eps stay inside
/// (0,1), lambda stays above lambda0(delta)).
inline SearchResult feasibility_search(const ModelParams& p, const SearchConfig& cfg = {}) {
    p.validate();
    cfg.validate();

    bool have = false;
    ContractionCertificate inc;
    long evaluated = 0;

    auto consider = [&](double dd, double ee, double ll) {
        if (!(dd > 0.0 && dd < 1.0 && ee > 0.0 && ee < 1.0)) return;
        const double l0 = lambda0(p, dd);
        if (!(ll > l0)) return;
        TuningParams t{dd, ee, ll, -1.0};
        ContractionCertificate c = make_certificate(p, t);
        ++evaluated;
        if (!have || detail::better(c, inc)) { inc = c; have = true; }
    };

    auto lambda_range = [&](double dd) {
        const double l0 = lambda0(p, dd);
        const double lo = l0 > 0.0 ? cfg.lambda_margin * l0 : cfg.lambda_floor;
        const double hi = cfg.lambda_hi_scale * (1.0 + l0);
        return detail::logspace(lo, hi, cfg.n_lambda);
    };

    for (double dd : detail::logspace(cfg.delta_lo, cfg.delta_hi, cfg.n_delta))
        for (double ee : detail::linspace(cfg.eps_lo, cfg.eps_hi, cfg.n_eps))
            for (double ll : lambda_range(dd)) consider(dd, ee, ll);

    double span = cfg.refine_span;
    for (int round = 0; round < cfg.refine_rounds; ++round) {
        const TuningParams at = inc.tuning;
        const auto deltas = detail::logspace(std::max(at.delta / span, 1e-12),
                                             std::min(at.delta * span, 1.0 - 1e-12),
                                             cfg.refine_points);
        const auto epss = detail::logspace(std::max(at.eps / span, 1e-12),
                                           std::min(at.eps * span, 1.0 - 1e-12),
                                           cfg.refine_points);
        for (double dd : deltas) {
            const double l0 = lambda0(p, dd);
            const double llo = std::max(at.lambda / span, l0 > 0.0 ? cfg.lambda_margin * l0
                                                                   : cfg.lambda_floor / span);
            const double lhi = std::max(at.lambda * span, llo * (1.0 + 1e-9));
            const auto lams = detail::logspace(llo, lhi, cfg.refine_points);
            for (double ee : epss)
                for (double ll : lams) consider(dd, ee, ll);
        }
        span = std::sqrt(span);
    }

    SearchResult res;
    res.incumbent = inc;
    res.grid = cfg;
    res.evaluated = evaluated;
    if (inc.feasible) res.best = inc;
    return res;
}

/// Second-moment certificate of the Lyapunov bound.
///   transient_rate a = 2 lambda_B e^{(2 beta - epm) r0}/(1-eps) - (2 beta - epm)
///   valid <=> 2 lambda_B/(1-eps) < (2 beta - epm) e^{-(2 beta - epm) r0}  (<=> a < 0)
struct MomentCertificate {
    double eps = 0.0;
    double eps_moment = 0.0;
    double gamma_const = 0.0;
    double transient_rate = 0.0;
    double asymptotic_bound = std::numeric_limits<double>::infinity();
    bool valid = false;
};

inline MomentCertificate moment_certificate(const ModelParams& p, double eps, double eps_moment,
                                            double B_at_zero) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("moment_certificate: eps must lie in (0,1)");
    if (!(eps_moment > 0.0 && eps_moment < 2.0 * p.beta))
        throw std::domain_error("moment_certificate: eps_moment must lie in (0, 2 beta)");
    if (B_at_zero < 0.0) throw std::domain_error("moment_certificate: B_at_zero must be >= 0");
    MomentCertificate m;
    m.eps = eps;
    m.eps_moment = eps_moment;
    const double mu = 2.0 * p.beta - eps_moment;
    const double shift = p.b_inf + B_at_zero;
    m.gamma_const = (shift * shift / eps_moment + static_cast<double>(p.d) + 4.0 / eps) / (1.0 - eps);
    m.transient_rate = 2.0 * p.lambda_B * std::exp(mu * p.r0) / (1.0 - eps) - mu;
    m.valid = 2.0 * p.lambda_B / (1.0 - eps) < mu * std::exp(-mu * p.r0);
    if (m.valid)
        m.asymptotic_bound = std::exp(p.r0 * mu) * m.gamma_const / (-m.transient_rate);
    return m;
}

namespace detail {
// int_0^t e^{a(t-s)} ds = (e^{at}-1)/a, series branch at the removable a=0.
inline double exp_integral(double a, double t) {
    const double at = a * t;
    if (std::abs(at) < 1e-6) return t * (1.0 + at / 2.0 + at * at / 6.0);
    return (std::exp(at) - 1.0) / a;
}
} // namespace detail

/// Lyapunov bound on E |X_t|_inf^2 for initial segment with sup norm^2 xi_sup_sq:
///   e^{r0 mu} e^{a t} xi_sup_sq/(1-eps) + e^{r0 mu} gamma int_0^t e^{a(t-s)} ds,
/// mu = 2 beta - eps_moment, a = transient_rate.
inline double moment_bound(const ModelParams& p, double eps, double eps_moment, double xi_sup_sq,
                           double B_at_zero, double t) {
    if (t < 0.0) throw std::domain_error("moment_bound: t must be >= 0");
    if (xi_sup_sq < 0.0) throw std::domain_error("moment_bound: xi_sup_sq must be >= 0");
    const MomentCertificate m = moment_certificate(p, eps, eps_moment, B_at_zero);
    const double mu = 2.0 * p.beta - eps_moment;
    const double head = std::exp(p.r0 * mu);
    return head * std::exp(m.transient_rate * t) * xi_sup_sq / (1.0 - eps) +
           head * m.gamma_const * detail::exp_integral(m.transient_rate, t);
}

} // namespace fsde
