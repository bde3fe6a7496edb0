#pragma once

#include "fsde/rng.hpp"
#include "fsde/segment.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsde {

/// Pointwise drift b with certified Hoelder data. Built-ins:
///   zero:          b = 0, kappa = 0, |b|_inf = 0
///   holder_power:  componentwise c * sign(u) * min(|u|, cap)^alpha;
///                  |b(x)-b(y)| <= 2^{1-alpha} c d^{(1-alpha)/2} |x-y|^alpha,
///                  |b|_inf = c cap^alpha sqrt(d)
/// The custom kind carries a user callable plus user-declared constants and
/// is not serializable.
struct DriftSpec {
    enum class Kind { zero, holder_power, custom };
    Kind kind = Kind::zero;
    double c = 0.0;
    double alpha = 0.5;
    double cap = 1.0;
    int d = 1;
    double declared_kappa = 0.0;
    double declared_alpha = 0.5;
    double declared_b_inf = 0.0;
    std::function<void(std::span<const double>, std::span<double>)> fn; // custom only

    static DriftSpec zero(int d = 1) {
        DriftSpec s;
        s.kind = Kind::zero;
        s.d = d;
        s.declared_kappa = 0.0;
        s.declared_alpha = 0.5;
        s.declared_b_inf = 0.0;
        return s;
    }

    static DriftSpec holder_power(double c, double alpha, double cap, int d = 1) {
        if (!(c >= 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(cap > 0.0) || d < 1)
            throw std::invalid_argument("holder_power: need c >= 0, alpha in (0,1), cap > 0, d >= 1");
        DriftSpec s;
        s.kind = Kind::holder_power;
        s.c = c;
        s.alpha = alpha;
        s.cap = cap;
        s.d = d;
        s.declared_alpha = alpha;
        s.declared_kappa = std::pow(2.0, 1.0 - alpha) * c * std::pow(static_cast<double>(d), (1.0 - alpha) / 2.0);
        s.declared_b_inf = c * std::pow(cap, alpha) * std::sqrt(static_cast<double>(d));
        return s;
    }

    static DriftSpec custom(std::function<void(std::span<const double>, std::span<double>)> fn, int d,
                            double kappa, double alpha, double b_inf) {
        DriftSpec s;
        s.kind = Kind::custom;
        s.fn = std::move(fn);
        s.d = d;
        s.declared_kappa = kappa;
        s.declared_alpha = alpha;
        s.declared_b_inf = b_inf;
        return s;
    }

    bool is_zero() const { return kind == Kind::zero; }
};

inline void eval_b(const DriftSpec& spec, std::span<const double> x, std::span<double> out) {
    switch (spec.kind) {
        case DriftSpec::Kind::zero:
            for (auto& v : out) v = 0.0;
            return;
        case DriftSpec::Kind::holder_power:
            for (size_t j = 0; j < x.size(); ++j) {
                const double u = x[j];
                const double a = std::min(std::abs(u), spec.cap);
                out[j] = spec.c * std::copysign(std::pow(a, spec.alpha), u);
            }
            return;
        case DriftSpec::Kind::custom:
            spec.fn(x, out);
            return;
    }
}

/// Scalar convenience for the d = 1 solver path.
inline double eval_b1(const DriftSpec& spec, double x) {
    double out;
    eval_b(spec, {&x, 1}, {&out, 1});
    return out;
}

/// Path functional B with certified Lipschitz data. Built-ins:
///   zero:               B = 0
///   terminal_saturated: scale * s(xi(-r0)) componentwise, s(u) = u/(1+|u|);
///                       lambda_B = |scale|, |B|_inf = |scale| sqrt(d), B(0) = 0
///   window_average:     scale * clip_{[-clip,clip]}((1/r0) int xi) via the
///                       trapezoid rule; lambda_B = |scale|,
///                       |B|_inf = |scale| clip sqrt(d), B(0) = 0
struct FunctionalSpec {
    enum class Kind { zero, terminal_saturated, window_average, custom };
    Kind kind = Kind::zero;
    double scale = 0.0;
    double clip = 1.0;
    int d = 1;
    double declared_lambda_B = 0.0;
    double declared_B_inf = 0.0;
    double B_at_zero = 0.0;
    std::function<void(const Segment&, std::span<double>)> fn; // custom only

    static FunctionalSpec zero(int d = 1) {
        FunctionalSpec s;
        s.kind = Kind::zero;
        s.d = d;
        return s;
    }

    static FunctionalSpec terminal_saturated(double scale, int d = 1) {
        FunctionalSpec s;
        s.kind = Kind::terminal_saturated;
        s.scale = scale;
        s.d = d;
        s.declared_lambda_B = std::abs(scale);
        s.declared_B_inf = std::abs(scale) * std::sqrt(static_cast<double>(d));
        s.B_at_zero = 0.0;
        return s;
    }

    static FunctionalSpec window_average(double scale, double clip, int d = 1) {
        if (!(clip > 0.0)) throw std::invalid_argument("window_average: clip must be > 0");
        FunctionalSpec s;
        s.kind = Kind::window_average;
        s.scale = scale;
        s.clip = clip;
        s.d = d;
        s.declared_lambda_B = std::abs(scale);
        s.declared_B_inf = std::abs(scale) * clip * std::sqrt(static_cast<double>(d));
        s.B_at_zero = 0.0;
        return s;
    }

    static FunctionalSpec custom(std::function<void(const Segment&, std::span<double>)> fn, int d,
                                 double lambda_B, double B_inf, double B_at_zero) {
        FunctionalSpec s;
        s.kind = Kind::custom;
        s.fn = std::move(fn);
        s.d = d;
        s.declared_lambda_B = lambda_B;
        s.declared_B_inf = B_inf;
        s.B_at_zero = B_at_zero;
        return s;
    }

    bool is_zero() const { return kind == Kind::zero; }
};

inline void eval_B(const FunctionalSpec& spec, const Segment& seg, std::span<double> out) {
    switch (spec.kind) {
        case FunctionalSpec::Kind::zero:
            for (auto& v : out) v = 0.0;
            return;
        case FunctionalSpec::Kind::terminal_saturated: {
            const auto tip = seg.point(0); // xi(-r0)
            for (int j = 0; j < seg.d; ++j) {
                const double u = tip[static_cast<size_t>(j)];
                out[static_cast<size_t>(j)] = spec.scale * u / (1.0 + std::abs(u));
            }
            return;
        }
        case FunctionalSpec::Kind::window_average: {
            for (int j = 0; j < seg.d; ++j) {
                double acc = 0.5 * (seg.values[static_cast<size_t>(j)] +
                                    seg.values[static_cast<size_t>(seg.m) * seg.d + j]);
                for (int i = 1; i < seg.m; ++i) acc += seg.values[static_cast<size_t>(i) * seg.d + j];
                const double avg = acc / seg.m; // trapezoid * h / r0
                out[static_cast<size_t>(j)] = spec.scale * std::clamp(avg, -spec.clip, spec.clip);
            }
            return;
        }
        case FunctionalSpec::Kind::custom:
            spec.fn(seg, out);
            return;
    }
}

/// Empirical validation of a declared (H1)-type Hoelder certificate.
struct CertificationReport {
    double max_ratio = 0.0;
    double declared = 0.0;
    bool ok = true;
    std::vector<double> witness_x, witness_y;
};

inline CertificationReport certify_constants(const DriftSpec& spec, long trials, uint64_t seed,
                                             double range = 5.0) {
    if (trials < 1) throw std::invalid_argument("certify_constants: trials must be >= 1");
    CounterRng rng(seed);
    CertificationReport rep;
    rep.declared = spec.declared_kappa;
    std::vector<double> x(static_cast<size_t>(spec.d)), y(static_cast<size_t>(spec.d));
    std::vector<double> bx(x.size()), by(y.size());
    for (long k = 0; k < trials; ++k) {
        double dist_sq = 0.0;
        for (int j = 0; j < spec.d; ++j) {
            x[static_cast<size_t>(j)] = range * (2.0 * rng.uniform(static_cast<uint64_t>(k), 2 * j) - 1.0);
            y[static_cast<size_t>(j)] = range * (2.0 * rng.uniform(static_cast<uint64_t>(k), 2 * j + 1) - 1.0);
            const double dv = x[static_cast<size_t>(j)] - y[static_cast<size_t>(j)];
            dist_sq += dv * dv;
        }
        if (dist_sq == 0.0) continue;
        eval_b(spec, x, bx);
        eval_b(spec, y, by);
        double diff_sq = 0.0;
        for (int j = 0; j < spec.d; ++j) {
            const double dv = bx[static_cast<size_t>(j)] - by[static_cast<size_t>(j)];
            diff_sq += dv * dv;
        }
        const double ratio = std::sqrt(diff_sq) / std::pow(std::sqrt(dist_sq), spec.declared_alpha);
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.witness_x = x;
            rep.witness_y = y;
        }
    }
    rep.ok = rep.max_ratio <= rep.declared * (1.0 + 1e-9) + 1e-15;
    return rep;
}

/// Empirical validation of a declared (H2)-type Lipschitz certificate; draws
/// random segment pairs with independent uniform grid values.
inline CertificationReport certify_constants(const FunctionalSpec& spec, long trials, uint64_t seed,
                                             double r0 = 1.0, int m = 16, double range = 5.0) {
    if (trials < 1) throw std::invalid_argument("certify_constants: trials must be >= 1");
    CounterRng rng(seed);
    CertificationReport rep;
    rep.declared = spec.declared_lambda_B;
    Segment a(r0, m, spec.d), b(r0, m, spec.d);
    std::vector<double> Ba(static_cast<size_t>(spec.d)), Bb(static_cast<size_t>(spec.d));
    const size_t n = a.values.size();
    for (long k = 0; k < trials; ++k) {
        for (size_t i = 0; i < n; ++i) {
            a.values[i] = range * (2.0 * rng.uniform(static_cast<uint64_t>(k), static_cast<uint64_t>(2 * i)) - 1.0);
            b.values[i] = range * (2.0 * rng.uniform(static_cast<uint64_t>(k), static_cast<uint64_t>(2 * i + 1)) - 1.0);
        }
        const double dist = segment_distance(a, b);
        if (dist == 0.0) continue;
        eval_B(spec, a, Ba);
        eval_B(spec, b, Bb);
        double diff_sq = 0.0;
        for (int j = 0; j < spec.d; ++j) {
            const double dv = Ba[static_cast<size_t>(j)] - Bb[static_cast<size_t>(j)];
            diff_sq += dv * dv;
        }
        const double ratio = std::sqrt(diff_sq) / dist;
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.witness_x = a.values;
            rep.witness_y = b.values;
        }
    }
    rep.ok = rep.max_ratio <= rep.declared * (1.0 + 1e-9) + 1e-15;
    return rep;
}

} // namespace fsde
