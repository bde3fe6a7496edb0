#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace fsde {

/// Discretized element of C([-r0,0]; R^d): m+1 values on the uniform grid
/// s_i = -r0 + i*h, h = r0/m, stored row-major (point index major).
struct Segment {
    double r0 = 1.0;
    int m = 1;
    int d = 1;
    std::vector<double> values; // (m+1)*d entries

    Segment() = default;
    Segment(double r0_, int m_, int d_)
        : r0(r0_), m(m_), d(d_), values(static_cast<size_t>(m_ + 1) * d_, 0.0) {
        if (!(r0 > 0.0) || m < 1 || d < 1)
            throw std::invalid_argument("Segment: need r0 > 0, m >= 1, d >= 1");
    }

    double h() const { return r0 / m; }
    int points() const { return m + 1; }

    std::span<const double> point(int i) const {
        return {values.data() + static_cast<size_t>(i) * d, static_cast<size_t>(d)};
    }
    std::span<double> point(int i) {
        return {values.data() + static_cast<size_t>(i) * d, static_cast<size_t>(d)};
    }

    bool same_shape(const Segment& o) const { return r0 == o.r0 && m == o.m && d == o.d; }

    static Segment zero(double r0, int m, int d) { return Segment(r0, m, d); }

    static Segment constant(double r0, int m, int d, std::span<const double> c) {
        Segment s(r0, m, d);
        if (static_cast<int>(c.size()) != d) throw std::invalid_argument("Segment::constant: bad value size");
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j < d; ++j) s.values[static_cast<size_t>(i) * d + j] = c[static_cast<size_t>(j)];
        return s;
    }

    static Segment constant(double r0, int m, int d, double c) {
        std::vector<double> v(static_cast<size_t>(d), c);
        return constant(r0, m, d, v);
    }

    /// Zero everywhere except the right endpoint xi(0) = c.
    static Segment spike(double r0, int m, int d, std::span<const double> c) {
        Segment s(r0, m, d);
        if (static_cast<int>(c.size()) != d) throw std::invalid_argument("Segment::spike: bad value size");
        for (int j = 0; j < d; ++j) s.values[static_cast<size_t>(m) * d + j] = c[static_cast<size_t>(j)];
        return s;
    }
};

/// |xi|_inf over the grid: max over points of the Euclidean norm.
inline double sup_norm(const Segment& s) {
    double best = 0.0;
    for (int i = 0; i <= s.m; ++i) {
        double sq = 0.0;
        for (int j = 0; j < s.d; ++j) {
            const double v = s.values[static_cast<size_t>(i) * s.d + j];
            if (!std::isfinite(v)) throw std::domain_error("sup_norm: non-finite segment entry");
            sq += v * v;
        }
        best = std::max(best, sq);
    }
    return std::sqrt(best);
}

inline double segment_distance(const Segment& a, const Segment& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("segment_distance: mismatched discretization");
    double best = 0.0;
    for (size_t i = 0; i < a.values.size(); i += static_cast<size_t>(a.d)) {
        double sq = 0.0;
        for (int j = 0; j < a.d; ++j) {
            const double v = a.values[i + j] - b.values[i + j];
            sq += v * v;
        }
        best = std::max(best, sq);
    }
    return std::sqrt(best);
}

/// Diagnostic linear interpolation of xi at off-grid offset s in [-r0, 0].
inline void segment_interpolate(const Segment& seg, double s, std::span<double> out) {
    if (s < -seg.r0 - 1e-12 || s > 1e-12) throw std::domain_error("segment_interpolate: offset outside [-r0,0]");
    const double pos = (s + seg.r0) / seg.h();
    int i = static_cast<int>(std::floor(pos));
    i = std::max(0, std::min(i, seg.m - 1));
    const double w = pos - i;
    for (int j = 0; j < seg.d; ++j)
        out[static_cast<size_t>(j)] = (1.0 - w) * seg.values[static_cast<size_t>(i) * seg.d + j] +
                                      w * seg.values[static_cast<size_t>(i + 1) * seg.d + j];
}

} // namespace fsde
