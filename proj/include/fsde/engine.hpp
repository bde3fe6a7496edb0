#pragma once

#include "fsde/drift.hpp"
#include "fsde/model.hpp"
#include "fsde/parallel.hpp"
#include "fsde/rng.hpp"
#include "fsde/segment.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fsde {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct BlowUpError : std::runtime_error {
    long step;
    BlowUpError(long step_, long path_)
        : std::runtime_error("non-finite state at step " + std::to_string(step_) + " of path " +
                             std::to_string(path_)),
          step(step_) {}
};

/// Euler-Maruyama configuration. h must divide r0 (delay aligned with the
/// step grid) and satisfy h < 1/(2 beta); record_times must sit on the step
/// grid.
struct SimConfig {
    double h = 0.0;
    double T = 0.0;
    long n_paths = 10000;
    uint64_t seed = 0;
    std::vector<double> record_times;
    bool noise_off = false; // diagnostic: suppress dW
    int snapshot_paths = 0; // retain segment snapshots for the first K paths
};

struct SimPlan {
    double h = 0.0;
    int m = 0; // r0 / h
    long n_steps = 0;
    std::vector<long> record_steps;
};

inline SimPlan plan_sim(const ModelParams& model, const SimConfig& cfg) {
    model.validate();
    if (!(cfg.h > 0.0)) throw ConfigError("sim: h must be > 0");
    const double ratio = model.r0 / cfg.h;
    const long m = std::lround(ratio);
    if (m < 1 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * ratio)
        throw ConfigError("sim: h must divide r0 exactly");
    SimPlan p;
    p.m = static_cast<int>(m);
    p.h = model.r0 / static_cast<double>(m); // snap
    if (!(p.h < 1.0 / (2.0 * model.beta)))
        throw ConfigError("sim: explicit scheme needs h < 1/(2 beta)");
    if (!(cfg.T > 0.0)) throw ConfigError("sim: T must be > 0");
    p.n_steps = std::lround(cfg.T / p.h);
    if (cfg.n_paths < 1) throw ConfigError("sim: n_paths must be >= 1");
    double prev = -1.0;
    for (double t : cfg.record_times) {
        if (t < 0.0 || t > cfg.T + 1e-9) throw ConfigError("sim: record time outside [0, T]");
        if (t <= prev) throw ConfigError("sim: record times must be strictly increasing");
        prev = t;
        const long k = std::lround(t / p.h);
        if (std::abs(t - static_cast<double>(k) * p.h) > 1e-9 * std::max(t, p.h))
            throw ConfigError("sim: record time not on the step grid");
        p.record_steps.push_back(k);
    }
    return p;
}

struct MomentSeries {
    std::vector<double> times;
    std::vector<double> mean_sq_sup;
    std::vector<double> ci95;
};

namespace detail {

/// Rolling segment history of one trajectory; newest entry at `pos`.
struct Ring {
    int m, d;
    int pos = 0;
    std::vector<double> buf; // (m+1)*d

    Ring(int m_, int d_) : m(m_), d(d_), buf(static_cast<size_t>(m_ + 1) * d_, 0.0) {}

    void init(const Segment& xi) {
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j < d; ++j)
                buf[static_cast<size_t>(i) * d + j] = xi.values[static_cast<size_t>(i) * d + j];
        pos = m; // newest = xi(0)
    }

    double* current() { return buf.data() + static_cast<size_t>(pos) * d; }
    const double* current() const { return buf.data() + static_cast<size_t>(pos) * d; }
    const double* oldest() const { // X(t - r0)
        return buf.data() + static_cast<size_t>((pos + 1) % (m + 1)) * d;
    }

    void push(const double* x) {
        pos = (pos + 1) % (m + 1);
        double* dst = buf.data() + static_cast<size_t>(pos) * d;
        for (int j = 0; j < d; ++j) dst[j] = x[j];
    }

    void fill_segment(Segment& out) const {
        for (int i = 0; i <= m; ++i) {
            const double* src = buf.data() + static_cast<size_t>((pos + 1 + i) % (m + 1)) * d;
            for (int j = 0; j < d; ++j) out.values[static_cast<size_t>(i) * d + j] = src[j];
        }
    }

    double sup_sq() const {
        double best = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double* p = buf.data() + static_cast<size_t>(i) * d;
            double sq = 0.0;
            for (int j = 0; j < d; ++j) sq += p[j] * p[j];
            best = std::max(best, sq);
        }
        return best;
    }

    double sup_diff_sq(const Ring& other) const {
        double best = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double* a = buf.data() + static_cast<size_t>(i) * d;
            const double* b = other.buf.data() + static_cast<size_t>(i) * d;
            double sq = 0.0;
            for (int j = 0; j < d; ++j) {
                const double v = a[j] - b[j];
                sq += v * v;
            }
            best = std::max(best, sq);
        }
        return best;
    }
};

struct Stepper {
    const ModelParams& model;
    const DriftSpec& b_spec;
    const FunctionalSpec& B_spec;
    double h, sqrt_h;
    Segment scratch;
    std::vector<double> bx, Bx;

    Stepper(const ModelParams& mo, const DriftSpec& b, const FunctionalSpec& B, double h_)
        : model(mo), b_spec(b), B_spec(B), h(h_), sqrt_h(std::sqrt(h_)),
          scratch(mo.r0, static_cast<int>(std::lround(mo.r0 / h_)), mo.d),
          bx(static_cast<size_t>(mo.d)), Bx(static_cast<size_t>(mo.d)) {}

    void functional(const Ring& ring, std::span<double> out) {
        switch (B_spec.kind) {
            case FunctionalSpec::Kind::zero:
                for (auto& v : out) v = 0.0;
                return;
            case FunctionalSpec::Kind::terminal_saturated: {
                const double* tip = ring.oldest();
                for (int j = 0; j < model.d; ++j)
                    out[static_cast<size_t>(j)] = B_spec.scale * tip[j] / (1.0 + std::abs(tip[j]));
                return;
            }
            default:
                ring.fill_segment(scratch);
                eval_B(B_spec, scratch, out);
                return;
        }
    }

    /// One Euler-Maruyama update; `noise` holds d standard normals (or null).
    void advance(Ring& ring, const double* noise) {
        const double* x = ring.current();
        eval_b(b_spec, {x, static_cast<size_t>(model.d)}, bx);
        functional(ring, Bx);
        double next[8];
        std::vector<double> heap;
        double* nx = model.d <= 8 ? next : (heap.resize(static_cast<size_t>(model.d)), heap.data());
        for (int j = 0; j < model.d; ++j) {
            nx[j] = x[j] + h * (-model.beta * x[j] + bx[static_cast<size_t>(j)] + Bx[static_cast<size_t>(j)]) +
                    (noise ? sqrt_h * noise[j] : 0.0);
        }
        ring.push(nx);
    }
};

inline MomentSeries reduce_series(const std::vector<double>& times, const std::vector<double>& vals,
                                  long n_paths) {
    MomentSeries s;
    s.times = times;
    for (size_t r = 0; r < times.size(); ++r) {
        const auto mc = mean_ci({vals.data() + r * static_cast<size_t>(n_paths), static_cast<size_t>(n_paths)});
        s.mean_sq_sup.push_back(mc.mean);
        s.ci95.push_back(mc.ci95);
    }
    return s;
}

} // namespace detail

struct EnsembleResult {
    MomentSeries moments;           // E |X_t|_inf^2 over the segment window
    std::vector<double> marginals;  // first coordinate of X(t); [record][path]
    std::vector<std::vector<Segment>> snapshots; // [record][k < snapshot_paths]
    long n_paths = 0;
};

struct CoupledResult {
    MomentSeries moments; // E |X_t - Y_t|_inf^2
    std::vector<std::vector<std::pair<Segment, Segment>>> snapshots;
    long n_paths = 0;
};

inline EnsembleResult simulate_ensemble(const ModelParams& model, const DriftSpec& b_spec,
                                        const FunctionalSpec& B_spec, const Segment& xi,
                                        const SimConfig& cfg) {
    const SimPlan plan = plan_sim(model, cfg);
    if (xi.m != plan.m || xi.d != model.d || std::abs(xi.r0 - model.r0) > 1e-12)
        throw ConfigError("simulate_ensemble: initial segment shape mismatch");

    const size_t n_rec = plan.record_steps.size();
    EnsembleResult res;
    res.n_paths = cfg.n_paths;
    std::vector<double> sup_vals(n_rec * static_cast<size_t>(cfg.n_paths), 0.0);
    res.marginals.assign(n_rec * static_cast<size_t>(cfg.n_paths), 0.0);
    const int keep = std::min<long>(cfg.snapshot_paths, cfg.n_paths);
    res.snapshots.assign(n_rec, std::vector<Segment>(static_cast<size_t>(keep), Segment(model.r0, plan.m, model.d)));

    const CounterRng rng = CounterRng(cfg.seed).fork(rng_tag::ensemble);
    parallel_for(cfg.n_paths, [&](long path) {
        detail::Ring ring(plan.m, model.d);
        ring.init(xi);
        detail::Stepper st(model, b_spec, B_spec, plan.h);
        std::vector<double> noise(static_cast<size_t>(model.d));
        size_t rec = 0;
        for (long k = 0; k <= plan.n_steps; ++k) {
            if (rec < n_rec && plan.record_steps[rec] == k) {
                const size_t slot = rec * static_cast<size_t>(cfg.n_paths) + static_cast<size_t>(path);
                sup_vals[slot] = ring.sup_sq();
                res.marginals[slot] = ring.current()[0];
                if (path < keep) ring.fill_segment(res.snapshots[rec][static_cast<size_t>(path)]);
                ++rec;
            }
            if (k == plan.n_steps) break;
            if (!cfg.noise_off)
                for (int j = 0; j < model.d; ++j)
                    noise[static_cast<size_t>(j)] = rng.normal(static_cast<uint64_t>(path),
                                                               static_cast<uint64_t>(k), static_cast<uint32_t>(j));
            st.advance(ring, cfg.noise_off ? nullptr : noise.data());
            if (!std::isfinite(ring.current()[0])) throw BlowUpError(k, path);
        }
    });

    std::vector<double> times;
    for (long k : plan.record_steps) times.push_back(static_cast<double>(k) * plan.h);
    res.moments = detail::reduce_series(times, sup_vals, cfg.n_paths);
    return res;
}

/// Synchronous coupling: both chains consume identical Gaussian increments.
inline CoupledResult simulate_coupled(const ModelParams& model, const DriftSpec& b_spec,
                                      const FunctionalSpec& B_spec, const Segment& xi, const Segment& eta,
                                      const SimConfig& cfg) {
    const SimPlan plan = plan_sim(model, cfg);
    if (!xi.same_shape(eta)) throw ConfigError("simulate_coupled: xi and eta shapes differ");
    if (xi.m != plan.m || xi.d != model.d || std::abs(xi.r0 - model.r0) > 1e-12)
        throw ConfigError("simulate_coupled: initial segment shape mismatch");

    const size_t n_rec = plan.record_steps.size();
    CoupledResult res;
    res.n_paths = cfg.n_paths;
    std::vector<double> diff_vals(n_rec * static_cast<size_t>(cfg.n_paths), 0.0);
    const int keep = std::min<long>(cfg.snapshot_paths, cfg.n_paths);
    res.snapshots.assign(
        n_rec, std::vector<std::pair<Segment, Segment>>(
                   static_cast<size_t>(keep),
                   {Segment(model.r0, plan.m, model.d), Segment(model.r0, plan.m, model.d)}));

    const CounterRng rng = CounterRng(cfg.seed).fork(rng_tag::couple);
    parallel_for(cfg.n_paths, [&](long path) {
        detail::Ring rx(plan.m, model.d), ry(plan.m, model.d);
        rx.init(xi);
        ry.init(eta);
        detail::Stepper sx(model, b_spec, B_spec, plan.h);
        detail::Stepper sy(model, b_spec, B_spec, plan.h);
        std::vector<double> noise(static_cast<size_t>(model.d));
        size_t rec = 0;
        for (long k = 0; k <= plan.n_steps; ++k) {
            if (rec < n_rec && plan.record_steps[rec] == k) {
                const size_t slot = rec * static_cast<size_t>(cfg.n_paths) + static_cast<size_t>(path);
                diff_vals[slot] = rx.sup_diff_sq(ry);
                if (path < keep) {
                    rx.fill_segment(res.snapshots[rec][static_cast<size_t>(path)].first);
                    ry.fill_segment(res.snapshots[rec][static_cast<size_t>(path)].second);
                }
                ++rec;
            }
            if (k == plan.n_steps) break;
            if (!cfg.noise_off)
                for (int j = 0; j < model.d; ++j)
                    noise[static_cast<size_t>(j)] = rng.normal(static_cast<uint64_t>(path),
                                                               static_cast<uint64_t>(k), static_cast<uint32_t>(j));
            sx.advance(rx, cfg.noise_off ? nullptr : noise.data());
            sy.advance(ry, cfg.noise_off ? nullptr : noise.data());
            if (!std::isfinite(rx.current()[0]) || !std::isfinite(ry.current()[0]))
                throw BlowUpError(k, path);
        }
    });

    std::vector<double> times;
    for (long k : plan.record_steps) times.push_back(static_cast<double>(k) * plan.h);
    res.moments = detail::reduce_series(times, diff_vals, cfg.n_paths);
    return res;
}

struct StationaryConfig {
    double burn_in = 10.0;
    long n_samples = 1000;
    double spacing = 0.0; // >= r0; 0 means "use r0"
    int n_chains = 16;
};

struct StationaryResult {
    std::vector<Segment> segments;
    std::vector<double> terminal; // first coordinate of xi(0) per sample
    double terminal_mean = 0.0;
    double terminal_var = 0.0;
    bool feasibility_warning = false; // set by callers lacking a certificate
};

/// Long-run sampler: n_chains independent chains from the zero segment,
/// burn-in discarded, snapshots spaced >= r0 apart taken as approximate
/// draws from the invariant law.
inline StationaryResult stationary_sampler(const ModelParams& model, const DriftSpec& b_spec,
                                           const FunctionalSpec& B_spec, const SimConfig& cfg,
                                           const StationaryConfig& st) {
    if (st.n_samples < 1) throw ConfigError("stationary: n_samples must be >= 1");
    if (st.n_chains < 1) throw ConfigError("stationary: n_chains must be >= 1");
    SimConfig probe = cfg;
    probe.record_times.clear();
    probe.T = std::max(cfg.h, model.r0); // plan_sim wants T > 0; steps counted manually below
    const SimPlan plan = plan_sim(model, probe);

    double spacing = st.spacing > 0.0 ? st.spacing : model.r0;
    if (spacing < model.r0 - 1e-12) throw ConfigError("stationary: spacing must be >= r0");
    const long spacing_steps = std::lround(spacing / plan.h);
    if (std::abs(spacing - static_cast<double>(spacing_steps) * plan.h) > 1e-9 * spacing)
        throw ConfigError("stationary: spacing must sit on the step grid");
    const long burn_steps = std::lround(std::max(st.burn_in, 0.0) / plan.h);

    const long chains = std::min<long>(st.n_chains, st.n_samples);
    const long per_chain = (st.n_samples + chains - 1) / chains;

    StationaryResult res;
    res.segments.assign(static_cast<size_t>(st.n_samples), Segment(model.r0, plan.m, model.d));
    res.terminal.assign(static_cast<size_t>(st.n_samples), 0.0);

    const CounterRng rng = CounterRng(cfg.seed).fork(rng_tag::stationary);
    const Segment start = Segment::zero(model.r0, plan.m, model.d);
    parallel_for(chains, [&](long chain) {
        detail::Ring ring(plan.m, model.d);
        ring.init(start);
        detail::Stepper stp(model, b_spec, B_spec, plan.h);
        std::vector<double> noise(static_cast<size_t>(model.d));
        long taken = 0;
        const long total_steps = burn_steps + spacing_steps * per_chain;
        for (long k = 0; k < total_steps && taken < per_chain; ++k) {
            if (!cfg.noise_off)
                for (int j = 0; j < model.d; ++j)
                    noise[static_cast<size_t>(j)] = rng.normal(static_cast<uint64_t>(chain),
                                                               static_cast<uint64_t>(k), static_cast<uint32_t>(j));
            stp.advance(ring, cfg.noise_off ? nullptr : noise.data());
            if (!std::isfinite(ring.current()[0])) throw BlowUpError(k, chain);
            const long past = k + 1 - burn_steps;
            if (past > 0 && past % spacing_steps == 0) {
                const long global = chain * per_chain + taken;
                if (global < st.n_samples) {
                    ring.fill_segment(res.segments[static_cast<size_t>(global)]);
                    res.terminal[static_cast<size_t>(global)] = ring.current()[0];
                }
                ++taken;
            }
        }
    });

    const auto mc = mean_ci(res.terminal);
    res.terminal_mean = mc.mean;
    std::vector<double> sq(res.terminal.size());
    for (size_t i = 0; i < sq.size(); ++i) {
        const double c = res.terminal[i] - mc.mean;
        sq[i] = c * c;
    }
    res.terminal_var = res.terminal.size() > 1 ? pairwise_sum(sq) / (static_cast<double>(sq.size()) - 1.0) : 0.0;
    return res;
}

} // namespace fsde
