#pragma once

#include "fsde/constants.hpp"
#include "fsde/csv.hpp"
#include "fsde/drift.hpp"
#include "fsde/engine.hpp"
#include "fsde/metrics.hpp"
#include "fsde/model.hpp"
#include "fsde/segment.hpp"
#include "fsde/zvonkin.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsde {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit-code contract: 0 = all checks pass; 2 = bound violation;
/// 3 = infeasible; 4 = configuration error.
enum ExitCode : int { kOk = 0, kBoundViolation = 2, kInfeasible = 3, kConfigError = 4 };

struct StageError : std::runtime_error {
    std::string stage;
    StageError(const std::string& stage_, const std::string& msg)
        : std::runtime_error("stage '" + stage_ + "': " + msg), stage(stage_) {}
};

struct ExperimentConfig {
    ModelParams model;
    DriftSpec drift_b;
    FunctionalSpec drift_B;
    SimConfig sim;
    std::optional<TuningParams> tuning; // nullopt = "auto"
    Segment xi, eta;
    std::string output_dir;
    StationaryConfig stationary;
    bool zvonkin_enabled = false;
    ZvonkinGridConfig zvonkin_grid;
    QuadratureConfig zvonkin_quad;
    double zvonkin_tol = 1e-8;
    double moment_eps = 0.5;        // epsilon of the Lyapunov bound
    double moment_eps_moment = 0.0; // 0 = use beta
    nlohmann::json raw;             // canonical parsed document (for hashing)
};

namespace detail {

inline Segment parse_segment(const nlohmann::json& j, const ModelParams& model, int m) {
    if (j.contains("preset")) {
        const std::string p = j.at("preset").get<std::string>();
        std::vector<double> value(static_cast<size_t>(model.d), 0.0);
        if (j.contains("value")) {
            if (j.at("value").is_number()) {
                value.assign(static_cast<size_t>(model.d), j.at("value").get<double>());
            } else {
                value = j.at("value").get<std::vector<double>>();
                if (static_cast<int>(value.size()) != model.d)
                    throw ConfigError("segment preset value dimension mismatch");
            }
        }
        if (p == "zero") return Segment::zero(model.r0, m, model.d);
        if (p == "constant") return Segment::constant(model.r0, m, model.d, value);
        if (p == "spike") return Segment::spike(model.r0, m, model.d, value);
        throw ConfigError("unknown segment preset '" + p + "'");
    }
    if (j.contains("values")) {
        const auto rows = j.at("values").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(rows.size()) != m + 1) throw ConfigError("segment values need m+1 rows");
        Segment s(model.r0, m, model.d);
        for (int i = 0; i <= m; ++i) {
            if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != model.d)
                throw ConfigError("segment row dimension mismatch");
            for (int jj = 0; jj < model.d; ++jj)
                s.values[static_cast<size_t>(i) * model.d + jj] = rows[static_cast<size_t>(i)][static_cast<size_t>(jj)];
        }
        return s;
    }
    throw ConfigError("segment needs 'preset' or 'values'");
}

inline DriftSpec parse_drift_b(const nlohmann::json& j, int d) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") return DriftSpec::zero(d);
    if (kind == "holder_power")
        return DriftSpec::holder_power(j.at("c").get<double>(), j.at("alpha").get<double>(),
                                       j.at("cap").get<double>(), d);
    throw ConfigError("unknown drift_b kind '" + kind + "' (custom drifts are not serializable)");
}

inline FunctionalSpec parse_drift_B(const nlohmann::json& j, int d) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") return FunctionalSpec::zero(d);
    if (kind == "terminal_saturated") return FunctionalSpec::terminal_saturated(j.at("scale").get<double>(), d);
    if (kind == "window_average")
        return FunctionalSpec::window_average(j.at("scale").get<double>(), j.at("clip").get<double>(), d);
    throw ConfigError("unknown drift_B kind '" + kind + "' (custom functionals are not serializable)");
}

inline void check_close(double a, double b, const std::string& what) {
    const double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    if (std::abs(a - b) > tol)
        throw ConfigError("cross-field mismatch: " + what + " (" + format_double(a) + " vs declared " +
                          format_double(b) + ")");
}

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace detail

inline ModelParams model_from_json(const nlohmann::json& j) {
    ModelParams m;
    m.beta = j.at("beta").get<double>();
    m.kappa = j.at("kappa").get<double>();
    m.alpha = j.at("alpha").get<double>();
    m.b_inf = j.at("b_inf").get<double>();
    m.lambda_B = j.at("lambda_B").get<double>();
    m.B_inf = j.at("B_inf").get<double>();
    m.r0 = j.at("r0").get<double>();
    m.d = j.at("d").get<int>();
    m.validate();
    return m;
}

inline nlohmann::json model_to_json(const ModelParams& m) {
    return {{"beta", m.beta},   {"kappa", m.kappa},       {"alpha", m.alpha}, {"b_inf", m.b_inf},
            {"lambda_B", m.lambda_B}, {"B_inf", m.B_inf}, {"r0", m.r0},       {"d", m.d}};
}

inline TuningParams tuning_from_json(const nlohmann::json& j) {
    TuningParams t;
    t.delta = j.at("delta").get<double>();
    t.eps = j.at("eps").get<double>();
    t.lambda = j.at("lambda").get<double>();
    if (j.contains("eps_moment")) t.eps_moment = j.at("eps_moment").get<double>();
    t.validate();
    return t;
}

inline nlohmann::json certificate_to_json(const ContractionCertificate& c) {
    nlohmann::json t = {{"delta", c.tuning.delta}, {"eps", c.tuning.eps}, {"lambda", c.tuning.lambda}};
    if (c.tuning.has_eps_moment()) t["eps_moment"] = c.tuning.eps_moment;
    return {{"tuning", t},         {"lambda0", c.lambda0},     {"upsilon", c.upsilon},
            {"lambda_big", c.lambda_big}, {"rate", c.rate},    {"prefactor", c.prefactor},
            {"feasible", c.feasible},     {"kappa2", c.kappa2}, {"kappa0", c.kappa0}};
}

inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;
    try {
        cfg.model = model_from_json(j.at("model"));
        cfg.drift_b = detail::parse_drift_b(j.at("drift_b"), cfg.model.d);
        cfg.drift_B = detail::parse_drift_B(j.at("drift_B"), cfg.model.d);

        // Declared certificates must agree with the model fields feeding the
        // closed-form constants.
        detail::check_close(cfg.model.kappa, cfg.drift_b.declared_kappa, "model.kappa");
        if (!cfg.drift_b.is_zero()) detail::check_close(cfg.model.alpha, cfg.drift_b.declared_alpha, "model.alpha");
        detail::check_close(cfg.model.b_inf, cfg.drift_b.declared_b_inf, "model.b_inf");
        detail::check_close(cfg.model.lambda_B, cfg.drift_B.declared_lambda_B, "model.lambda_B");
        detail::check_close(cfg.model.B_inf, cfg.drift_B.declared_B_inf, "model.B_inf");

        const auto& js = j.at("sim");
        cfg.sim.h = js.at("h").get<double>();
        cfg.sim.T = js.at("T").get<double>();
        cfg.sim.n_paths = js.at("n_paths").get<long>();
        cfg.sim.seed = js.at("seed").get<uint64_t>();
        cfg.sim.record_times = js.at("record_times").get<std::vector<double>>();
        if (js.contains("snapshot_paths")) cfg.sim.snapshot_paths = js.at("snapshot_paths").get<int>();
        if (js.contains("noise_off")) cfg.sim.noise_off = js.at("noise_off").get<bool>();

        const SimPlan plan = plan_sim(cfg.model, cfg.sim); // validates h | r0, h < 1/(2 beta)

        if (j.at("tuning").is_string()) {
            if (j.at("tuning").get<std::string>() != "auto") throw ConfigError("tuning must be a triple or \"auto\"");
            cfg.tuning.reset();
        } else {
            cfg.tuning = tuning_from_json(j.at("tuning"));
        }

        cfg.xi = detail::parse_segment(j.at("xi"), cfg.model, plan.m);
        cfg.eta = j.contains("eta") ? detail::parse_segment(j.at("eta"), cfg.model, plan.m)
                                    : Segment::zero(cfg.model.r0, plan.m, cfg.model.d);
        cfg.output_dir = j.at("output_dir").get<std::string>();

        if (j.contains("stationary")) {
            const auto& s = j.at("stationary");
            if (s.contains("burn_in")) cfg.stationary.burn_in = s.at("burn_in").get<double>();
            if (s.contains("n_samples")) cfg.stationary.n_samples = s.at("n_samples").get<long>();
            if (s.contains("spacing")) cfg.stationary.spacing = s.at("spacing").get<double>();
            if (s.contains("n_chains")) cfg.stationary.n_chains = s.at("n_chains").get<int>();
        }
        cfg.zvonkin_enabled = !cfg.drift_b.is_zero() && cfg.model.d == 1;
        if (j.contains("zvonkin")) {
            const auto& z = j.at("zvonkin");
            if (z.contains("enabled")) cfg.zvonkin_enabled = z.at("enabled").get<bool>();
            if (z.contains("n_x")) cfg.zvonkin_grid.n_x = z.at("n_x").get<int>();
            if (z.contains("L")) cfg.zvonkin_grid.L = z.at("L").get<double>();
            if (z.contains("n_hermite")) cfg.zvonkin_quad.n_hermite = z.at("n_hermite").get<int>();
            if (z.contains("n_t")) cfg.zvonkin_quad.n_t = z.at("n_t").get<int>();
            if (z.contains("tol")) cfg.zvonkin_tol = z.at("tol").get<double>();
        }
        if (j.contains("moment")) {
            const auto& m = j.at("moment");
            if (m.contains("eps")) cfg.moment_eps = m.at("eps").get<double>();
            if (m.contains("eps_moment")) cfg.moment_eps_moment = m.at("eps_moment").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return parse_experiment(j);
}

struct RunOutcome {
    int exit_code = kOk;
    std::map<std::string, std::string> checks; // name -> pass | fail | n/a
    std::map<std::string, std::string> stages; // name -> ok | skipped
    std::optional<ContractionCertificate> certificate;
    std::string output_dir;
};

namespace detail {

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

inline void write_series_csv(const std::string& path, const MomentSeries& s) {
    CsvWriter w(path, {"t", "estimate", "ci95"});
    for (size_t i = 0; i < s.times.size(); ++i) w.row({s.times[i], s.mean_sq_sup[i], s.ci95[i]});
}

inline void write_bound_csv(const std::string& path, const std::vector<double>& times,
                            const std::vector<double>& bounds) {
    CsvWriter w(path, {"t", "bound"});
    for (size_t i = 0; i < times.size(); ++i) w.row({times[i], bounds[i]});
}

inline void write_segments_csv(const std::string& path, std::span<const Segment> segs, long limit) {
    std::vector<std::string> header = {"sample", "time_offset"};
    const int d = segs.empty() ? 1 : segs[0].d;
    for (int j = 0; j < d; ++j) header.push_back("x_" + std::to_string(j + 1));
    CsvWriter w(path, header);
    const long n = std::min<long>(limit, static_cast<long>(segs.size()));
    for (long s = 0; s < n; ++s) {
        const Segment& seg = segs[static_cast<size_t>(s)];
        for (int i = 0; i <= seg.m; ++i) {
            std::vector<double> row = {static_cast<double>(s), -seg.r0 + i * seg.h()};
            for (int j = 0; j < seg.d; ++j) row.push_back(seg.values[static_cast<size_t>(i) * seg.d + j]);
            w.row(row);
        }
    }
}

} // namespace detail

/// Full pipeline: constants -> (optional) zvonkin -> couple -> simulate ->
/// stationary -> metrics. Artifacts land in cfg.output_dir; the manifest is
/// written last. Bound-check failures produce exit code 2, an unsatisfiable
/// "auto" tuning exit code 3.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const auto t_start = std::chrono::steady_clock::now();
    RunOutcome out;
    out.output_dir = cfg.output_dir;
    fs::create_directories(cfg.output_dir);
    const std::string dir = cfg.output_dir + "/";

    // The hash identifies the experiment, not its destination directory.
    const std::string config_hash = [&] {
        nlohmann::json canonical = cfg.raw;
        canonical.erase("output_dir");
        return detail::hex64(detail::fnv1a(canonical.dump()));
    }();

    auto finish = [&](int code) {
        out.exit_code = code;
        nlohmann::json checks_j;
        for (const auto& [k, v] : out.checks) checks_j[k] = v;
        checks_j["exit_code"] = code;
        detail::write_json_file(dir + "checks.json", checks_j);
        nlohmann::json stages_j;
        for (const auto& [k, v] : out.stages) stages_j[k] = v;
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        detail::write_json_file(dir + "manifest.json",
                                {{"config_hash", config_hash},
                                 {"seed", cfg.sim.seed},
                                 {"tool_version", kToolVersion},
                                 {"wall_clock_seconds", wall},
                                 {"h", cfg.model.r0 / std::lround(cfg.model.r0 / cfg.sim.h)},
                                 {"stages", stages_j}});
        return out;
    };

    // ---- constants ---------------------------------------------------
    ContractionCertificate cert;
    if (cfg.tuning) {
        cert = make_certificate(cfg.model, *cfg.tuning);
    } else {
        const SearchResult sr = feasibility_search(cfg.model);
        nlohmann::json search_j = {{"evaluated", sr.evaluated},
                                   {"feasible", sr.best.has_value()},
                                   {"grid",
                                    {{"delta", {sr.grid.delta_lo, sr.grid.delta_hi, sr.grid.n_delta}},
                                     {"eps", {sr.grid.eps_lo, sr.grid.eps_hi, sr.grid.n_eps}},
                                     {"lambda_rule", "log-spaced above lambda0(delta)"},
                                     {"n_lambda", sr.grid.n_lambda},
                                     {"refine_rounds", sr.grid.refine_rounds}}},
                                   {"incumbent", certificate_to_json(sr.incumbent)}};
        detail::write_json_file(dir + "search.json", search_j);
        if (!sr.best) {
            out.stages["constants"] = "ok";
            out.checks["feasibility"] = "fail";
            return finish(kInfeasible);
        }
        cert = *sr.best;
    }
    out.certificate = cert;
    detail::write_json_file(dir + "certificate.json", certificate_to_json(cert));
    out.stages["constants"] = "ok";

    // ---- zvonkin (optional) -------------------------------------------
    if (cfg.zvonkin_enabled) {
        const OUParams ou{cfg.model.beta};
        const GridField field = solve_zvonkin(cfg.drift_b, ou, cert.tuning.lambda, cert.tuning.delta,
                                              cfg.zvonkin_grid, cfg.zvonkin_quad, cfg.zvonkin_tol);
        const ZvonkinVerification ver = verify_gradient_bounds(field, cfg.drift_b, cfg.model,
                                                               cert.tuning.delta, cert.tuning.lambda);
        CsvWriter w(dir + "field.csv", {"x", "u", "du", "d2u"});
        for (int i = 0; i < field.n_x; ++i)
            w.row({field.x(i), field.u[static_cast<size_t>(i)], field.du[static_cast<size_t>(i)],
                   field.d2u[static_cast<size_t>(i)]});
        detail::write_json_file(dir + "zvonkin.json",
                                {{"lambda", field.lambda},
                                 {"delta", field.delta},
                                 {"beta", field.beta},
                                 {"model", model_to_json(cfg.model)},
                                 {"drift_b", cfg.raw.at("drift_b")},
                                 {"n_x", field.n_x},
                                 {"L", -field.x0},
                                 {"residual", field.residual},
                                 {"iterations", field.iterations},
                                 {"observed_contraction", field.observed_contraction},
                                 {"max_du", ver.max_du},
                                 {"max_d2u", ver.max_d2u},
                                 {"holder_ratio", ver.holder_ratio},
                                 {"kappa_tilde", ver.kappa_tilde},
                                 {"pde_residual", ver.pde_residual},
                                 {"lambda_u_inf", ver.lambda_u_inf},
                                 {"bounds_ok", ver.all_ok()}});
        out.stages["zvonkin"] = "ok";
        out.checks["zvonkin_bounds"] = ver.all_ok() ? "pass" : "fail";
    } else {
        out.stages["zvonkin"] = "skipped";
    }

    // ---- couple ---------------------------------------------------------
    const CoupledResult coupled = simulate_coupled(cfg.model, cfg.drift_b, cfg.drift_B, cfg.xi, cfg.eta, cfg.sim);
    detail::write_series_csv(dir + "moments.csv", coupled.moments);
    const double init_d = segment_distance(cfg.xi, cfg.eta);
    const double init_sq = init_d * init_d;
    std::vector<double> bounds;
    bool dominated = true;
    for (size_t i = 0; i < coupled.moments.times.size(); ++i) {
        const double bd = contraction_bound(cfg.model, cert.tuning, coupled.moments.times[i], init_sq);
        bounds.push_back(bd);
        if (coupled.moments.mean_sq_sup[i] + coupled.moments.ci95[i] > bd) dominated = false;
    }
    detail::write_bound_csv(dir + "bound.csv", coupled.moments.times, bounds);
    out.stages["couple"] = "ok";
    out.checks["contraction_domination"] = dominated ? "pass" : "fail";

    // Rate fit over the post-transient window (first r0+1 time units dropped).
    bool ratefit_ok = true;
    try {
        const RateFit rf = fit_rate(coupled.moments, cfg.model.r0 + 1.0, cfg.sim.T);
        detail::write_json_file(dir + "ratefit.json",
                                {{"kappa1", rf.kappa1},
                                 {"kappa2", rf.kappa2},
                                 {"ci", rf.ci},
                                 {"r_squared", rf.r_squared},
                                 {"n_points", rf.n_points},
                                 {"window", {rf.t_lo, rf.t_hi}}});
        if (cert.feasible) {
            ratefit_ok = rf.kappa2 >= cert.kappa2 - rf.ci;
            out.checks["ratefit_vs_kappa2"] = ratefit_ok ? "pass" : "fail";
        } else {
            out.checks["ratefit_vs_kappa2"] = "n/a";
        }
    } catch (const WindowError&) {
        detail::write_json_file(dir + "ratefit.json", {{"error", "window has no positive entries"}});
        out.checks["ratefit_vs_kappa2"] = "n/a";
    }

    // ---- simulate (second-moment bound) ----------------------------------
    const EnsembleResult ens = simulate_ensemble(cfg.model, cfg.drift_b, cfg.drift_B, cfg.xi, cfg.sim);
    detail::write_series_csv(dir + "ensemble_moments.csv", ens.moments);
    {
        CsvWriter w(dir + "marginals.csv", {"t", "path", "x1"});
        for (size_t r = 0; r < ens.moments.times.size(); ++r)
            for (long pth = 0; pth < ens.n_paths; ++pth)
                w.row({ens.moments.times[r], static_cast<double>(pth),
                       ens.marginals[r * static_cast<size_t>(ens.n_paths) + static_cast<size_t>(pth)]});
    }
    const double eps_m = cfg.tuning && cfg.tuning->eps > 0.0 ? cfg.tuning->eps : cfg.moment_eps;
    const double epsm = cfg.moment_eps_moment > 0.0
                            ? cfg.moment_eps_moment
                            : (cfg.tuning && cfg.tuning->has_eps_moment() ? cfg.tuning->eps_moment
                                                                          : cfg.model.beta);
    const MomentCertificate mc = moment_certificate(cfg.model, eps_m, epsm, cfg.drift_B.B_at_zero);
    const double xi_sup = sup_norm(cfg.xi);
    if (mc.valid) {
        std::vector<double> mbounds;
        bool mdominated = true;
        for (size_t i = 0; i < ens.moments.times.size(); ++i) {
            const double bd = moment_bound(cfg.model, eps_m, epsm, xi_sup * xi_sup, cfg.drift_B.B_at_zero,
                                           ens.moments.times[i]);
            mbounds.push_back(bd);
            if (ens.moments.mean_sq_sup[i] + ens.moments.ci95[i] > bd) mdominated = false;
        }
        detail::write_bound_csv(dir + "moment_bound.csv", ens.moments.times, mbounds);
        out.checks["moment_domination"] = mdominated ? "pass" : "fail";
    } else {
        out.checks["moment_domination"] = "n/a";
    }
    detail::write_json_file(dir + "moment.json",
                            {{"eps", mc.eps},
                             {"eps_moment", mc.eps_moment},
                             {"gamma", mc.gamma_const},
                             {"transient_rate", mc.transient_rate},
                             {"asymptotic_bound", mc.valid ? nlohmann::json(mc.asymptotic_bound)
                                                           : nlohmann::json("inf")},
                             {"valid", mc.valid}});
    out.stages["simulate"] = "ok";

    // ---- stationary -----------------------------------------------------
    const StationaryResult st = stationary_sampler(cfg.model, cfg.drift_b, cfg.drift_B, cfg.sim, cfg.stationary);
    detail::write_segments_csv(dir + "segments.csv", st.segments, 256);
    {
        CsvWriter w(dir + "stationary_marginals.csv", {"sample", "x1"});
        for (size_t i = 0; i < st.terminal.size(); ++i) w.row({static_cast<double>(i), st.terminal[i]});
    }
    detail::write_json_file(dir + "stationary.json",
                            {{"n_samples", static_cast<long>(st.terminal.size())},
                             {"terminal_mean", st.terminal_mean},
                             {"terminal_var", st.terminal_var},
                             {"burn_in", cfg.stationary.burn_in},
                             {"spacing", cfg.stationary.spacing > 0.0 ? cfg.stationary.spacing : cfg.model.r0},
                             {"feasible_certificate", cert.feasible}});
    out.stages["stationary"] = "ok";

    // ---- metrics: transient marginals vs stationary law ------------------
    {
        CsvWriter w(dir + "divergence.csv", {"t", "tv", "kl", "n_bins"});
        for (size_t r = 0; r < ens.moments.times.size(); ++r) {
            const std::span<const double> marg{ens.marginals.data() + r * static_cast<size_t>(ens.n_paths),
                                               static_cast<size_t>(ens.n_paths)};
            const DivergenceEstimate de = divergence_estimators(marg, st.terminal);
            w.row({ens.moments.times[r], de.tv, de.kl, static_cast<double>(de.n_bins)});
        }
    }
    out.stages["metrics"] = "ok";

    bool any_fail = false;
    for (const auto& [k, v] : out.checks)
        if (v == "fail") any_fail = true;
    return finish(any_fail ? kBoundViolation : kOk);
}

/// Consolidates a finished run directory into report.json + curves.csv
/// (t, empirical, ci, bound). Pure function of the directory contents.
inline void emit_report(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const std::string dir = run_dir + "/";
    if (!fs::exists(dir + "manifest.json")) throw StageError("manifest", "missing manifest.json");
    if (!fs::exists(dir + "moments.csv")) throw StageError("couple", "missing moments.csv");
    if (!fs::exists(dir + "bound.csv")) throw StageError("couple", "missing bound.csv");

    const CsvTable moments = read_csv(dir + "moments.csv");
    const CsvTable bound = read_csv(dir + "bound.csv");
    if (moments.rows.size() != bound.rows.size()) throw StageError("couple", "moments/bound row mismatch");

    {
        CsvWriter w(dir + "curves.csv", {"t", "empirical", "ci", "bound"});
        const int tc = moments.column("t"), ec = moments.column("estimate"), cc = moments.column("ci95");
        const int bc = bound.column("bound");
        for (size_t i = 0; i < moments.rows.size(); ++i)
            w.row({moments.rows[i][static_cast<size_t>(tc)], moments.rows[i][static_cast<size_t>(ec)],
                   moments.rows[i][static_cast<size_t>(cc)], bound.rows[i][static_cast<size_t>(bc)]});
    }

    nlohmann::json report;
    report["manifest"] = detail::read_json_file(dir + "manifest.json");
    report["checks"] = detail::read_json_file(dir + "checks.json");
    if (fs::exists(dir + "certificate.json")) report["certificate"] = detail::read_json_file(dir + "certificate.json");
    if (fs::exists(dir + "ratefit.json")) report["ratefit"] = detail::read_json_file(dir + "ratefit.json");
    if (fs::exists(dir + "moment.json")) report["moment"] = detail::read_json_file(dir + "moment.json");
    if (fs::exists(dir + "stationary.json")) report["stationary"] = detail::read_json_file(dir + "stationary.json");
    detail::write_json_file(dir + "report.json", report);
}

} // namespace fsde
