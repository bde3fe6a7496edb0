// Command-line front end for the delay-SDE contraction laboratory.
//
// Subcommands: constants eval|search, zvonkin solve|verify, simulate, couple,
// stationary, metrics w2|tv|kl|pinsker|fit, run, report.
// Exit codes: 0 ok, 2 bound violation, 3 infeasible, 4 configuration error.

#include "fsde/constants.hpp"
#include "fsde/csv.hpp"
#include "fsde/drift.hpp"
#include "fsde/engine.hpp"
#include "fsde/experiment.hpp"
#include "fsde/metrics.hpp"
#include "fsde/zvonkin.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fsde::ConfigError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw fsde::ConfigError(std::string("json parse: ") + e.what());
    }
    return j;
}

/// Extract one numeric column from a sample CSV; falls back to the single
/// column when `col` is absent and the table has exactly one.
std::vector<double> read_samples(const std::string& path, const std::string& col) {
    const fsde::CsvTable t = fsde::read_csv(path);
    for (const auto& h : t.header)
        if (h == col) return t.col(col);
    if (t.header.size() == 1) return t.col(t.header[0]);
    throw fsde::ConfigError("file " + path + " has no column '" + col + "'");
}

fsde::DiscreteDist read_dist(const std::string& path) {
    const fsde::CsvTable t = fsde::read_csv(path);
    fsde::DiscreteDist d;
    d.atoms = t.col("atom");
    d.weights = t.col("weight");
    d.validate();
    return d;
}

int cmd_constants_eval(const std::string& file, std::optional<double> delta, std::optional<double> eps,
                       std::optional<double> lambda) {
    const json j = read_json(file);
    const fsde::ModelParams model = fsde::model_from_json(j.contains("model") ? j.at("model") : j);
    fsde::TuningParams t;
    if (j.contains("tuning") && !j.at("tuning").is_string()) {
        t = fsde::tuning_from_json(j.at("tuning"));
    } else if (delta && eps && lambda) {
        t.delta = *delta;
        t.eps = *eps;
        t.lambda = *lambda;
        t.validate();
    } else {
        throw fsde::ConfigError("constants eval: provide a tuning block or --delta/--eps/--lambda");
    }
    const fsde::ContractionCertificate c = fsde::make_certificate(model, t);
    const json report = {{"lambda0", c.lambda0},
                         {"upsilon", c.upsilon},
                         {"lambda_big", c.lambda_big},
                         {"sigma", fsde::sigma_lambda(model, t)},
                         {"certificate", fsde::certificate_to_json(c)}};
    std::cout << report.dump(2) << '\n';
    return fsde::kOk;
}

int cmd_constants_search(const std::string& file) {
    const json j = read_json(file);
    const fsde::ModelParams model = fsde::model_from_json(j.contains("model") ? j.at("model") : j);
    const fsde::SearchResult sr = fsde::feasibility_search(model);
    json report = {{"evaluated", sr.evaluated},
                   {"feasible", sr.best.has_value()},
                   {"grid",
                    {{"delta", {sr.grid.delta_lo, sr.grid.delta_hi, sr.grid.n_delta}},
                     {"eps", {sr.grid.eps_lo, sr.grid.eps_hi, sr.grid.n_eps}},
                     {"n_lambda", sr.grid.n_lambda},
                     {"refine_rounds", sr.grid.refine_rounds}}}};
    if (sr.best)
        report["certificate"] = fsde::certificate_to_json(*sr.best);
    else
        report["verdict"] = {{"status", "infeasible"}, {"incumbent", fsde::certificate_to_json(sr.incumbent)}};
    std::cout << report.dump(2) << '\n';
    return sr.best ? fsde::kOk : fsde::kInfeasible;
}

int cmd_zvonkin_solve(const std::string& file) {
    const fsde::ExperimentConfig cfg = fsde::load_experiment(file);
    if (!cfg.tuning) throw fsde::ConfigError("zvonkin solve: needs an explicit tuning triple");
    std::filesystem::create_directories(cfg.output_dir);
    const std::string dir = cfg.output_dir + "/";
    const fsde::OUParams ou{cfg.model.beta};
    const fsde::GridField f = fsde::solve_zvonkin(cfg.drift_b, ou, cfg.tuning->lambda, cfg.tuning->delta,
                                                  cfg.zvonkin_grid, cfg.zvonkin_quad, cfg.zvonkin_tol);
    const fsde::ZvonkinVerification v =
        fsde::verify_gradient_bounds(f, cfg.drift_b, cfg.model, cfg.tuning->delta, cfg.tuning->lambda);
    fsde::CsvWriter w(dir + "field.csv", {"x", "u", "du", "d2u"});
    for (int i = 0; i < f.n_x; ++i)
        w.row({f.x(i), f.u[static_cast<size_t>(i)], f.du[static_cast<size_t>(i)],
               f.d2u[static_cast<size_t>(i)]});
    const json diag = {{"lambda", f.lambda},
                       {"delta", f.delta},
                       {"beta", f.beta},
                       {"model", fsde::model_to_json(cfg.model)},
                       {"drift_b", cfg.raw.at("drift_b")},
                       {"n_x", f.n_x},
                       {"L", -f.x0},
                       {"residual", f.residual},
                       {"iterations", f.iterations},
                       {"observed_contraction", f.observed_contraction},
                       {"max_du", v.max_du},
                       {"max_d2u", v.max_d2u},
                       {"holder_ratio", v.holder_ratio},
                       {"kappa_tilde", v.kappa_tilde},
                       {"pde_residual", v.pde_residual},
                       {"lambda_u_inf", v.lambda_u_inf},
                       {"bounds_ok", v.all_ok()}};
    std::ofstream(dir + "zvonkin.json") << diag.dump(2) << '\n';
    std::cout << diag.dump(2) << '\n';
    return v.all_ok() ? fsde::kOk : fsde::kBoundViolation;
}

int cmd_zvonkin_verify(const std::string& run_dir) {
    const std::string dir = run_dir + "/";
    const json diag = read_json(dir + "zvonkin.json");
    const fsde::ModelParams model = fsde::model_from_json(diag.at("model"));
    const fsde::DriftSpec b = [&] {
        const json& jb = diag.at("drift_b");
        if (jb.at("kind") == "zero") return fsde::DriftSpec::zero(model.d);
        return fsde::DriftSpec::holder_power(jb.at("c").get<double>(), jb.at("alpha").get<double>(),
                                             jb.at("cap").get<double>(), model.d);
    }();
    const fsde::CsvTable t = fsde::read_csv(dir + "field.csv");
    fsde::GridField f;
    f.lambda = diag.at("lambda").get<double>();
    f.delta = diag.at("delta").get<double>();
    f.beta = diag.at("beta").get<double>();
    f.n_x = static_cast<int>(t.rows.size());
    if (f.n_x < 16) throw fsde::ConfigError("zvonkin verify: stored field too small");
    const auto xs = t.col("x");
    f.x0 = xs.front();
    f.hx = (xs.back() - xs.front()) / (f.n_x - 1);
    f.u = t.col("u");
    f.du = t.col("du");
    f.d2u = t.col("d2u");

    // The stored derivative tables must match the stated stencils.
    std::vector<double> du, d2u;
    fsde::detail::central_differences(f.u, f.hx, du, d2u);
    double dmax = 0.0;
    for (size_t i = 0; i < du.size(); ++i)
        dmax = std::max({dmax, std::abs(du[i] - f.du[i]), std::abs(d2u[i] - f.d2u[i]) * f.hx});
    const bool stencil_ok = dmax < 1e-8;

    const fsde::ZvonkinVerification v = fsde::verify_gradient_bounds(f, b, model, f.delta, f.lambda);
    const json report = {{"stencil_consistent", stencil_ok},
                         {"max_du", v.max_du},
                         {"max_d2u", v.max_d2u},
                         {"holder_ratio", v.holder_ratio},
                         {"kappa_tilde", v.kappa_tilde},
                         {"pde_residual", v.pde_residual},
                         {"lambda_u_inf", v.lambda_u_inf},
                         {"bounds_ok", v.all_ok()},
                         {"failure", v.failure}};
    std::cout << report.dump(2) << '\n';
    return (stencil_ok && v.all_ok()) ? fsde::kOk : fsde::kBoundViolation;
}

int cmd_simulate(const std::string& file) {
    const fsde::ExperimentConfig cfg = fsde::load_experiment(file);
    std::filesystem::create_directories(cfg.output_dir);
    const fsde::EnsembleResult r =
        fsde::simulate_ensemble(cfg.model, cfg.drift_b, cfg.drift_B, cfg.xi, cfg.sim);
    fsde::detail::write_series_csv(cfg.output_dir + "/ensemble_moments.csv", r.moments);
    fsde::CsvWriter w(cfg.output_dir + "/marginals.csv", {"t", "path", "x1"});
    for (size_t rec = 0; rec < r.moments.times.size(); ++rec)
        for (long p = 0; p < r.n_paths; ++p)
            w.row({r.moments.times[rec], static_cast<double>(p),
                   r.marginals[rec * static_cast<size_t>(r.n_paths) + static_cast<size_t>(p)]});
    std::cout << "wrote " << cfg.output_dir << "/ensemble_moments.csv\n";
    return fsde::kOk;
}

int cmd_couple(const std::string& file) {
    const fsde::ExperimentConfig cfg = fsde::load_experiment(file);
    std::filesystem::create_directories(cfg.output_dir);
    fsde::ContractionCertificate cert;
    if (cfg.tuning) {
        cert = fsde::make_certificate(cfg.model, *cfg.tuning);
    } else {
        const fsde::SearchResult sr = fsde::feasibility_search(cfg.model);
        if (!sr.best) {
            std::cerr << "couple: no feasible tuning found\n";
            return fsde::kInfeasible;
        }
        cert = *sr.best;
    }
    const fsde::CoupledResult r =
        fsde::simulate_coupled(cfg.model, cfg.drift_b, cfg.drift_B, cfg.xi, cfg.eta, cfg.sim);
    fsde::detail::write_series_csv(cfg.output_dir + "/moments.csv", r.moments);
    const double d0 = fsde::segment_distance(cfg.xi, cfg.eta);
    std::vector<double> bounds;
    for (double t : r.moments.times)
        bounds.push_back(fsde::contraction_bound(cfg.model, cert.tuning, t, d0 * d0));
    fsde::detail::write_bound_csv(cfg.output_dir + "/bound.csv", r.moments.times, bounds);
    std::cout << "wrote " << cfg.output_dir << "/moments.csv\n";
    return fsde::kOk;
}

int cmd_stationary(const std::string& file) {
    const fsde::ExperimentConfig cfg = fsde::load_experiment(file);
    std::filesystem::create_directories(cfg.output_dir);
    const fsde::StationaryResult r =
        fsde::stationary_sampler(cfg.model, cfg.drift_b, cfg.drift_B, cfg.sim, cfg.stationary);
    fsde::detail::write_segments_csv(cfg.output_dir + "/segments.csv", r.segments, 256);
    fsde::CsvWriter w(cfg.output_dir + "/stationary_marginals.csv", {"sample", "x1"});
    for (size_t i = 0; i < r.terminal.size(); ++i) w.row({static_cast<double>(i), r.terminal[i]});
    std::cout << "terminal mean " << fsde::format_double(r.terminal_mean) << " var "
              << fsde::format_double(r.terminal_var) << '\n';
    return fsde::kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for exponential contraction of delay SDEs"};
    app.require_subcommand(1);

    // constants
    auto* constants = app.add_subcommand("constants", "closed-form constant calculators");
    constants->require_subcommand(1);
    std::string const_file;
    std::optional<double> opt_delta, opt_eps, opt_lambda;
    auto* ceval = constants->add_subcommand("eval", "evaluate constants at a tuning triple");
    ceval->add_option("file", const_file, "ModelParams JSON document")->required();
    ceval->add_option("--delta", opt_delta);
    ceval->add_option("--eps", opt_eps);
    ceval->add_option("--lambda", opt_lambda);
    auto* csearch = constants->add_subcommand("search", "search for a feasible tuning triple");
    csearch->add_option("file", const_file, "ModelParams JSON document")->required();

    // zvonkin
    auto* zv = app.add_subcommand("zvonkin", "fixed-point solver for the drift transform");
    zv->require_subcommand(1);
    std::string zv_file, zv_dir;
    auto* zsolve = zv->add_subcommand("solve", "solve and verify; writes field.csv + zvonkin.json");
    zsolve->add_option("file", zv_file, "experiment JSON")->required();
    auto* zverify = zv->add_subcommand("verify", "re-check a stored field");
    zverify->add_option("dir", zv_dir, "run directory with field.csv + zvonkin.json")->required();

    // simulation stages
    std::string sim_file;
    auto* simulate = app.add_subcommand("simulate", "single-ensemble second moments");
    simulate->add_option("file", sim_file, "experiment JSON")->required();
    std::string couple_file;
    auto* couple = app.add_subcommand("couple", "synchronously coupled pair moments");
    couple->add_option("file", couple_file, "experiment JSON")->required();
    std::string stat_file;
    auto* stationary = app.add_subcommand("stationary", "long-run invariant-law sampler");
    stationary->add_option("file", stat_file, "experiment JSON")->required();

    // metrics
    auto* metrics = app.add_subcommand("metrics", "distribution discrepancy estimators");
    metrics->require_subcommand(1);
    std::string ma, mb, mcol = "x1";
    int mbins = 0;
    double fit_lo = 0.0, fit_hi = 1e300;
    auto* mw2 = metrics->add_subcommand("w2", "empirical 1-D Wasserstein-2");
    mw2->add_option("a", ma)->required();
    mw2->add_option("b", mb)->required();
    mw2->add_option("--col", mcol, "sample column name");
    auto* mtv = metrics->add_subcommand("tv", "histogram total variation");
    mtv->add_option("a", ma)->required();
    mtv->add_option("b", mb)->required();
    mtv->add_option("--col", mcol);
    mtv->add_option("--bins", mbins, "0 = Freedman-Diaconis");
    auto* mkl = metrics->add_subcommand("kl", "histogram relative entropy");
    mkl->add_option("a", ma)->required();
    mkl->add_option("b", mb)->required();
    mkl->add_option("--col", mcol);
    mkl->add_option("--bins", mbins);
    auto* mpin = metrics->add_subcommand("pinsker", "exact Pinsker check on discrete pairs");
    mpin->add_option("p", ma, "CSV with atom,weight")->required();
    mpin->add_option("q", mb, "CSV with atom,weight")->required();
    auto* mfit = metrics->add_subcommand("fit", "exponential rate fit of a moment series");
    mfit->add_option("series", ma, "CSV with t,estimate")->required();
    mfit->add_option("--t-lo", fit_lo);
    mfit->add_option("--t-hi", fit_hi);

    // pipeline
    std::string run_file, report_dir;
    auto* run = app.add_subcommand("run", "full experiment pipeline");
    run->add_option("config", run_file, "experiment JSON")->required();
    auto* report = app.add_subcommand("report", "consolidate a finished run directory");
    report->add_option("dir", report_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ceval->parsed()) return cmd_constants_eval(const_file, opt_delta, opt_eps, opt_lambda);
        if (csearch->parsed()) return cmd_constants_search(const_file);
        if (zsolve->parsed()) return cmd_zvonkin_solve(zv_file);
        if (zverify->parsed()) return cmd_zvonkin_verify(zv_dir);
        if (simulate->parsed()) return cmd_simulate(sim_file);
        if (couple->parsed()) return cmd_couple(couple_file);
        if (stationary->parsed()) return cmd_stationary(stat_file);
        if (mw2->parsed()) {
            const auto a = read_samples(ma, mcol), b = read_samples(mb, mcol);
            const double w2 = fsde::w2_1d(a, b);
            std::cout << nlohmann::json{{"w2", w2}, {"n_a", a.size()}, {"n_b", b.size()}, {"column", mcol}}.dump(2)
                      << '\n';
            return fsde::kOk;
        }
        if (mtv->parsed() || mkl->parsed()) {
            const auto a = read_samples(ma, mcol), b = read_samples(mb, mcol);
            const fsde::DivergenceEstimate e = fsde::divergence_estimators(a, b, mbins);
            nlohmann::json j = {{"tv", e.tv},
                                {"n_bins", e.n_bins},
                                {"range", {e.lo, e.hi}},
                                {"binning", mbins >= 2 ? "explicit" : "freedman-diaconis[16,256]"},
                                {"column", mcol}};
            j["kl"] = std::isinf(e.kl) ? nlohmann::json("inf") : nlohmann::json(e.kl);
            std::cout << j.dump(2) << '\n';
            return fsde::kOk;
        }
        if (mpin->parsed()) {
            const fsde::PinskerReport r = fsde::pinsker_check(read_dist(ma), read_dist(mb));
            std::cout << nlohmann::json{{"holds", r.holds},
                                        {"slack", std::isinf(r.slack) ? nlohmann::json("inf") : nlohmann::json(r.slack)},
                                        {"tv", r.tv},
                                        {"kl", r.kl_infinite ? nlohmann::json("inf") : nlohmann::json(r.kl)},
                                        {"kl_infinite", r.kl_infinite}}
                             .dump(2)
                      << '\n';
            return r.holds ? fsde::kOk : fsde::kBoundViolation;
        }
        if (mfit->parsed()) {
            const fsde::CsvTable t = fsde::read_csv(ma);
            fsde::MomentSeries s;
            s.times = t.col("t");
            s.mean_sq_sup = t.col("estimate");
            s.ci95.assign(s.times.size(), 0.0);
            const fsde::RateFit f = fsde::fit_rate(s, fit_lo, fit_hi);
            std::cout << nlohmann::json{{"kappa1", f.kappa1},
                                        {"kappa2", f.kappa2},
                                        {"ci", f.ci},
                                        {"r_squared", f.r_squared},
                                        {"n_points", f.n_points},
                                        {"window", {f.t_lo, f.t_hi}}}
                             .dump(2)
                      << '\n';
            return fsde::kOk;
        }
        if (run->parsed()) {
            const fsde::ExperimentConfig cfg = fsde::load_experiment(run_file);
            const fsde::RunOutcome out = fsde::run_experiment(cfg);
            nlohmann::json j = {{"exit_code", out.exit_code}, {"output_dir", out.output_dir}};
            for (const auto& [k, v] : out.checks) j["checks"][k] = v;
            std::cout << j.dump(2) << '\n';
            return out.exit_code;
        }
        if (report->parsed()) {
            fsde::emit_report(report_dir);
            std::cout << "wrote " << report_dir << "/report.json\n";
            return fsde::kOk;
        }
    } catch (const fsde::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return fsde::kConfigError;
    } catch (const fsde::StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return fsde::kConfigError;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return fsde::kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return fsde::kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return fsde::kOk;
}
