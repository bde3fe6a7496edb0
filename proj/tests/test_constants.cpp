#include "fsde/constants.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace fsde;

namespace {

// Independent quadrature oracle for the Gamma function: shifts the argument
// until the integrand t^{y-1} e^{-t} is smooth at 0, composite Simpson on
// [0, 80], then divides the recurrence factors back out.
double gamma_quadrature(double x) {
    int shift = 0;
    double y = x;
    while (y < 3.0) {
        y += 1.0;
        ++shift;
    }
    const double a = 0.0, b = 80.0;
    const long n = 400000; // even
    const double h = (b - a) / n;
    auto f = [y](double t) { return t <= 0.0 ? 0.0 : std::pow(t, y - 1.0) * std::exp(-t); };
    double acc = f(a) + f(b);
    for (long i = 1; i < n; ++i) acc += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
    double g = acc * h / 3.0;
    for (int k = shift - 1; k >= 0; --k) g /= (x + k);
    return g;
}

ModelParams model_with(double kappa, double alpha, double b_inf, double lambda_B = 0.0,
                       double B_inf = 0.0, double beta = 1.0, double r0 = 1.0, int d = 1) {
    ModelParams m;
    m.kappa = kappa;
    m.alpha = alpha;
    m.b_inf = b_inf;
    m.lambda_B = lambda_B;
    m.B_inf = B_inf;
    m.beta = beta;
    m.r0 = r0;
    m.d = d;
    return m;
}

} // namespace

TEST_CASE("gamma_fn reference values", "[constants][gamma]") {
    CHECK(gamma_fn(0.5) == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(gamma_fn(1.0) == Catch::Approx(1.0).epsilon(1e-13));
    CHECK(gamma_fn(2.0) == Catch::Approx(1.0).epsilon(1e-13));
    // High-precision value of Gamma(1/4)
    CHECK(gamma_fn(0.25) == Catch::Approx(3.6256099082219083).epsilon(1e-12));
    CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_fn(-1.5), std::domain_error);
}

TEST_CASE("gamma_fn against the quadrature oracle", "[constants][gamma]") {
    for (double x : {0.25, 0.4, 0.5, 0.75, 1.3, 2.5, 3.7, 5.5, 7.25, 9.5})
        CHECK(gamma_fn(x) == Catch::Approx(gamma_quadrature(x)).epsilon(1e-11));
}

TEST_CASE("gamma_fn recurrence on [0.1, 5]", "[constants][gamma]") {
    for (double x = 0.1; x <= 5.0 + 1e-12; x += 0.01) {
        const double lhs = gamma_fn(x + 1.0);
        const double rhs = x * gamma_fn(x);
        CHECK(std::abs(lhs - rhs) <= 1e-11 * std::abs(rhs));
    }
}

TEST_CASE("lambda0 closed form", "[constants]") {
    CHECK(lambda0(model_with(0, 0.5, 0.0), 0.3) == 0.0);
    // delta = 1/2, |b| = 1: max(9 pi, 3)
    CHECK(lambda0(model_with(1, 0.5, 1.0), 0.5) == Catch::Approx(9.0 * M_PI).epsilon(1e-14));
    // delta = 0.9: both branches evaluated independently
    const double c = (1.9 / 0.9) * 1.0;
    const double branch1 = c * std::sqrt(M_PI) * c * std::sqrt(M_PI);
    const double branch2 = c;
    CHECK(lambda0(model_with(1, 0.5, 1.0), 0.9) == Catch::Approx(std::max(branch1, branch2)).epsilon(1e-13));
    CHECK(lambda0(model_with(1, 0.5, 1.0), 0.9) == Catch::Approx(14.0014191104433995).epsilon(1e-12));
    CHECK_THROWS_AS(lambda0(model_with(1, 0.5, 1.0), 0.0), std::domain_error);
    CHECK_THROWS_AS(lambda0(model_with(1, 0.5, 1.0), 1.0), std::domain_error);
}

TEST_CASE("lambda0 strictly decreasing in delta", "[constants][property]") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(0.01, 0.99);
    const ModelParams m = model_with(1, 0.5, 2.0);
    for (int i = 0; i < 200; ++i) {
        double d1 = U(gen), d2 = U(gen);
        if (d1 == d2) continue;
        if (d1 > d2) std::swap(d1, d2);
        CHECK(lambda0(m, d1) > lambda0(m, d2));
    }
}

TEST_CASE("upsilon closed form and monotonicity", "[constants]") {
    CHECK(upsilon(model_with(0, 0.5, 0.0), 10.0, 0.3) == 0.0);
    // kappa=1, alpha=1/2, delta=1/2, |b|=1, lambda=100 (arbitrary-precision oracle)
    CHECK(upsilon(model_with(1, 0.5, 1.0), 100.0, 0.5) == Catch::Approx(47.144841613353665).epsilon(1e-12));
    CHECK_THROWS_AS(upsilon(model_with(1, 0.5, 1.0), 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(upsilon(model_with(1, 0.5, 1.0), -2.0, 0.5), std::domain_error);

    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const ModelParams m = model_with(0.1 + 3.0 * U(gen), 0.05 + 0.9 * U(gen), 0.1 + 2.0 * U(gen));
        const double dd = 0.05 + 0.9 * U(gen);
        double l1 = 0.5 + 50.0 * U(gen), l2 = 0.5 + 50.0 * U(gen);
        if (l1 == l2) continue;
        if (l1 > l2) std::swap(l1, l2);
        CHECK(upsilon(m, l2, dd) < upsilon(m, l1, dd));
        // increasing in kappa and |b|_inf
        ModelParams m2 = m;
        m2.kappa += 0.5;
        CHECK(upsilon(m2, l1, dd) > upsilon(m, l1, dd));
        ModelParams m3 = m;
        m3.b_inf += 0.5;
        CHECK(upsilon(m3, l1, dd) > upsilon(m, l1, dd));
    }
}

TEST_CASE("lambda_big reduction at b = 0", "[constants]") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const ModelParams m = model_with(0.0, 0.5, 0.0, 2.0 * U(gen), 2.0 * U(gen), 0.1 + 5.0 * U(gen));
        TuningParams t;
        t.delta = 0.01 + 0.97 * U(gen);
        t.eps = 0.01 + 0.97 * U(gen);
        t.lambda = 1e-6 + 100.0 * U(gen);
        const double reduced =
            2.0 / (1.0 - t.eps) *
            ((1.0 + t.delta) * t.delta * t.lambda + m.beta * t.delta +
             (1.0 + t.delta) * (1.0 + t.delta) * m.lambda_B);
        const double full = lambda_big(m, t);
        CHECK(std::abs(full - reduced) <= 1e-14 * std::abs(reduced));
    }
}

TEST_CASE("lambda_big limiting value and example", "[constants]") {
    // b = 0, delta,eps,lambda -> 0 limit is 2 lambda_B
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.7);
    TuningParams t{1e-9, 1e-9, 1e-9, -1.0};
    CHECK(lambda_big(m, t) == Catch::Approx(2.0 * 0.7).epsilon(1e-6));

    // kappa=1, alpha=1/2, |b|=1, |B|=0.1, lambda_B=0.05, beta=2, d=1,
    // delta=0.1, eps=0.5, lambda=2*lambda0(0.1) (arbitrary-precision oracle)
    const ModelParams ex = model_with(1.0, 0.5, 1.0, 0.05, 0.1, 2.0);
    TuningParams te;
    te.delta = 0.1;
    te.eps = 0.5;
    te.lambda = 2.0 * lambda0(ex, 0.1);
    CHECK(te.lambda == Catch::Approx(760.26542216872996).epsilon(1e-12));
    CHECK(lambda_big(ex, te) == Catch::Approx(9072.9411375501561).epsilon(1e-11));
    CHECK(sigma_lambda(ex, te) == Catch::Approx(707.95414145526663).epsilon(1e-11));

    // precondition: lambda below lambda0
    TuningParams bad = te;
    bad.lambda = 0.5 * lambda0(ex, 0.1);
    CHECK_THROWS_AS(lambda_big(ex, bad), std::invalid_argument);
}

TEST_CASE("sigma/lambda identity on random valid tuples", "[constants][property]") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        ModelParams m = model_with(3.0 * U(gen), 0.05 + 0.9 * U(gen), 2.0 * U(gen), 2.0 * U(gen),
                                   2.0 * U(gen), 0.1 + 4.0 * U(gen), 0.1 + 2.0 * U(gen),
                                   1 + static_cast<int>(3.0 * U(gen)));
        TuningParams t;
        t.delta = 0.02 + 0.9 * U(gen);
        t.eps = 0.02 + 0.9 * U(gen);
        t.lambda = (lambda0(m, t.delta) + 0.01) * (1.0 + 5.0 * U(gen));
        const double lhs = sigma_lambda(m, t) / (1.0 - t.eps) +
                           4.0 * upsilon(m, t.lambda, t.delta) * upsilon(m, t.lambda, t.delta) /
                               (std::pow(1.0 - t.delta, 4) * t.eps * (1.0 - t.eps));
        const double rhs = lambda_big(m, t) / ((1.0 - t.delta) * (1.0 - t.delta));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    }
}

TEST_CASE("sigma closed form at b = B = 0", "[constants]") {
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.0, 0.0, 1.7);
    TuningParams t{0.25, 0.5, 3.0, -1.0};
    const double expect = (2.0 * 1.25 * 0.25 * 3.0 + 2.0 * 1.7 * 0.25) / (0.75 * 0.75);
    CHECK(sigma_lambda(m, t) == Catch::Approx(expect).epsilon(1e-14));
    TuningParams bad = t;
    bad.delta = 0.0;
    CHECK_THROWS_AS(sigma_lambda(m, bad), std::domain_error);
}

TEST_CASE("contraction certificate invariants", "[constants]") {
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.05, 0.05, 1.0, 0.1);
    TuningParams t{0.15, 0.05, 1e-6, -1.0};
    const ContractionCertificate c = make_certificate(m, t);
    const double om = 0.85;
    const double ex = std::exp(2.0 * m.beta * m.r0 / (om * om));
    CHECK(c.prefactor == Catch::Approx(ex / 0.95).epsilon(1e-14));
    CHECK(c.rate == Catch::Approx(ex / (om * om) * (c.lambda_big - 2.0 * m.beta / ex)).epsilon(1e-14));
    CHECK(c.feasible == (c.lambda_big < 2.0 * m.beta / ex));
    CHECK(c.kappa0 == c.prefactor);
    if (c.feasible) CHECK(c.kappa2 == -c.rate);
}

TEST_CASE("contraction_bound examples", "[constants]") {
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.05, 0.05, 1.0, 0.1);
    TuningParams t{0.15, 0.05, 1e-6, -1.0};
    const ContractionCertificate c = make_certificate(m, t);
    REQUIRE(c.feasible);
    // t = 0: prefactor * init >= init
    CHECK(contraction_bound(m, t, 0.0, 2.5) == Catch::Approx(c.prefactor * 2.5).epsilon(1e-14));
    CHECK(contraction_bound(m, t, 0.0, 2.5) >= 2.5);
    // init = 0 -> 0 for all t
    CHECK(contraction_bound(m, t, 3.0, 0.0) == 0.0);
    // feasible -> strictly decreasing in t
    CHECK(c.rate < 0.0);
    CHECK(contraction_bound(m, t, 2.0, 1.0) < contraction_bound(m, t, 1.0, 1.0));
}

TEST_CASE("feasibility_search: Remark-st regimes", "[constants][search]") {
    // lambda_B = 0.1 < beta e^{-2 beta r0} = e^{-0.2}: feasible
    {
        const ModelParams m = model_with(0.0, 0.5, 0.0, 0.1, 0.1, 1.0, 0.1);
        REQUIRE(0.1 < std::exp(-0.2));
        const SearchResult r = feasibility_search(m);
        REQUIRE(r.best.has_value());
        CHECK(r.best->rate < 0.0);
    }
    // lambda_B = 1, r0 = 1: Lambda >= 2 lambda_B > 2 beta e^{-2 beta r0/(1-d)^2}: infeasible
    {
        const ModelParams m = model_with(0.0, 0.5, 0.0, 1.0, 1.0, 1.0, 1.0);
        const SearchResult r = feasibility_search(m);
        CHECK_FALSE(r.best.has_value());
        CHECK(r.incumbent.rate > 0.0);
    }
    // lambda_B = 0: feasible with a strongly negative rate
    {
        const ModelParams m = model_with(0.0, 0.5, 0.0, 0.0, 0.0, 1.0, 0.1);
        const SearchResult r = feasibility_search(m);
        REQUIRE(r.best.has_value());
        CHECK(r.best->rate < -1.8 * m.beta);
    }
}

TEST_CASE("feasibility_search finds the 5% margin case", "[constants][search]") {
    for (auto [beta, r0] : {std::pair{1.0, 0.1}, std::pair{2.0, 0.25}}) {
        const double lam_b = 0.95 * beta * std::exp(-2.0 * beta * r0);
        const ModelParams m = model_with(0.0, 0.5, 0.0, lam_b, lam_b, beta, r0);
        const SearchResult r = feasibility_search(m);
        INFO("beta=" << beta << " r0=" << r0);
        CHECK(r.best.has_value());
    }
}

TEST_CASE("feasibility_search determinism and empty grid error", "[constants][search]") {
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.1, 0.1, 1.0, 0.1);
    const SearchResult a = feasibility_search(m);
    const SearchResult b = feasibility_search(m);
    REQUIRE(a.best.has_value());
    REQUIRE(b.best.has_value());
    CHECK(a.best->tuning.delta == b.best->tuning.delta);
    CHECK(a.best->tuning.eps == b.best->tuning.eps);
    CHECK(a.best->tuning.lambda == b.best->tuning.lambda);
    CHECK(a.best->rate == b.best->rate);
    SearchConfig empty;
    empty.n_delta = 0;
    CHECK_THROWS_AS(feasibility_search(m, empty), std::invalid_argument);
}

TEST_CASE("moment_bound closed forms", "[constants][moment]") {
    // t = 0: e^{r0 (2 beta - epm)} xi^2 / (1 - eps)
    {
        const ModelParams m = model_with(0.3, 0.5, 0.4, 0.05, 0.1, 1.2, 0.3);
        const double eps = 0.4, epm = 0.9, xi2 = 1.7, B0 = 0.02;
        const double expect = std::exp(m.r0 * (2.0 * m.beta - epm)) * xi2 / (1.0 - eps);
        CHECK(moment_bound(m, eps, epm, xi2, B0, 0.0) == Catch::Approx(expect).epsilon(1e-14));
    }
    // pure case: lambda_B = 0, b = 0, B = 0, xi = 0:
    // bound(t) = e^{r0 mu} gamma (1 - e^{-mu t}) / mu, gamma = (d + 4/eps)/(1-eps)
    {
        const ModelParams m = model_with(0.0, 0.5, 0.0, 0.0, 0.0, 1.0, 0.5, 2);
        const double eps = 0.3, epm = 0.8;
        const double mu = 2.0 * m.beta - epm;
        const double gamma = (2.0 + 4.0 / eps) / (1.0 - eps);
        for (double t : {0.1, 0.5, 1.0, 3.0, 10.0}) {
            const double expect = std::exp(m.r0 * mu) * gamma * (1.0 - std::exp(-mu * t)) / mu;
            CHECK(moment_bound(m, eps, epm, 0.0, 0.0, t) == Catch::Approx(expect).epsilon(1e-12));
        }
        const MomentCertificate mc = moment_certificate(m, eps, epm, 0.0);
        CHECK(mc.valid);
        CHECK(mc.transient_rate == Catch::Approx(-mu).epsilon(1e-14));
        CHECK(mc.asymptotic_bound == Catch::Approx(std::exp(m.r0 * mu) * gamma / mu).epsilon(1e-12));
    }
    // (coo) violated: valid = false, transient rate >= 0, bound diverges
    {
        const ModelParams m = model_with(0.0, 0.5, 0.0, 2.0, 2.0, 1.0, 1.0);
        const MomentCertificate mc = moment_certificate(m, 0.5, 1.0, 0.0);
        CHECK_FALSE(mc.valid);
        CHECK(mc.transient_rate >= 0.0);
        CHECK(std::isinf(mc.asymptotic_bound));
    }
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.0, 0.0, 1.0);
    CHECK_THROWS_AS(moment_bound(m, 0.5, 2.5, 1.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(moment_bound(m, 0.5, -0.1, 1.0, 0.0, 1.0), std::domain_error);
}

TEST_CASE("moment_bound monotonicity", "[constants][moment][property]") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const ModelParams m = model_with(0.2, 0.5, 0.3, 0.05, 0.1, 1.0, 0.2);
    for (int i = 0; i < 200; ++i) {
        const double eps = 0.1 + 0.8 * U(gen);
        const double epm = 0.1 + 1.8 * U(gen);
        const double t = 5.0 * U(gen);
        const double x1 = 2.0 * U(gen), x2 = x1 + 0.5;
        const double b1 = U(gen), b2 = b1 + 0.3;
        CHECK(moment_bound(m, eps, epm, x2, b1, t) >= moment_bound(m, eps, epm, x1, b1, t));
        CHECK(moment_bound(m, eps, epm, x1, b2, t) >= moment_bound(m, eps, epm, x1, b1, t));
    }
}

TEST_CASE("exp_integral series branch at the removable singularity", "[constants][moment]") {
    // lambda_B chosen so the transient rate is ~0: closed form vs series
    const ModelParams m = model_with(0.0, 0.5, 0.0, 0.25, 0.25, 1.0, 0.0001);
    // 2 lambda_B e^{mu r0}/(1-eps) = mu  =>  rate ~ 0 at eps=0.5, epm=1
    const MomentCertificate mc = moment_certificate(m, 0.5, 1.0, 0.0);
    CHECK(std::abs(mc.transient_rate) < 1e-3);
    const double b1 = moment_bound(m, 0.5, 1.0, 1.0, 0.0, 2.0);
    CHECK(std::isfinite(b1));
    CHECK(b1 > 0.0);
}
