#include "fsde/drift.hpp"
#include "fsde/segment.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace fsde;

namespace {

Segment random_segment(std::mt19937_64& gen, double r0, int m, int d, double range = 3.0) {
    std::uniform_real_distribution<double> U(-range, range);
    Segment s(r0, m, d);
    for (auto& v : s.values) v = U(gen);
    return s;
}

} // namespace

TEST_CASE("sup_norm basics", "[pathspace]") {
    CHECK(sup_norm(Segment::zero(1.0, 4, 1)) == 0.0);
    CHECK(sup_norm(Segment::constant(1.0, 4, 1, -2.5)) == 2.5);
    // d = 2 constant (3,4): Euclidean norm 5
    std::vector<double> c = {3.0, 4.0};
    CHECK(sup_norm(Segment::constant(0.5, 3, 2, c)) == Catch::Approx(5.0).epsilon(1e-15));
    // d = 1, values (-3, 1, 2) -> 3
    Segment s(1.0, 2, 1);
    s.values = {-3.0, 1.0, 2.0};
    CHECK(sup_norm(s) == 3.0);
}

TEST_CASE("segment_distance basics and shape check", "[pathspace]") {
    Segment a = Segment::zero(1.0, 4, 1);
    CHECK(segment_distance(a, a) == 0.0);
    CHECK(segment_distance(a, Segment::constant(1.0, 4, 1, 1.75)) == 1.75);
    CHECK_THROWS_AS(segment_distance(a, Segment::zero(1.0, 5, 1)), std::invalid_argument);
    CHECK_THROWS_AS(segment_distance(a, Segment::zero(2.0, 4, 1)), std::invalid_argument);
}

TEST_CASE("sup norm is a norm on random segments", "[pathspace][property]") {
    std::mt19937_64 gen(31);
    for (int i = 0; i < 200; ++i) {
        const Segment a = random_segment(gen, 1.0, 8, 2);
        const Segment b = random_segment(gen, 1.0, 8, 2);
        const Segment c = random_segment(gen, 1.0, 8, 2);
        // distance(a,b) = sup_norm(a-b) exactly
        Segment diff = a;
        for (size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= b.values[k];
        CHECK(segment_distance(a, b) == sup_norm(diff));
        // triangle inequality
        CHECK(segment_distance(a, b) <= segment_distance(a, c) + segment_distance(c, b) + 1e-12);
        // absolute homogeneity
        const double alpha = -1.7;
        Segment scaled = a;
        for (auto& v : scaled.values) v *= alpha;
        CHECK(sup_norm(scaled) == Catch::Approx(std::abs(alpha) * sup_norm(a)).epsilon(1e-13));
    }
}

TEST_CASE("segment presets and interpolation", "[pathspace]") {
    const Segment sp = Segment::spike(1.0, 4, 1, std::vector<double>{2.0});
    CHECK(sp.values[0] == 0.0);
    CHECK(sp.values[4] == 2.0);
    const Segment c = Segment::constant(1.0, 4, 1, 3.0);
    double out;
    segment_interpolate(c, -0.37, {&out, 1});
    CHECK(out == Catch::Approx(3.0));
    Segment lin(1.0, 2, 1);
    lin.values = {0.0, 1.0, 2.0}; // xi(s) = 2(s+1)
    segment_interpolate(lin, -0.75, {&out, 1});
    CHECK(out == Catch::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(segment_interpolate(lin, 0.5, std::span<double>{&out, 1}), std::domain_error);
}

TEST_CASE("eval_b built-ins", "[pathspace][drift]") {
    const DriftSpec z = DriftSpec::zero();
    CHECK(eval_b1(z, 3.7) == 0.0);
    const DriftSpec hp = DriftSpec::holder_power(1.0, 0.5, 1.0);
    CHECK(eval_b1(hp, 0.25) == Catch::Approx(0.5).epsilon(1e-15));
    CHECK(eval_b1(hp, 100.0) == Catch::Approx(1.0));      // saturated at cap
    CHECK(eval_b1(hp, -0.25) == Catch::Approx(-0.5));     // odd
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> U(-4.0, 4.0);
    for (int i = 0; i < 100; ++i) {
        const double x = U(gen);
        CHECK(eval_b1(hp, -x) == Catch::Approx(-eval_b1(hp, x)).margin(1e-15));
    }
    // componentwise in d = 2
    const DriftSpec hp2 = DriftSpec::holder_power(2.0, 0.3, 1.5, 2);
    std::vector<double> x = {0.5, -3.0}, out(2);
    eval_b(hp2, x, out);
    CHECK(out[0] == Catch::Approx(2.0 * std::pow(0.5, 0.3)));
    CHECK(out[1] == Catch::Approx(-2.0 * std::pow(1.5, 0.3)));
}

TEST_CASE("eval_B built-ins", "[pathspace][drift]") {
    const int m = 8;
    const Segment zero = Segment::zero(1.0, m, 1);
    double out;
    eval_B(FunctionalSpec::zero(), zero, {&out, 1});
    CHECK(out == 0.0);

    const FunctionalSpec ts = FunctionalSpec::terminal_saturated(0.1);
    eval_B(ts, zero, {&out, 1});
    CHECK(out == 0.0); // B(xi_0) = 0
    Segment seg = Segment::constant(1.0, m, 1, 3.0);
    eval_B(ts, seg, {&out, 1});
    CHECK(out == Catch::Approx(0.1 * 3.0 / 4.0).epsilon(1e-15));

    // window_average of a constant is exact under the trapezoid rule
    const FunctionalSpec wa = FunctionalSpec::window_average(1.0, 10.0);
    eval_B(wa, seg, {&out, 1});
    CHECK(out == Catch::Approx(3.0).epsilon(1e-15));
    // clip engages
    Segment big = Segment::constant(1.0, m, 1, 20.0);
    eval_B(wa, big, {&out, 1});
    CHECK(out == Catch::Approx(10.0));
    // scale < 0 flips the sign, constants unchanged
    const FunctionalSpec neg = FunctionalSpec::terminal_saturated(-0.05);
    CHECK(neg.declared_lambda_B == Catch::Approx(0.05));
    eval_B(neg, seg, {&out, 1});
    CHECK(out == Catch::Approx(-0.05 * 0.75).epsilon(1e-14));
}

TEST_CASE("certification of built-in declarations", "[pathspace][certify]") {
    // zero drift: max ratio 0
    CHECK(certify_constants(DriftSpec::zero(), 1000, 0).max_ratio == 0.0);

    // holder_power(1, 0.5, 1): analytic bound 2^{1-alpha} c = sqrt(2)
    const auto hp = certify_constants(DriftSpec::holder_power(1.0, 0.5, 1.0), 100000, 0);
    CHECK(hp.ok);
    CHECK(hp.max_ratio <= std::sqrt(2.0) * (1.0 + 1e-9));

    // terminal_saturated(0.1): 1-Lipschitz saturation
    const auto ts = certify_constants(FunctionalSpec::terminal_saturated(0.1), 20000, 0);
    CHECK(ts.ok);
    CHECK(ts.max_ratio <= 0.1 * (1.0 + 1e-9));

    CHECK_THROWS_AS(certify_constants(DriftSpec::zero(), 0, 0), std::invalid_argument);
}

TEST_CASE("every built-in certification passes at seed 0 with 1e6 pairs", "[pathspace][certify][heavy]") {
    CHECK(certify_constants(DriftSpec::holder_power(1.0, 0.5, 1.0), 1000000, 0).ok);
    CHECK(certify_constants(DriftSpec::holder_power(0.2, 0.5, 1.0), 1000000, 0).ok);
    CHECK(certify_constants(FunctionalSpec::terminal_saturated(-0.05), 300000, 0).ok);
    CHECK(certify_constants(FunctionalSpec::window_average(1.0, 10.0), 300000, 0).ok);
}

TEST_CASE("eval_B bounded by declared B_inf on random segments", "[pathspace][property]") {
    std::mt19937_64 gen(41);
    const FunctionalSpec specs[] = {FunctionalSpec::terminal_saturated(0.3),
                                    FunctionalSpec::window_average(0.7, 2.0)};
    for (const auto& sp : specs) {
        double worst = 0.0;
        for (int i = 0; i < 1000000 / 100; ++i) {
            const Segment s = random_segment(gen, 1.0, 8, 1, 20.0);
            double out;
            eval_B(sp, s, {&out, 1});
            worst = std::max(worst, std::abs(out));
        }
        CHECK(worst <= sp.declared_B_inf * (1.0 + 1e-12));
    }
}

TEST_CASE("custom drift kinds are supported in-memory", "[pathspace][drift]") {
    const DriftSpec c = DriftSpec::custom(
        [](std::span<const double> x, std::span<double> out) {
            out[0] = std::tanh(x[0]);
        },
        1, 1.0, 0.99, 1.0);
    CHECK(eval_b1(c, 0.5) == Catch::Approx(std::tanh(0.5)));
    const auto rep = certify_constants(c, 20000, 0);
    CHECK(rep.ok); // tanh is 1-Lipschitz, declared alpha ~ 1
}
