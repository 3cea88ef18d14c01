#include <doctest.h>

#include <cmath>

#include "gelshoot/delaycore.hpp"
#include "gelshoot/greens.hpp"
#include "helpers.hpp"

using namespace gelshoot;

namespace {

double prod_pow2_minus_one(int n) {
    double p = 1;
    for (int j = 1; j <= n; ++j) p *= std::exp2(j) - 1;
    return p;
}

}  // namespace

TEST_CASE("Q at 1 from the first terms") {
    const double direct = std::exp(-1) - 4 * std::exp(-2) + 16.0 / 3 * std::exp(-4) - 64.0 / 21 * std::exp(-8) +
                          256.0 / 315 * std::exp(-16) - 1024.0 / 9765 * std::exp(-32);
    CHECK(std::abs(q_eval(1.0) - direct) < 1e-15);
    CHECK(std::abs(q_eval(1.0) + 0.0768006) < 1e-6);
}

TEST_CASE("Q at 10 is dominated by its first two terms") {
    CHECK(std::abs(std::exp(10) * q_eval(10) - (1 - 4 * std::exp(-10))) < 1e-12);
    CHECK(std::abs(std::exp(10) * q_eval(10) - 0.9998184) < 1e-7);
}

TEST_CASE("Q at the origin") {
    CHECK(std::abs(q_eval(0.0, 9)) < 1e-5);
    CHECK(std::abs(q_eval(0.0)) < 1e-12);
}

TEST_CASE("coefficients") {
    for (int n = 1; n < 12; ++n) CHECK(q_coefficient(n) == doctest::Approx(std::pow(4.0, n) / prod_pow2_minus_one(n)));
}

TEST_CASE("alternating tail bounds the truncation error") {
    for (double xi : {0.0, 0.3, 1.0, 2.5}) {
        const double ref = q_eval(xi, 60);
        for (int N = 2; N < 12; ++N) {
            const double step = std::abs(q_eval(xi, N) - q_eval(xi, N + 1));
            CHECK(std::abs(q_eval(xi, N) - ref) <= step * (1 + 1e-9) + 1e-16);
        }
        CHECK(std::abs(q_eval_bounded(xi, 8).value - ref) <= q_eval_bounded(xi, 8).tail_bound + 1e-16);
    }
}

TEST_CASE("first moment of Q") {
    double c0 = 1;
    for (int n = 1; n < 40; ++n) c0 += (n % 2 ? -1 : 1) / prod_pow2_minus_one(n);
    CHECK(std::abs(c0 - 0.2887881) < 1e-6);
    CHECK(std::abs(c0_moment() - c0) < 1e-14);
    CHECK(std::abs(c0_moment_quadrature() - c0_moment()) < 1e-9);
}

TEST_CASE("Laplace transform of Q at one") {
    // 1/2 + sum (-1)^n 4^n / ((1 + 2^n) prod (2^j - 1))
    double s = 0.5;
    for (int n = 1; n < 40; ++n) s += (n % 2 ? -1 : 1) * std::pow(4.0, n) / ((1 + std::exp2(n)) * prod_pow2_minus_one(n));
    CHECK(std::abs(s + 0.0605620) < 2e-7);
    CHECK(std::abs(q_laplace_one() - s) < 1e-13);
    CHECK(std::abs(q_laplace_one_quadrature() - s) < 1e-9);
}

TEST_CASE("ODE route near the source") {
    CHECK(g_by_ode(1.0, 1.0) == 1.0);
    CHECK(g_by_ode(0.5, 1.0) == 0.0);
    for (double x : {1.2, 1.5, 1.9}) CHECK(std::abs(g_by_ode(x, 1.0) / std::exp(x - 1) - 1) < 1e-9);
}

TEST_CASE("three routes agree") {
    for (auto [x, xi] : {std::pair{2.0, 1.0}, {3.0, 1.0}, {5.0, 2.0}, {4.0, 0.5}, {1.5, 1.0}}) {
        const double g = g_by_ode(x, xi);
        if (std::abs(g) <= 1e-6) continue;
        const double alt = std::exp(x) * q_eval(xi) + gtilde_quadrature(x, xi).value;
        CHECK_MESSAGE(std::abs(g - alt) <= 1e-4 * std::abs(g), "x " << x << " xi " << xi);
    }
}

TEST_CASE("remainder just after the source") {
    const double want = 1 - std::exp(1.0) * q_eval(1.0);
    CHECK(std::abs(want - 1.208768) < 5e-6);
    CHECK(std::abs(gtilde_quadrature(1.0 + 1e-9, 1.0).value - want) < 1e-6);
}

TEST_CASE("first remainder term in closed form") {
    for (double xi : {0.5, 1.0, 2.0}) {
        for (double x : linspace(1.02 * xi, 1.98 * xi, 15))
            CHECK(std::abs(gtilde_term(1, x, xi) - 4 * std::exp(x - 2 * xi)) < 1e-8);
        for (double x : linspace(2.05 * xi, 5 * xi, 15))
            CHECK(std::abs(gtilde_term(1, x, xi) - 4 * std::exp(x / 2 - xi)) < 1e-8);
    }
}

TEST_CASE("contour must sit between 1/2 and 1") {
    GreensEval cfg;
    cfg.L_tilde = 0.4;
    CHECK_THROWS(gtilde_quadrature(2.0, 1.0, cfg));
}

TEST_CASE("bounds audit on a sample") {
    std::vector<double> xis = linspace(0, 20, 41);
    std::vector<std::pair<double, double>> gs, ls;
    for (double d : linspace(0.1, 10, 12)) gs.push_back({1 + d, 1.0});
    for (double a : linspace(0.5, 8, 8)) ls.push_back({a, a + 0.3});
    const BoundsAudit a = bounds_audit(xis, gs, ls);
    CHECK(std::isfinite(a.C0_Q));
    CHECK(a.C0_Q > 0);
    CHECK(std::isfinite(a.lipschitz_C));
    CHECK(a.gtilde_rate <= GreensEval{}.L_tilde + 0.01);
    CHECK(a.violations.empty());
}

TEST_CASE("convolution with a smooth source solves the forced equation") {
    // s(x) = sin(pi x)^2 on [0.5, 1.5]; phi(x) = int G(x, xi) s(xi) dxi
    auto s = [](double x) { return (x > 0.5 && x < 1.5) ? std::pow(std::sin(M_PI * (x - 0.5)), 2) : 0.0; };
    auto conv = [&](double x) {
        const int n = 400;
        double acc = 0;
        const double hi = std::min(x, 1.5);
        if (hi <= 0.5) return 0.0;
        const double h = (hi - 0.5) / n;
        for (int i = 0; i <= n; ++i) {
            const double xi = 0.5 + i * h;
            const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
            acc += w * g_by_ode(x, xi) * s(xi);
        }
        return acc * h / 3;
    };
    // the forced equation integrated directly
    const DelayRHS forced = DelayRHS::custom([&](double x, double u, double ud) { return u - 2 * ud + s(x); }, 0.5, 0.0);
    IntegrateOptions o;
    o.tol = 1e-11;
    o.breakpoints = {0.5, 1.0, 1.5, 2.0, 3.0};
    const DenseTrajectory phi = integrate(forced, InitialSegment::point(0.0), {0.0, 3.5}, o);
    for (double x : {0.8, 1.2, 2.0, 3.0, 3.5}) CHECK(std::abs(conv(x) - phi.eval(x)) < 1e-6 * std::max(1.0, std::abs(phi.eval(x))));
}
