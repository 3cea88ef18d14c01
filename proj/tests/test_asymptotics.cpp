#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gelshoot/asymptotics.hpp"
#include "helpers.hpp"

using namespace gelshoot;

constexpr double ln2 = std::numbers::ln2;

TEST_CASE("alpha at b = ln2") {
    const double a = alpha_root(ln2);
    CHECK(a > 2);
    CHECK(std::abs(a - 2.2991) < 1e-4);
    CHECK(std::abs(ln2 * a / (2 * (1 - std::exp2(-a))) - 1) < 1e-12);
    CHECK(std::abs(alpha_residual(ln2, a)) < 1e-12);
}

TEST_CASE("alpha at b = 1 is exactly one") {
    // a / (2 (1 - 2^-a)) = 1 at a = 1
    CHECK(std::abs(alpha_root(1.0) - 1.0) < 1e-12);
    CHECK(std::abs(alpha_residual(1.0, alpha_root(1.0))) < 1e-12);
}

TEST_CASE("zero slope gives the constant profile") {
    const Gamma1Profile s = gamma1_series(ln2, 0.0, 10);
    CHECK(s.coefficients[0] == 1.0);
    for (std::size_t n = 1; n < s.coefficients.size(); ++n) CHECK(s.coefficients[n] == 0.0);
}

TEST_CASE("profile at b = ln2") {
    const Gamma1Run run = gamma1_profile(ln2, -1.0, 40.0, 1e-13);
    const auto& v = run.traj.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(v[i] > 0);
        if (i && v[i - 1] > 1e-9) CHECK(v[i] < v[i - 1]);
    }
    for (double x : logspace(0.05, 0.9 * run.x_switch, 10)) CHECK(run.series.derivative(x) < 0);
    for (double x : {1.0, 5.0, 20.0}) CHECK(std::abs(gamma1_integrated_constant(run, x)) < 1e-9);
    for (double x = 1.0; run.phi(2 * x) > 1e-9; x *= 1.1) CHECK(run.phi(2 * x) <= run.phi(x) * run.phi(x) * (1 + 1e-6));
}

TEST_CASE("integrated constant equals b - ln2 off the critical value") {
    const Gamma1Run run = gamma1_profile(0.9, -1.0, 10.0, 1e-12);
    for (double x : {0.5, 2.0, 8.0}) CHECK(std::abs(gamma1_integrated_constant(run, x) - (0.9 - ln2)) < 1e-8);
}

TEST_CASE("b = 1 runs settle on (1 - ln2)/ln2") {
    const double want = (1 - ln2) / ln2;
    CHECK(std::abs(want - 0.4426950) < 1e-7);
    for (double a1 : {-0.5, -1.0, -2.0}) {
        const Gamma1Limit l = gamma1_b1_limit(a1);
        CHECK(std::abs(l.limit - want) < 1e-6);
        CHECK(l.fit_rate > 0);
    }
}

TEST_CASE("psi series near the origin") {
    CHECK(psi_series_eval(0.1, 0.0).value == 0.0);
    CHECK(std::abs(psi_series_derivative(0.1, 0.0) - 1) < 1e-15);
}

TEST_CASE("psi solves the linear delay equation") {
    for (double eps : {0.1, 0.3, 0.7}) {
        for (double y : linspace(0.1, 20, 25)) {
            const double P = psi_series_eval(eps, y).value, Pq = psi_series_eval(eps, (1 - eps) * y).value;
            const double dP = psi_series_derivative(eps, y);
            const double scale = std::abs(dP) + 2 * std::abs(P) + 2 * std::abs(Pq) + 1;
            CHECK(std::abs(dP - 2 * P + 2 * Pq - 1) < 1e-9 * scale);
        }
    }
}

TEST_CASE("psi coefficients tend to 2^n/(n+1)! as eps -> 1") {
    for (int n = 1; n < 15; ++n)
        CHECK(std::abs(psi_coefficient_log(1 - 1e-12, n) - (n * ln2 - std::lgamma(n + 2.0))) < 1e-9);
    const double y = 1.3;
    CHECK(psi_series_eval(1 - 1e-12, y).value <= (std::exp(2 * y) - 1) / 2);
}

TEST_CASE("huge arguments stay in log form") {
    const PsiValue v = psi_series_eval(0.02, 5000);
    CHECK(std::isfinite(v.log_value));
    CHECK(v.log_value > 300 * std::log(10.0));
}

TEST_CASE("laplace quantities at eta = 1") {
    // t = 2 (1 - e^-t) by plain bisection
    double lo = 0.5, hi = 3;
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        (m - 2 * (1 - std::exp(-m)) < 0 ? lo : hi) = m;
    }
    const double ts = 0.5 * (lo + hi);
    const double D = -(1 / (2 * ts)) * (ts * std::exp(-ts) / (1 - std::exp(-ts)) - 1);
    // W by composite Simpson on a fine grid
    const int n = 20000;
    double W = 0;
    for (int i = 0; i <= n; ++i) {
        const double t = ts * i / n;
        const double f = t == 0 ? std::log(2.0) : std::log(2 * (1 - std::exp(-t)) / t);
        W += (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2)) * f;
    }
    W *= ts / n / 3;
    const LaplaceQuantities q = laplace_quantities(1.0);
    CHECK(std::abs(q.t_star - ts) < 1e-12);
    CHECK(std::abs(q.t_star - 1.59362) < 1e-5);
    CHECK(std::abs(q.D - D) < 1e-12);
    CHECK(std::abs(q.D - 0.186241) < 1e-5);
    CHECK(std::abs(q.W - W) < 1e-9);
    CHECK(std::abs(q.W - 0.525) < 0.002);
}

TEST_CASE("derivative of W in eta") {
    const CriticalDelta cd = critical_delta(0.05, 1.0);
    CHECK(std::abs(cd.w_prime - cd.w_prime_fd) < 1e-6);
    CHECK(std::abs(cd.w_prime - laplace_quantities(1.0).t_star) < 1e-12);
}

TEST_CASE("critical delta") {
    const LaplaceQuantities q = laplace_quantities(1.0);
    const CriticalDelta cd = critical_delta(0.05, 1.0);
    const double want = std::sqrt(0.05) * std::exp(-q.W / 0.05) / q.U;
    CHECK(std::abs(cd.delta / want - 1) < 1e-12);
    // log delta ~ -W / eps
    const double r1 = critical_delta(0.01, 1.0).log_delta * 0.01, r2 = critical_delta(0.002, 1.0).log_delta * 0.002;
    CHECK(std::abs(r2 + q.W) < std::abs(r1 + q.W));
}

TEST_CASE("psi asymptotics trend") {
    for (double eta : {1.0, 0.75}) {
        const auto rows = psi_asymptotics_check(eta, {0.1, 0.05, 0.02});
        REQUIRE(rows.size() == 3);
        CHECK(std::abs(rows[1].r) < std::abs(rows[0].r));
        CHECK(std::abs(rows[2].r) < std::abs(rows[1].r));
    }
}

TEST_CASE("tail exponents") {
    const double beta = -ln2 / std::log1p(-0.1);
    const TailExponents t = tail_exponents(0.1, 1.0);
    CHECK(std::abs(t.beta - beta) < 1e-12);
    CHECK(std::abs(t.beta - 6.57883) < 1e-4);
    CHECK(std::abs(t.alpha - (beta - 1)) < 1e-12);
    CHECK(std::abs(tail_exponents(1e-6, 1.0).beta * 1e-6 - ln2) < 1e-6);
    CHECK(t.closure_error < 1e-8);
}
