#include <doctest.h>

#include <cmath>

#include "gelshoot/errors.hpp"
#include "gelshoot/fixedpoint.hpp"
#include "gelshoot/greens.hpp"
#include "gelshoot/shooting.hpp"
#include "helpers.hpp"

using namespace gelshoot;

namespace {

FixedPointState smooth_state(double eps, double eta, double amp, double freq) {
    FixedPointState s = zero_state(eps, eta);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        const double x = s.x[i];
        s.W[i] = amp * x * std::exp(-x) * std::sin(freq * x);
        s.dW[i] = amp * std::exp(-x) * ((1 - x) * std::sin(freq * x) + freq * x * std::cos(freq * x));
    }
    return s;
}

}  // namespace

TEST_CASE("forcing vanishes for the unperturbed problem") {
    const FixedPointState z = zero_state(0, 0);
    for (double x : linspace(0, 30, 31)) CHECK(r_eval(z, x, 0, 0) == 0.0);
}

TEST_CASE("forcing with W = 0") {
    const FixedPointState z = zero_state(0.01, 0.0);
    for (double x : {0.5, 1.0, 3.0}) {
        CHECK(std::abs(r_eval(z, x, 0.01, 0) - (std::exp(-x) - std::exp(-1.01 * x))) < 1e-16);
        CHECK(std::abs(r_eval(z, x, 0.01, 0) - 0.01 * x * std::exp(-x)) < 1e-4 * x * x * std::exp(-x));
    }
    CHECK(std::abs(r_eval(zero_state(0.02, 0.03), 0.0, 0.02, 0.03) - 0.03) < 1e-16);
}

TEST_CASE("map of zero at the origin is zero") {
    const FixedPointState t = apply_T(zero_state(0, 0));
    CHECK(t.W.cwiseAbs().maxCoeff() == 0.0);
    CHECK(f_eval(zero_state(0, 0)) == 0.0);
}

TEST_CASE("picard at the origin") {
    const FixedPointState z = picard_solve(0, 0);
    CHECK(z.W.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.iterations <= 1);
}

TEST_CASE("picard at small parameters") {
    const FixedPointState s = picard_solve(0.01, 0.01);
    const auto& h = s.sup_diff_history;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i - 1] < 1e-2) CHECK(h[i] < h[i - 1]);
    const FixedPointState t = apply_T(s);
    CHECK((t.W - s.W).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::isfinite(envelope_constant(s, 0.45)));
    CHECK(s.delta_fit > 0);
    CHECK(s.M_fit > 0);
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
        CHECK(std::abs(s.W[i]) <= 0.02 * s.M_fit * std::exp(-s.delta_fit * s.x[i]) * (1 + 1e-9) + 1e-15);
}

TEST_CASE("iteration count grows slowly with the tolerance") {
    FixedPointConfig a, b;
    a.tol = 1e-6;
    b.tol = 1e-12;
    const int na = picard_solve(0.01, 0.01, a).iterations, nb = picard_solve(0.01, 0.01, b).iterations;
    CHECK(nb >= na);
    CHECK(nb <= 2 * na + 2);
}

TEST_CASE("map contracts on small perturbations") {
    for (auto [a1, f1, a2, f2] : {std::tuple{0.01, 1.0, -0.005, 2.5}, {0.002, 0.3, 0.008, 4.0}, {-0.01, 1.7, 0.0, 1.0}}) {
        const FixedPointState w1 = smooth_state(0.01, 0.01, a1, f1), w2 = smooth_state(0.01, 0.01, a2, f2);
        const double before = (w1.W - w2.W).cwiseAbs().maxCoeff();
        const double after = (apply_T(w1).W - apply_T(w2).W).cwiseAbs().maxCoeff();
        CHECK(after <= 0.5 * before);
    }
}

TEST_CASE("outside the small regime the outcome is reported") {
    bool reported = false;
    try {
        const FixedPointState s = picard_solve(0.3, 0.3);
        reported = s.sup_diff_history.back() < FixedPointConfig{}.tol;
    } catch (const NonContraction&) {
        reported = true;
    }
    CHECK(reported);
}

TEST_CASE("derivatives of the solvability constant") {
    const double h = 1e-4;
    const double fe = (f_eval(picard_solve(h, 0)) - f_eval(picard_solve(-h, 0))) / (2 * h);
    const double fn = (f_eval(picard_solve(0, h)) - f_eval(picard_solve(0, -h))) / (2 * h);
    CHECK(std::abs(fe - c0_moment()) < 1e-4);
    CHECK(std::abs(fn - q_laplace_one()) < 1e-4);
    CHECK(std::abs(fe - 0.288788) < 1e-4);
    CHECK(std::abs(fn + 0.060562) < 1e-4);
}

TEST_CASE("stored derivative matches finite differences") {
    const FixedPointState s = picard_solve(0.01, 0.01);
    double worst = 0;
    for (double x : linspace(0.5, 30, 60)) {
        const double h = 1e-4;
        const double fd = (s.value(x + h) - s.value(x - h)) / (2 * h);
        worst = std::max(worst, std::abs(fd - s.derivative(x)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("eps as a function of eta") {
    const EpsOfEta e = eps_of_eta(0.01);
    CHECK(std::abs(e.eps - 0.0021) < 2e-4);
    CHECK(std::abs(e.state.F_value) < 1e-8);
    CHECK(eps_of_eta(0.0).eps == 0.0);
    const double slope = -q_laplace_one() / c0_moment();
    CHECK(std::abs(slope - 0.2097) < 1e-4);
    double prev = 1;
    for (double eta : {0.01, 0.005, 0.0025}) {
        const double r = eps_of_eta(eta).eps / eta;
        CHECK(std::abs(r - slope) <= 0.01);
        CHECK(std::abs(r - slope) < prev);
        prev = std::abs(r - slope);
    }
}

TEST_CASE("bbar at gamma 13") {
    const BbarResult r = bbar_of_gamma(13);
    CHECK(std::abs(r.eta - std::ldexp(1.0, -10)) < 0.01 * std::ldexp(1.0, -10));
    CHECK(std::abs(r.eps - 2.05e-4) < 1e-5);
    // b = ln2 / (ln2 - ln(1 + eps))
    CHECK(std::abs(r.bbar - std::log(2.0) / (std::log(2.0) - std::log1p(r.eps))) < 1e-12);
    CHECK(std::abs(r.bbar - 1.0003) < 5e-5);
}

TEST_CASE("bbar tends to one") {
    double prev = bbar_of_gamma(8).bbar;
    for (double g : {13.0, 20.0, 30.0}) {
        const double b = bbar_of_gamma(g).bbar;
        CHECK(b > 1);
        CHECK(b < prev);
        prev = b;
    }
    CHECK(prev - 1 < 1e-5);
}

TEST_CASE("shooting bracket contains bbar") {
    for (double g : {12.0, 13.0, 15.0}) {
        const double b = bbar_of_gamma(g).bbar;
        const CriticalBracket br = bracket_bbar(g, 1e-3);
        CHECK_MESSAGE(b >= br.b_lo, "gamma " << g);
        CHECK_MESSAGE(b <= br.b_hi, "gamma " << g);
    }
}

TEST_CASE("reconstructed profile") {
    const BbarResult r = bbar_of_gamma(13);
    const auto pts = reconstruct_profile(r.state, make_params(13, r.bbar));
    REQUIRE(pts.size() > 10);
    for (const auto& p : pts) {
        if (std::exp(-p.x) > 1e-12) CHECK(p.h > 0);
        CHECK(std::abs(p.h - (std::exp(-p.x) + p.W)) < 1e-15);
    }
    CHECK(r.tail_delta > 0);
}
