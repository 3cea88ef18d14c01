#include <doctest.h>

#include <cmath>
#include <string>

#include "gelshoot/errors.hpp"
#include "gelshoot/greens.hpp"
#include "gelshoot/params.hpp"
#include "gelshoot/shooting.hpp"
#include "gelshoot/stability.hpp"

using namespace gelshoot;

TEST_CASE("three regimes at gamma 2") {
    CHECK(classify(make_params(2, 2.05), 200).is_sign_change());
    CHECK(std::holds_alternative<Oscillating>(classify(make_params(2, 2.3), 200).outcome));
    const Classification c = classify(make_params(2, 10), 200);
    const auto* conv = std::get_if<ConvergesToConstant>(&c.outcome);
    REQUIRE(conv);
    CHECK(conv->phi_inf == 1.0);
    CHECK(conv->tail_residual < 1e-3);
}

TEST_CASE("decisions survive halving the tolerance") {
    ClassifyTols fine;
    fine.integ_tol /= 2;
    for (double b : {2.05, 2.3, 10.0}) {
        const ModelParams p = make_params(2, b);
        CHECK(std::string(classify(p, 200).tag()) == classify(p, 200, fine).tag());
    }
}

TEST_CASE("scan over b") {
    const auto rows = scan_b(2, {2.05, 2.3, 10.0}, 200);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].tag == "SignChange");
    CHECK(rows[1].tag == "Oscillating");
    CHECK(rows[2].tag == "ConvergesToConstant");
    const auto at_b0 = scan_b(2, {2.0}, 200);
    CHECK_FALSE(at_b0[0].ok);
    CHECK(scan_b(3, {1.01}, 200)[0].tag == "SignChange");
}

TEST_CASE("threaded scan matches the serial one") {
    const std::vector<double> bs = {2.05, 2.2, 2.3, 2.6, 4.0};
    const auto a = scan_b(2, bs, 200, {}, 1), b = scan_b(2, bs, 200, {}, 3);
    for (std::size_t i = 0; i < bs.size(); ++i) {
        CHECK(a[i].tag == b[i].tag);
        CHECK(a[i].y_event == b[i].y_event);
    }
}

TEST_CASE("critical bracket at gamma 2") {
    const CriticalBracket br = bracket_bbar(2, 1e-3);
    CHECK(br.b_lo > 2.0);
    CHECK(br.b_hi < b_star(2));
    CHECK(br.width <= 1e-3);
    CHECK(br.class_lo == "SignChange");
    CHECK(br.class_hi != "SignChange");
}

TEST_CASE("brackets nest as the tolerance shrinks") {
    const CriticalBracket a = bracket_bbar(2, 1e-2), b = bracket_bbar(2, 1e-3);
    CHECK(b.b_lo >= a.b_lo);
    CHECK(b.b_hi <= a.b_hi);
}

TEST_CASE("plateaus of the limit equation") {
    const double eps = 0.05;
    const LimitHRun run = limit_h_run(eps);
    CHECK_FALSE(run.sign_change);
    const PlateauReport pr = plateau_diagnostics(run.traj, eps);
    CHECK(pr.levels.size() >= 3);
    const double want = c0_moment() * eps;
    CHECK(std::abs(want - 0.014439) < 1e-6);
    for (double r : pr.ratios) CHECK(std::abs(r - want) <= 0.3 * want);
    CHECK(pr.floor > 0);
}

TEST_CASE("no plateaus without the delay shift") {
    CHECK_THROWS_AS(plateau_diagnostics(limit_h_run(0.0).traj, 0.0), NoPlateaus);
}

TEST_CASE("negative shift drives h negative") {
    const LimitHRun run = limit_h_run(-0.02);
    CHECK(run.sign_change);
    CHECK(run.y_cross > 0);
}

TEST_CASE("h(y)(1+y) keeps a positive floor for positive shift") {
    for (double eps : {0.02, 0.05, 0.1}) {
        const DenseTrajectory& h = limit_h_run(eps).traj;
        double floor = INFINITY;
        for (std::size_t i = 0; i < h.size(); ++i) floor = std::min(floor, h.values()[i] * (1 + h.nodes()[i]));
        CHECK(floor > 0);
    }
}
