#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gelshoot/params.hpp"
#include "gelshoot/stability.hpp"
#include "helpers.hpp"

using namespace gelshoot;

namespace {

// independent boundary: a root z = i w of z - s + e^(-d z) needs cos(d w) = s, sin(d w) = w
double imaginary_root_boundary(double gamma, double lo, double hi) {
    auto g = [&](double b) {
        const CharProblem c = char_problem(make_params(gamma, b));
        const double w = std::sqrt(1 - c.sigma_tilde * c.sigma_tilde);
        return c.d_tilde * w - std::acos(c.sigma_tilde);
    };
    double glo = g(lo);
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (lo + hi);
        const double gm = g(m);
        if ((gm > 0) == (glo > 0)) {
            lo = m;
            glo = gm;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("stability boundary at gamma 2") {
    const double bs = b_star(2);
    CHECK(std::abs(bs - 2.5375) < 1e-3);
    CHECK(std::abs(bs - imaginary_root_boundary(2, 2.05, 6.0)) < 1e-9);
    CHECK(std::abs(bs - winding_transition(2, 2.05, 6.0)) < 1e-3);
}

TEST_CASE("large gamma limit of the boundary") {
    CHECK(std::abs(b_star(30) - 3 * std::sqrt(3.0) * std::numbers::ln2 / std::numbers::pi) < 1e-3);
}

TEST_CASE("ratio function") {
    CHECK(std::abs(p_ratio(0.5) - b_star(2) / 2) < 1e-12);
    CHECK(std::abs(p_ratio(0.5) - 1.26875) < 1e-3);
    CHECK(std::abs(p_ratio(1e-6) - 1) < 1e-3);
}

TEST_CASE("delay and threshold at gamma 2") {
    const CharProblem c3 = char_problem(make_params(2, 3));
    CHECK(std::abs(c3.d_tilde - 4 * std::numbers::ln2 / 3) < 1e-12);
    CHECK(std::abs(c3.sigma_tilde - 0.75) < 1e-12);
    CHECK(std::abs(c3.d_star - std::acos(0.75) / std::sqrt(1 - 0.75 * 0.75)) < 1e-12);
    CHECK(std::abs(c3.d_star - 1.0927) < 1e-4);
    CHECK(std::abs(char_problem(make_params(2, 2.3)).d_tilde - 1.2055) < 1e-4);
}

TEST_CASE("winding counts") {
    CHECK(winding_number(make_params(2, 3)).winding == 0);
    CHECK(winding_number(make_params(2, 2.3)).winding > 0);
    const double bs = b_star(2);
    CHECK(winding_number(make_params(2, bs - 1e-4)).winding > 0);
    CHECK(winding_number(make_params(2, bs + 1e-4)).winding == 0);
}

TEST_CASE("winding is zero exactly above the boundary") {
    for (double g : {1.5, 2.0, 3.0, 5.0}) {
        const double bs = b_star(g);
        for (double b : logspace(bs / 2, bs * 2, 8)) {
            const int w = winding_number(make_params(g, b)).winding;
            CHECK_MESSAGE((w == 0) == (b > bs), "gamma " << g << " b " << b << " winding " << w);
        }
    }
}

TEST_CASE("winding does not depend on radius or sampling") {
    for (double b : {1.5, 2.3, 2.7, 4.0}) {
        const ModelParams p = make_params(2, b);
        const int w = winding_number(p).winding;
        const double R = winding_number(p).R;
        CHECK(winding_number(p, 2 * R).winding == w);
        CHECK(winding_number(p, 0.0, 40000).winding == w);
    }
}

TEST_CASE("perturbations decay only on the stable side") {
    Perturbation pe;
    pe.amplitude = 0.05;
    const DecayReport d3 = stability_empirical(make_params(2, 3), pe);
    CHECK(d3.decays);
    CHECK(d3.final_dev < 1e-6);
    const DecayReport d23 = stability_empirical(make_params(2, 2.3), pe);
    CHECK_FALSE(d23.decays);
    const DecayReport z = stability_empirical(make_params(2, 3), Perturbation{});
    CHECK(z.final_dev == 0.0);
}
