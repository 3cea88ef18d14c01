#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gelshoot/errors.hpp"
#include "gelshoot/params.hpp"
#include "helpers.hpp"

using namespace gelshoot;
using doctest::Approx;

TEST_CASE("derived exponents at the explicit point") {
    const ModelParams p = make_params(2, 2);
    CHECK(p.b0 == 2);
    CHECK(p.sigma == Approx(1).epsilon(1e-15));
    CHECK(p.theta == 2);
    CHECK(p.phi_inf == 1);
}

TEST_CASE("sigma and q at gamma 2, b 4") {
    const ModelParams p = make_params(2, 4);
    CHECK(std::abs(p.sigma - 1.4142136) < 1e-7);
    CHECK(std::abs(p.q - 0.8408964) < 1e-7);
}

TEST_CASE("phi_inf does not depend on b") {
    for (double b : {0.7, 1.7, 5.0, 40.0}) CHECK(std::abs(make_params(3, b).phi_inf - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("gamma at or below one is rejected") {
    CHECK_THROWS_AS(make_params(1, 2), DomainError);
    CHECK_THROWS_AS(make_params(0.5, 2), DomainError);
    CHECK_THROWS_AS(make_params(2, -1), DomainError);
}

TEST_CASE("closed-form solutions leave no residual") {
    const auto grid = linspace(0.1, 10, 300);
    CHECK(explicit_solution_residual(make_params(2, 2), ExplicitSolution::Phi0, grid) < 1e-12);
    for (double b : {1.3, 2.5, 3.7, 8.0})
        CHECK(explicit_solution_residual(make_params(2, b), ExplicitSolution::PhiInf, grid) < 1e-12);
    CHECK(explicit_solution_residual(make_params(2, 5), ExplicitSolution::HInf, grid) < 1e-12);
}

TEST_CASE("residual does not grow under grid refinement") {
    const ModelParams p = make_params(3, 4);
    const double coarse = explicit_solution_residual(p, ExplicitSolution::PhiInf, linspace(0.1, 10, 50));
    const double fine = explicit_solution_residual(p, ExplicitSolution::PhiInf, linspace(0.1, 10, 5000));
    CHECK(fine <= std::max(coarse, 1e-14) * 4);
    CHECK(fine < 1e-12);
}

TEST_CASE("series is constant at b0") {
    const PowerSeries s = local_series(make_params(2, 2), 10);
    CHECK(s.coefficients[0] == 1.0);
    for (std::size_t n = 1; n < s.coefficients.size(); ++n) CHECK(std::abs(s.coefficients[n]) < 1e-15);
    CHECK(series_eval(s, 0.5).value == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("first series coefficients by hand") {
    // matching powers of y in H' = -sigma H(qy)^2 + H^2: a1 = 1 - sigma, a2 = a1 (1 - sigma q)
    const double sigma = std::sqrt(2.0), q = std::pow(2.0, -0.25);
    const double a1 = 1 - sigma;
    const double a2 = a1 * (1 - sigma * q);
    const PowerSeries s = local_series(make_params(2, 4), 2);
    CHECK(std::abs(s.coefficients[1] - a1) < 1e-14);
    CHECK(std::abs(s.coefficients[1] + 0.4142136) < 1e-7);
    CHECK(std::abs(s.coefficients[2] - a2) < 1e-14);
    CHECK(std::abs(s.coefficients[2] - 0.0783722) < 1e-7);
}

TEST_CASE("series evaluation") {
    PowerSeries s;
    s.coefficients = {1.0, -0.4142136, 0.0783722};
    CHECK(std::abs(series_eval(s, 0.1).value - (1 - 0.04142136 + 0.000783722)) < 1e-15);
    CHECK(series_eval(s, 0.0).value == 1.0);
}

TEST_CASE("series coefficients obey the geometric bound") {
    for (auto [g, b] : {std::pair{2.0, 4.0}, {3.0, 2.0}, {1.5, 6.0}}) {
        const ModelParams p = make_params(g, b);
        const PowerSeries s = local_series(p, 30);
        // sup over n >= 0; the n -> inf limit of the factor is 1
        double c = 1;
        for (int n = 0; n <= 30; ++n) c = std::max(c, std::abs(1 - p.sigma * std::exp2(-n / b)));
        for (int n = 1; n <= 30; ++n) CHECK(std::abs(s.coefficients[n]) <= std::pow(c, n) * (1 + 1e-12));
    }
}

TEST_CASE("profile variable round trip") {
    using K = ProfileVariables::Kind;
    const ModelParams p = make_params(2.5, 3.1);
    ProfileVariables F{K::F, logspace(0.01, 50, 40), {}};
    for (double x : F.grid) F.values.push_back(std::exp(-x) / (1 + x * x));
    const auto back = convert(convert(convert(convert(convert(convert(F, K::Phi, p), K::H, p), K::phi, p), K::H, p),
                                      K::Phi, p),
                              K::F, p);
    for (std::size_t i = 0; i < F.grid.size(); ++i) {
        CHECK(std::abs(back.grid[i] / F.grid[i] - 1) < 1e-12);
        CHECK(std::abs(back.values[i] / F.values[i] - 1) < 1e-12);
    }
}
