#pragma once

#include <vector>

namespace gelshoot {

// gamma and b plus everything derived from them, computed once
struct ModelParams {
    double gamma;
    double b;
    double a;
    double sigma;
    double q;
    double d;
    double theta;
    double b0;
    double eps_delay;
    double phi_inf;
};

ModelParams make_params(double gamma, double b);

enum class ExplicitSolution { Phi0, PhiInf, HInf };

// max |lhs - rhs| over the grid of the profile equation with the closed form plugged in.
// Phi0 and PhiInf are checked in the Phi equation, HInf in the H equation.
double explicit_solution_residual(const ModelParams& p, ExplicitSolution which,
                                  const std::vector<double>& grid);

struct PowerSeries {
    std::vector<double> coefficients;
    double expansion_point = 0.0;
    double validity_radius_estimate = 0.0;
};

struct SeriesValue {
    double value;
    double error_estimate;  // magnitude of the last term
};

// H(y) = sum a_n y^n about y = 0 with a_0 = 1
PowerSeries local_series(const ModelParams& p, int N = 40);

// series for u' = A u(q y)^2 + B u(y)^2 with u(0) = u0; the H equation is A=-sigma, B=1
PowerSeries quadratic_pantograph_series(double A, double B, double q, double u0, int N);

SeriesValue series_eval(const PowerSeries& s, double y);
double series_derivative(const PowerSeries& s, double y);

// largest y (up to the radius estimate) where the last term is below threshold
double series_switch_point(const PowerSeries& s, double threshold = 1e-14);

// profile variables: F and Phi live on x, H on y = x^(1/b), phi on z = ln y
struct ProfileVariables {
    enum class Kind { F, Phi, H, phi };
    Kind kind;
    std::vector<double> grid;
    std::vector<double> values;
};

ProfileVariables convert(const ProfileVariables& in, ProfileVariables::Kind to,
                         const ModelParams& p);

}  // namespace gelshoot
