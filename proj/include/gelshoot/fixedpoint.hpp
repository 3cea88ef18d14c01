#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "gelshoot/greens.hpp"
#include "gelshoot/params.hpp"

namespace gelshoot {

struct FixedPointConfig {
    double x_max = 40.0;
    int nodes = 2000;
    double grading = 1.5;    // x_i = x_max (i/n)^grading
    double tol = 1e-12;      // Picard stops when sup |T[W] - W| < tol
    int max_iter = 400;
    GreensEval greens;
};

struct FixedPointState {
    Eigen::VectorXd x, W, dW;  // W' is stored, Hermite interpolation in between
    double eps = 0.0;
    double eta = 0.0;
    double F_value = 0.0;
    double F_check = 0.0;      // the same constant read off as the limit of the linear solve
    bool tail_warning = false;
    int iterations = 0;
    std::vector<double> sup_diff_history;
    double delta_fit = 0.0;    // decay rate of the sup envelope of |W|
    double M_fit = 0.0;        // |W| <= (eps + eta) M e^(-delta_fit x)

    double value(double xx) const;
    double derivative(double xx) const;
};

FixedPointState zero_state(double eps, double eta, const FixedPointConfig& cfg = {});

// R[W](x; eps, eta)
double r_eval(const FixedPointState& W, double x, double eps, double eta);

// F(W, eps, eta) = int_0^inf e^xi Q(xi) R[W](xi) dxi
double f_integral(const FixedPointState& W, double eps, double eta, const FixedPointConfig& cfg = {},
                  bool* tail_warning = nullptr);

// T[W] = w - F where w' = -2 e^(-x/2) w(x/2) + R[W], w(0) = 0, stepped on the grid
FixedPointState apply_T(const FixedPointState& W, const FixedPointConfig& cfg = {});

FixedPointState picard_solve(double eps, double eta, const FixedPointConfig& cfg = {},
                             const FixedPointState* start = nullptr);

double f_eval(const FixedPointState& s);

// smallest M with |W(x)| <= (eps + eta) M e^(-delta x) on the grid
double envelope_constant(const FixedPointState& s, double delta);

struct EpsOfEta {
    double eps;
    FixedPointState state;
    int evaluations = 0;
};

EpsOfEta eps_of_eta(double eta, double tol = 1e-10, const FixedPointConfig& cfg = {});

struct BbarResult {
    double bbar;
    double eta;
    double eps;
    int iterations;
    FixedPointState state;
    double min_h;       // min of e^-x + W over the grid
    double tail_delta;  // decay rate of h fitted on the tail
};

BbarResult bbar_of_gamma(double gamma, const FixedPointConfig& cfg = {});

// profile reconstruction: H(y) = h(sigma y), Phi(x) = y H(y) with y = x^(1/b)
struct ProfilePoint {
    double x, h, W;   // rescaled variable
    double y, H;      // y = x / sigma
    double X, Phi;    // X = y^b
};
std::vector<ProfilePoint> reconstruct_profile(const FixedPointState& s, const ModelParams& p);

void write_state_json(std::ostream& os, const FixedPointState& s);
void write_profile_csv(std::ostream& os, const FixedPointState& s);

}  // namespace gelshoot
