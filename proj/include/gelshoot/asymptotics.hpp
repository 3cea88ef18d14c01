#pragma once

#include <vector>

#include "gelshoot/delaycore.hpp"

namespace gelshoot {

// positive root of b a / (2 (1 - 2^-a)) = 1
double alpha_root(double b);
double alpha_residual(double b, double alpha);

struct Gamma1Profile {
    double b;
    double alpha;
    double a1;
    std::vector<double> coefficients;  // a_0 = 1, a_1, ..., a_N in Phi = sum a_n x^(n alpha)
    double radius_estimate = 0.0;

    double value(double x) const;
    double derivative(double x) const;  // d Phi / dx
};

Gamma1Profile gamma1_series(double b, double a1, int N = 30);

// largest x where the last series term is below threshold
double gamma1_switch_point(const Gamma1Profile& s, double threshold = 1e-14);

struct Gamma1Run {
    Gamma1Profile series;
    double x_switch;
    DenseTrajectory traj;  // Phi against s = ln x

    double phi(double x) const;
};

// continue the series by b x Phi' = Phi^2 - Phi(x/2)^2, stepped in s = ln x
Gamma1Run gamma1_profile(double b, double a1, double x_end, double tol = 1e-11, int N = 30);

// b Phi(x) - int_{x/2}^x Phi(s)^2 / s ds, equal to b - ln2 for every solution
double gamma1_integrated_constant(const Gamma1Run& run, double x);

struct Gamma1Limit {
    double limit;
    double fit_rate;  // c in |Phi(x) - limit| ~ C e^(-c ln x)
    double x_end;
};

Gamma1Limit gamma1_b1_limit(double a1, double x_end = 1e12, double tol = 1e-12);

double psi_coefficient_log(double eps, int n);  // log of a_{n+1}, the coefficient of y^(n+1)

struct PsiValue {
    double log_value;
    double value;      // inf when beyond double range
    int terms;
};

// Psi(y) = y + sum_n 2^n prod_{k<=n} (1 - (1-eps)^k) / (n+1)! y^(n+1)
PsiValue psi_series_eval(double eps, double y, int N = 0);
double psi_series_derivative(double eps, double y, int N = 0);

struct LaplaceQuantities {
    double eta, t_star, W, D, U;
};

LaplaceQuantities laplace_quantities(double eta);

struct PsiAsymRow {
    double eps, log_psi, log_pred, r;
};

std::vector<PsiAsymRow> psi_asymptotics_check(double eta, const std::vector<double>& eps_list);

struct CriticalDelta {
    double delta;
    double log_delta;
    double w_prime;     // t*(eta)/eta
    double w_prime_fd;  // central difference of W
};

CriticalDelta critical_delta(double eps, double eta_bar);

struct TailExponents {
    double eps;
    double beta;
    double alpha;
    double K1_over_c1;
    double sigma_rate;
    double K0_over_c0;
    double closure_error;    // K1 and c1 recovered through the matching identities
    double leading_gap;      // relative gap between K0/c0 implied by matching and 4 ln2 / eta
};

TailExponents tail_exponents(double eps, double eta_bar);

}  // namespace gelshoot
