#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace gelshoot {

struct GreensEval {
    int N_q = 40;            // terms in the Q series
    double L_tilde = 0.75;   // vertical contour Re z = L_tilde, must lie in (1/2, 1)
    double T_max = 200.0;    // straight part of the contour |Im z| <= T_max
    int nodes = 4096;        // quadrature nodes on the straight part
    int N_terms = 0;         // terms of the G~ sum, 0 picks automatically
};

struct QValue {
    double value;
    double tail_bound;  // magnitude of the first omitted term
};

// Q(xi) = e^-xi + sum_{n>=1} (-1)^n 4^n e^(-2^n xi) / prod_{j=1}^n (2^j - 1)
double q_eval(double xi, int N = 40);
QValue q_eval_bounded(double xi, int N = 40);
double q_coefficient(int n);  // unsigned 4^n / prod (2^j - 1)

// integral of eta Q(eta) over (0, inf), term-wise and by quadrature
double c0_moment();
double c0_moment_quadrature();

// integral of e^-eta Q(eta) over (0, inf), term-wise and by quadrature
double q_laplace_one();
double q_laplace_one_quadrature();

// fundamental solution by integrating phi' = phi - 2 phi(x/2) from a unit jump at xi
double g_by_ode(double x, double xi, double tol = 1e-11);

struct GtildeResult {
    double value = 0.0;
    double ray_part = 0.0;         // contribution of the deformed tails beyond |t| = T_max
    double series_remainder = 0.0; // bound on the omitted terms of the n-sum
    int terms = 0;
    bool truncation_warning = false;
};

GtildeResult gtilde_quadrature(double x, double xi, const GreensEval& cfg = {});

// the n-th summand, coefficient included
double gtilde_term(int n, double x, double xi, const GreensEval& cfg = {});

struct BoundsAudit {
    double C0_Q = 0.0;          // max |Q(xi)| e^xi over the sample
    double gtilde_rate = 0.0;   // fitted exponential growth rate of |G~| in x - xi
    double gtilde_C0 = 0.0;     // smallest C with |G~| <= C e^(rate (x - xi))
    double lipschitz_C = 0.0;   // max |e^x1 Q(x1) - e^x2 Q(x2)| / (|x1 - x2| e^-x1)
    std::vector<std::string> violations;
};

BoundsAudit bounds_audit(const std::vector<double>& xi_samples,
                         const std::vector<std::pair<double, double>>& gtilde_samples,
                         const std::vector<std::pair<double, double>>& lipschitz_samples,
                         const GreensEval& cfg = {});

void write_q_table(std::ostream& os, const std::vector<double>& xi, int N = 40);

}  // namespace gelshoot
