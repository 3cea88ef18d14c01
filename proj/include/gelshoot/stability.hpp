#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include "gelshoot/params.hpp"

namespace gelshoot {

double b_star(double gamma);

// b*/b0 written in rho = 1 - 2^-(gamma-1)
double p_ratio(double rho);

struct CharProblem {
    double theta;
    double sigma_tilde;
    double d_tilde;
    double d_star;
};

CharProblem char_problem(const ModelParams& p);

// characteristic function z - sigma~ + e^(-d~ z) of the linearization around phi_inf
std::complex<double> char_function(const CharProblem& c, std::complex<double> z);

struct WindingResult {
    int winding = 0;           // turns of the image of the closed contour = roots with Re z > 0
    double R = 0.0;
    double min_distance = 0.0; // closest approach of Sigma_1 to the origin
    std::vector<std::complex<double>> curve;  // Sigma_1 samples, t from -R to R
};

// R <= 0 picks max(50, 20/d~)
WindingResult winding_number(const ModelParams& p, double R = 0.0, int n_samples = 20000,
                             bool keep_curve = false);

// b where the winding count switches, by bisection on [lo, hi]
double winding_transition(double gamma, double lo, double hi, double tol = 1e-7);

struct Perturbation {
    double amplitude = 0.0;  // absolute, history is phi_inf + amplitude cos(frequency z + phase)
    double frequency = 1.0;
    double phase = 0.0;
};

struct DecayReport {
    bool decays = false;
    bool blew_up = false;
    double rate = 0.0;          // slope of log |phi - phi_inf| peaks over the second half
    double initial_dev = 0.0;
    double final_dev = 0.0;     // sup |phi - phi_inf| over the last twentieth of the horizon
    double z_end = 0.0;
};

DecayReport stability_empirical(const ModelParams& p, const Perturbation& pert, double horizon = 200.0,
                                double tol = 1e-10);

void write_curve_csv(std::ostream& os, const WindingResult& w);

}  // namespace gelshoot
