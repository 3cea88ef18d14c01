#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "gelshoot/delaycore.hpp"
#include "gelshoot/params.hpp"

namespace gelshoot {

struct ClassifyTols {
    double tol_neg = 1e-9;      // phi below -tol_neg counts as a sign change
    double tol_conv = 1e-6;     // sup |phi - phi_inf| over the trailing window
    double window = 10.0;       // trailing window length in z
    double osc_amp = 1e-4;      // extrema closer than this to phi_inf are ignored
    int min_extrema = 3;
    double integ_tol = 1e-10;
    // a window of 10 at 1e-6 cannot be resolved by z = ln(500); the run always reaches this z
    double min_z_end = 24.0;
    int series_terms = 40;
};

struct SignChange {
    double y_cross;
};
struct ConvergesToConstant {
    double tail_residual;
    double phi_inf;
};
struct Oscillating {
    int num_extrema;
    double min_level;
    std::vector<double> plateau_ratios;
};
struct Undetermined {
    double y_max_reached;
};

struct Classification {
    std::variant<SignChange, ConvergesToConstant, Oscillating, Undetermined> outcome;
    ModelParams params;
    double z_start = 0.0;  // where the series hands over to stepping
    std::shared_ptr<const DenseTrajectory> phi;  // phi(z), z = ln y

    const char* tag() const;
    bool is_sign_change() const { return std::holds_alternative<SignChange>(outcome); }
    double y_event() const;
    std::string evidence_json() const;
};

// integrates phi' = phi - theta phi(z-d)^2 + phi^2 after the H series and reads off the behaviour
Classification classify(const ModelParams& p, double y_max = 500.0, const ClassifyTols& tols = {});

struct ScanEntry {
    double b;
    bool ok;
    std::string tag;    // class tag, or the error kind when !ok
    double y_event = 0.0;
    std::string extra;  // evidence JSON, or the error message
};

std::vector<ScanEntry> scan_b(double gamma, const std::vector<double>& b_grid, double y_max = 500.0,
                              const ClassifyTols& tols = {}, int jobs = 0);

struct CriticalBracket {
    double b_lo;
    double b_hi;
    double width;
    double gamma;
    std::string class_lo, class_hi;
    int evaluations = 0;
};

// bisection between b0 + delta_frac*b0 (sign change) and b*(gamma) (no sign change)
CriticalBracket bracket_bbar(double gamma, double tol_b, double y_max = 500.0,
                             const ClassifyTols& tols = {}, double delta_frac = 0.02);

struct LimitHRun {
    DenseTrajectory traj;
    bool sign_change = false;
    double y_cross = 0.0;
};

// h' = -h(y(1+eps)/2)^2, h(0) = 1, relative error control all the way down
LimitHRun limit_h_run(double eps, double y_end = 1e8, double tol = 1e-10, double tol_neg = 1e-9);

struct PlateauReport {
    std::vector<double> positions;
    std::vector<double> levels;
    std::vector<double> ratios;
    double predicted_ratio = 0.0;  // c0 * eps
    double floor = 0.0;            // min of h(y)(1+y) over the nodes
};

// plateaus are interior local minima of |y h'/h| below slope_tol
PlateauReport plateau_diagnostics(const DenseTrajectory& traj, double eps, double slope_tol = 0.5);

}  // namespace gelshoot
