#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gelshoot/errors.hpp"
#include "gelshoot/params.hpp"

namespace gelshoot {

// sites xi_k = xi0 2^k, k = 0..K; f_{-1} is held at `inflow` (0 by default)
struct DyadicChain {
    double xi0 = 1.0;
    double gamma = 2.0;
    double t = 0.0;
    Eigen::VectorXd f;
    double inflow = 0.0;

    int levels() const { return static_cast<int>(f.size()); }
    double xi(int k) const;
};

DyadicChain make_chain(double xi0, double gamma, int K, const std::function<double(double)>& f0,
                       double inflow = 0.0);

// df_k/dt = (1/4)(xi_k/2)^(g+1) f_{k-1}^2 - xi_k^(g+1) f_k^2
Eigen::VectorXd chain_rhs(const DyadicChain& c, const Eigen::VectorXd& f);

struct ChainBlowUp : BlowUp {
    int site;
    double t_estimate;
    ChainBlowUp(int s, double t_now, double t_est, const std::string& what)
        : BlowUp(t_now, what), site(s), t_estimate(t_est) {}
};

struct ChainOptions {
    double cap = 1e30;
    double abs_floor = 1e-30;  // components below this are not error controlled
    double h_init = 1e-4;
    double h_max = 0.0;        // 0 means unbounded
    double h_min = 1e-14;
};

struct ChainRun {
    std::vector<DyadicChain> chains;
    std::vector<double> steps;   // accepted step sizes, in order
    int rejected = 0;
    double min_value = 0.0;      // smallest f_k seen at accepted steps
};

// RK4 with step doubling; one step size shared by all chains passed in
ChainRun evolve_chains(std::vector<DyadicChain> chains, double t_end, double tol,
                       const ChainOptions& opt = {});
DyadicChain evolve_chain(const DyadicChain& c, double t_end, double tol, const ChainOptions& opt = {});

// apply a recorded step sequence without error control
DyadicChain replay_chain(DyadicChain c, const std::vector<double>& steps);

// F sampled on a positive increasing grid; dF optional (finite differences otherwise)
struct GridFunction {
    std::vector<double> x, F, dF;
};

// max over the grid of |residual| / (sum of |terms|), skipping points with x/2 below the grid
double selfsimilar_residual(const GridFunction& g, const ModelParams& p);

struct InitDescriptor {
    enum class Kind { Exponential, Mono, Power } kind = Kind::Mono;
    double center = 1.5;    // Mono: Gaussian in ln xi
    double width = 0.2;
    double exponent = 3.0;  // Power: xi^(-exponent)
    double amplitude = 1.0;

    double operator()(double xi) const;
    static InitDescriptor parse(const std::string& s);  // exp | mono | power:<e>
};

struct ChainEstimate {
    double xi0;
    std::vector<double> site_T;  // time of the first maximum of f_k (inf if none before the horizon)
    bool gels = false;
    double T_hat = 0.0;          // Aitken limit of the top three usable site estimates
    double ratio = 0.0;          // successive difference ratio used in the Aitken step
    double T_err = 0.0;          // change from the Aitken estimate one site lower
    std::vector<double> site_fmax;
    double b_fit = 0.0;          // from peak heights ~ xi^(1/b - g - 1)
};

struct Snapshot {
    double t;
    std::vector<double> x, Phi;  // x = (T-t)^b xi, Phi = (T-t) xi^(g+1) f, sorted by x
};

struct SimDiagnostics {
    double gamma;
    int chains = 0;
    int levels = 0;
    double horizon = 0.0;
    std::vector<ChainEstimate> per_chain;
    bool gels = false;
    double T_hat = 0.0;         // earliest chain estimate, when the system first loses mass
    double b_fit = 0.0;         // median of the per-chain fits
    std::vector<Snapshot> snapshots;  // first gelling chain, rescaled with its own T
    std::vector<double> collapse;     // median over gelling chains of the sup distance between
                                      // consecutive rescaled snapshots
    std::vector<double> mass_times, mass;  // log-trapezoid mass estimate
};

struct ScanConfig {
    int chains = 64;
    int K = 24;
    double horizon = 10.0;
    double tol = 1e-10;
    int snapshots = 6;      // fewer when tau would fall below 20 T_err
    int jobs = 0;
    double b = 0.0;         // rescaling exponent; 0 uses the fitted one
    InitDescriptor init;
};

SimDiagnostics gelation_scan(double gamma, const ScanConfig& cfg = {});

void write_snapshot_csv(std::ostream& os, const std::vector<DyadicChain>& chains);

}  // namespace gelshoot
