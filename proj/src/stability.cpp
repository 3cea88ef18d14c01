#include "gelshoot/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>

#include "gelshoot/delaycore.hpp"
#include "gelshoot/errors.hpp"
#include "gelshoot/io.hpp"

namespace gelshoot {

using cplx = std::complex<double>;

double b_star(double gamma) {
    if (!(gamma > 1.0)) throw DomainError("b* needs gamma > 1");
    const double st = 0.5 + std::exp2(-gamma);
    return std::exp2(gamma) * std::numbers::ln2 * std::sqrt(1.0 - st * st) /
           ((std::exp2(gamma - 1.0) - 1.0) * std::acos(st));
}

double p_ratio(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("rho must lie in (0, 1)");
    return (-std::log1p(-rho) / rho) * std::sqrt(rho - 0.25 * rho * rho) / std::acos(1.0 - 0.5 * rho);
}

CharProblem char_problem(const ModelParams& p) {
    CharProblem c;
    c.theta = p.theta;
    c.sigma_tilde = (c.theta + 1.0) / (2.0 * c.theta);
    c.d_tilde = 2.0 * c.theta / (c.theta - 1.0) * p.d;
    c.d_star = std::acos(c.sigma_tilde) / std::sqrt(1.0 - c.sigma_tilde * c.sigma_tilde);
    return c;
}

cplx char_function(const CharProblem& c, cplx z) { return z - c.sigma_tilde + std::exp(-c.d_tilde * z); }

WindingResult winding_number(const ModelParams& p, double R, int n_samples, bool keep_curve) {
    const CharProblem c = char_problem(p);
    if (!(R > 0.0)) R = std::max(50.0, 20.0 / c.d_tilde);
    if (n_samples < 16) throw DomainError("need at least 16 samples");
    // far from the origin the imaginary part |t - sin(d t)| dominates the curve's size
    if (R / 2.0 - 1.0 <= 1.0 + c.sigma_tilde) throw DomainError("R too small for the contour");

    WindingResult w;
    w.R = R;
    w.min_distance = INFINITY;
    auto F = [&](double t) { return char_function(c, cplx(0.0, t)); };

    double total = 0.0;
    std::function<void(double, cplx, double, cplx, int)> seg = [&](double t1, cplx f1, double t2,
                                                                     cplx f2, int depth) {
        const double da = std::arg(f2 / f1);
        if (std::abs(da) > 0.5 && depth < 48) {
            const double tm = 0.5 * (t1 + t2);
            const cplx fm = F(tm);
            w.min_distance = std::min(w.min_distance, std::abs(fm));
            seg(t1, f1, tm, fm, depth + 1);
            seg(tm, fm, t2, f2, depth + 1);
            return;
        }
        total += da;
        if (keep_curve) w.curve.push_back(f2);
    };
    double t = -R;
    cplx f = F(t);
    w.min_distance = std::abs(f);
    if (keep_curve) w.curve.push_back(f);
    for (int k = 1; k <= n_samples; ++k) {
        const double tn = -R + 2.0 * R * k / n_samples;
        const cplx fn = F(tn);
        w.min_distance = std::min(w.min_distance, std::abs(fn));
        seg(t, f, tn, fn, 0);
        t = tn;
        f = fn;
    }
    if (w.min_distance < 1e-8)
        throw OriginOnCurve("characteristic curve passes within " + shortest(w.min_distance) +
                            " of the origin");
    // large half circle from iR to -iR through Re z > 0: F = z g with g close to 1
    auto g = [&](cplx z) { return 1.0 + (std::exp(-c.d_tilde * z) - c.sigma_tilde) / z; };
    total += -std::numbers::pi + (std::arg(g(cplx(0.0, -R))) - std::arg(g(cplx(0.0, R))));
    // the contour runs clockwise around the right half disk
    w.winding = static_cast<int>(std::lround(-total / (2.0 * std::numbers::pi)));
    return w;
}

double winding_transition(double gamma, double lo, double hi, double tol) {
    auto wind = [&](double b) { return winding_number(make_params(gamma, b)).winding; };
    if (!(wind(lo) >= 1 && wind(hi) == 0)) throw BracketFailure("winding does not switch on the interval");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        int w;
        try {
            w = wind(mid);
        } catch (const OriginOnCurve&) {
            return mid;
        }
        (w == 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

DecayReport stability_empirical(const ModelParams& p, const Perturbation& pert, double horizon, double tol) {
    if (!(std::abs(pert.amplitude) < 0.1 * p.phi_inf)) throw DomainError("perturbation must stay below 0.1 phi_inf");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    const double A = pert.amplitude, w = pert.frequency, ph = pert.phase, pinf = p.phi_inf;
    auto hist = [=](double z) { return pinf + A * std::cos(w * z + ph); };
    auto dhist = [=](double z) { return -A * w * std::sin(w * z + ph); };

    DecayReport rep;
    rep.initial_dev = std::abs(A);
    IntegrateOptions o;
    o.tol = tol;
    o.scale_floor = pinf;
    o.cap = 1e6 * pinf;
    DenseTrajectory tr;
    try {
        tr = integrate(DelayRHS::phi_equation(p), InitialSegment::function(hist, dhist), {0.0, horizon}, o);
    } catch (const BlowUp& e) {
        rep.blew_up = true;
        rep.z_end = e.where;
        rep.final_dev = INFINITY;
        rep.rate = INFINITY;
        return rep;
    }
    rep.z_end = horizon;

    // sup of the deviation over ten chunks of the second half
    const int chunks = 10;
    std::vector<double> centers, logs;
    for (int k = 0; k < chunks; ++k) {
        const double a = 0.5 * horizon + 0.5 * horizon * k / chunks;
        const double b = a + 0.5 * horizon / chunks;
        double sup = 0.0;
        for (int i = 0; i <= 200; ++i) sup = std::max(sup, std::abs(tr.eval(a + (b - a) * i / 200.0) - pinf));
        centers.push_back(0.5 * (a + b));
        logs.push_back(std::log(std::max(sup, 1e-300)));
        if (k == chunks - 1) rep.final_dev = sup;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < chunks; ++k) {
        sx += centers[k]; sy += logs[k]; sxx += centers[k] * centers[k]; sxy += centers[k] * logs[k];
    }
    rep.rate = (chunks * sxy - sx * sy) / (chunks * sxx - sx * sx);
    rep.decays = rep.final_dev < 1e-2 * rep.initial_dev && (rep.rate < 0.0 || rep.final_dev < 1e-12);
    if (A == 0.0) rep.decays = rep.final_dev == 0.0;
    return rep;
}

void write_curve_csv(std::ostream& os, const WindingResult& w) {
    os << "re,im\n";
    for (auto z : w.curve) os << csv_num(z.real()) << ',' << csv_num(z.imag()) << '\n';
}

}  // namespace gelshoot
