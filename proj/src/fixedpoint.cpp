#include "gelshoot/fixedpoint.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "gelshoot/delaycore.hpp"
#include "gelshoot/errors.hpp"
#include "gelshoot/io.hpp"

namespace gelshoot {

double envelope_constant(const FixedPointState& s, double delta);

namespace {

Eigen::VectorXd make_grid(const FixedPointConfig& cfg) {
    if (cfg.nodes < 10 || !(cfg.x_max > 0.0)) throw DomainError("bad fixed-point grid");
    Eigen::VectorXd x(cfg.nodes + 1);
    for (int i = 0; i <= cfg.nodes; ++i)
        x[i] = cfg.x_max * std::pow(static_cast<double>(i) / cfg.nodes, cfg.grading);
    return x;
}

// sup-norm fit of |W| <= C e^(-delta x) on the middle of the grid
void fit_decay(FixedPointState& s) {
    const double x0 = 0.2 * s.x[s.x.size() - 1], x1 = 0.9 * s.x[s.x.size() - 1];
    std::vector<double> cx, cy;
    const int chunks = 12;
    for (int k = 0; k < chunks; ++k) {
        const double a = x0 + (x1 - x0) * k / chunks, b = a + (x1 - x0) / chunks;
        double sup = 0.0;
        for (Eigen::Index i = 0; i < s.x.size(); ++i)
            if (s.x[i] >= a && s.x[i] <= b) sup = std::max(sup, std::abs(s.W[i]));
        if (sup > 1e-13) {
            cx.push_back(0.5 * (a + b));
            cy.push_back(std::log(sup));
        }
    }
    if (cx.size() < 2) return;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(cx.size());
    for (std::size_t k = 0; k < cx.size(); ++k) {
        sx += cx[k]; sy += cy[k]; sxx += cx[k] * cx[k]; sxy += cx[k] * cy[k];
    }
    s.delta_fit = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    s.M_fit = envelope_constant(s, s.delta_fit);
}

}  // namespace

double FixedPointState::value(double xx) const {
    const auto n = x.size();
    if (xx < 0.0 || xx > x[n - 1] * (1.0 + 1e-14)) throw OutOfRange("W lookup outside [0, x_max]");
    auto it = std::upper_bound(x.data(), x.data() + n, xx);
    Eigen::Index i = std::clamp<Eigen::Index>(it - x.data() - 1, 0, n - 2);
    const double h = x[i + 1] - x[i], s = (xx - x[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * W[i] + (s3 - 2 * s2 + s) * h * dW[i] + (-2 * s3 + 3 * s2) * W[i + 1] +
           (s3 - s2) * h * dW[i + 1];
}

double FixedPointState::derivative(double xx) const {
    const auto n = x.size();
    if (xx < 0.0 || xx > x[n - 1] * (1.0 + 1e-14)) throw OutOfRange("W lookup outside [0, x_max]");
    auto it = std::upper_bound(x.data(), x.data() + n, xx);
    Eigen::Index i = std::clamp<Eigen::Index>(it - x.data() - 1, 0, n - 2);
    const double h = x[i + 1] - x[i], s = (xx - x[i]) / h;
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * W[i] + (-6 * s2 + 6 * s) * W[i + 1]) / h +
           (3 * s2 - 4 * s + 1) * dW[i] + (3 * s2 - 2 * s) * dW[i + 1];
}

FixedPointState zero_state(double eps, double eta, const FixedPointConfig& cfg) {
    // x (1 + eps) / 2 has to stay behind x
    if (!(std::abs(eps) < 1.0) || !std::isfinite(eta)) throw DomainError("eps must lie in (-1, 1)");
    FixedPointState s;
    s.x = make_grid(cfg);
    s.W = Eigen::VectorXd::Zero(s.x.size());
    s.dW = Eigen::VectorXd::Zero(s.x.size());
    s.eps = eps;
    s.eta = eta;
    return s;
}

double r_eval(const FixedPointState& W, double x, double eps, double eta) {
    if (x < 0.0) throw OutOfRange("R needs x >= 0");
    const double xe = 0.5 * x * (1.0 + eps);
    const double wh = W.value(0.5 * x), we = W.value(xe), w = W.value(x);
    const double e = std::exp(-x);
    return (e - std::exp(-x * (1.0 + eps))) + 2.0 * std::exp(-0.5 * x) * wh -
           2.0 * std::exp(-xe) * we - we * we + eta * (e + w) * (e + w);
}

double f_integral(const FixedPointState& W, double eps, double eta, const FixedPointConfig& cfg,
                  bool* tail_warning) {
    using GL = boost::math::quadrature::gauss<double, 10>;
    auto f = [&](double xi) { return std::exp(xi) * q_eval(xi, cfg.greens.N_q) * r_eval(W, xi, eps, eta); };
    double total = 0.0;
    for (Eigen::Index i = 0; i + 1 < W.x.size(); ++i) total += GL::integrate(f, W.x[i], W.x[i + 1]);
    // beyond x_max the integrand is below this bound if it keeps decaying
    if (tail_warning) *tail_warning = std::abs(f(W.x[W.x.size() - 1])) > 1e-12;
    return total;
}

FixedPointState apply_T(const FixedPointState& W, const FixedPointConfig& cfg) {
    const double eps = W.eps, eta = W.eta;
    auto rhs = DelayRHS::custom(
        [&](double t, double, double ud) { return -2.0 * std::exp(-0.5 * t) * ud + r_eval(W, t, eps, eta); },
        0.5, 0.0);
    IntegrateOptions o;
    o.fixed_nodes.assign(W.x.data() + 1, W.x.data() + W.x.size());
    o.cap = 1e6;
    auto tr = integrate(rhs, InitialSegment::point(0.0), {0.0, W.x[W.x.size() - 1]}, o);
    if (tr.size() != static_cast<std::size_t>(W.x.size())) throw NumericalError("GridMismatch", "grid and stepping disagree");

    FixedPointState out = W;
    bool warn = false;
    const double F = f_integral(W, eps, eta, cfg, &warn);
    for (Eigen::Index i = 0; i < W.x.size(); ++i) {
        out.W[i] = tr.values()[i] - F;
        out.dW[i] = tr.derivatives()[i];
    }
    out.F_value = F;
    out.F_check = tr.values().back();
    out.tail_warning = warn;
    return out;
}

FixedPointState picard_solve(double eps, double eta, const FixedPointConfig& cfg, const FixedPointState* start) {
    if (!(std::abs(eps) < 1.0)) throw DomainError("eps must lie in (-1, 1)");
    FixedPointState W = start ? *start : zero_state(eps, eta, cfg);
    W.eps = eps;
    W.eta = eta;
    W.sup_diff_history.clear();
    int rising = 0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        FixedPointState next = apply_T(W, cfg);
        const double diff = (next.W - W.W).cwiseAbs().maxCoeff();
        next.sup_diff_history = W.sup_diff_history;
        next.sup_diff_history.push_back(diff);
        next.iterations = it;
        const auto& h = next.sup_diff_history;
        rising = (h.size() >= 2 && h[h.size() - 1] > h[h.size() - 2]) ? rising + 1 : 0;
        W = std::move(next);
        if (!std::isfinite(diff) || rising >= 3)
            throw NonContraction("sup difference grew for 3 iterations at eps=" + shortest(eps) +
                                 " eta=" + shortest(eta));
        if (diff < cfg.tol) {
            // F of the converged W, not of the previous iterate
            bool warn = false;
            W.F_value = f_integral(W, eps, eta, cfg, &warn);
            W.tail_warning = warn;
            fit_decay(W);
            return W;
        }
    }
    throw NonContraction("no convergence in " + std::to_string(cfg.max_iter) + " iterations");
}

double f_eval(const FixedPointState& s) { return s.F_value; }

double envelope_constant(const FixedPointState& s, double delta) {
    const double scale = s.eps + s.eta;
    if (!(scale > 0.0)) return 0.0;
    double M = 0.0;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) M = std::max(M, std::abs(s.W[i]) * std::exp(delta * s.x[i]));
    return M / scale;
}

EpsOfEta eps_of_eta(double eta, double tol, const FixedPointConfig& cfg) {
    if (eta == 0.0) return {0.0, picard_solve(0.0, 0.0, cfg), 1};
    if (!(eta > 0.0 && eta <= 0.05)) throw DomainError("eta must lie in (0, 0.05]");
    EpsOfEta r{0.0, {}, 0};
    double lo = 0.0, hi = 10.0 * eta;
    FixedPointState last = picard_solve(lo, eta, cfg);
    const double flo = f_eval(last);
    double fhi = f_eval(picard_solve(hi, eta, cfg));
    r.evaluations = 2;
    if (!(flo < 0.0 && fhi > 0.0)) {
        hi *= 2.0;
        fhi = f_eval(picard_solve(hi, eta, cfg));
        ++r.evaluations;
        if (!(flo < 0.0 && fhi > 0.0))
            throw NoSignChange("F(0)=" + shortest(flo) + " F(" + shortest(hi) + ")=" + shortest(fhi));
    }
    // bracketed root search on eps -> F(W(eps, eta), eps, eta)
    double best_eps = lo, best_F = flo;
    auto f = [&](double e) {
        last = picard_solve(e, eta, cfg, &last);
        ++r.evaluations;
        const double F = f_eval(last);
        log(LogLevel::Debug, "eps_of_eta eta=" + shortest(eta) + " eps=" + shortest(e) + " F=" + shortest(F));
        if (std::abs(F) < std::abs(best_F)) {
            best_eps = e;
            best_F = F;
            r.state = last;
        }
        return F;
    };
    auto done = [&](double a, double b) { return std::abs(best_F) < tol || std::abs(b - a) < 1e-15; };
    std::uintmax_t iters = 100;
    boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, done, iters);
    r.eps = best_eps;
    if (best_eps == lo) r.state = picard_solve(lo, eta, cfg);
    return r;
}

BbarResult bbar_of_gamma(double gamma, const FixedPointConfig& cfg) {
    if (!(gamma > 1.0)) throw DomainError("gamma must exceed 1");
    double b = 1.0, omega = 1.0, last_step = INFINITY;
    EpsOfEta e{};
    int it = 0;
    for (; it < 100; ++it) {
        const double eta = std::exp2(2.0 / b + 1.0 - gamma);
        if (eta > 0.05) throw DomainError("eta = " + shortest(eta) + " is too large; gamma must be larger");
        e = eps_of_eta(eta, 1e-13, cfg);
        const double bn = std::numbers::ln2 / (std::numbers::ln2 - std::log1p(e.eps));
        // relaxed update, damped further whenever the step stops shrinking
        const double step = bn - b;
        if (std::abs(step) >= std::abs(last_step)) omega *= 0.5;
        last_step = step;
        b += omega * step;
        log(LogLevel::Info, "bbar iteration b=" + shortest(b) + " eps=" + shortest(e.eps));
        if (std::abs(step) < 1e-12) break;
    }
    BbarResult r{b, std::exp2(2.0 / b + 1.0 - gamma), e.eps, it + 1, e.state, INFINITY, 0.0};
    const auto& s = r.state;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) r.min_h = std::min(r.min_h, std::exp(-s.x[i]) + s.W[i]);
    if (r.min_h < -1e-9) throw PositivityViolation("reconstructed h dips to " + shortest(r.min_h));

    // decay of h on the tail: slope of log h between 0.3 x_max and 0.9 x_max
    std::vector<double> cx, cy;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
        const double xx = s.x[i], h = std::exp(-xx) + s.W[i];
        if (xx >= 0.3 * cfg.x_max && xx <= 0.9 * cfg.x_max && h > 1e-11) {
            cx.push_back(xx);
            cy.push_back(std::log(h));
        }
    }
    if (cx.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(cx.size());
        for (std::size_t k = 0; k < cx.size(); ++k) {
            sx += cx[k]; sy += cy[k]; sxx += cx[k] * cx[k]; sxy += cx[k] * cy[k];
        }
        r.tail_delta = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return r;
}

std::vector<ProfilePoint> reconstruct_profile(const FixedPointState& s, const ModelParams& p) {
    std::vector<ProfilePoint> out;
    for (Eigen::Index i = 1; i < s.x.size(); ++i) {
        const double xx = s.x[i], h = std::exp(-xx) + s.W[i];
        const double y = xx / p.sigma;
        out.push_back({xx, h, s.W[i], y, h, std::pow(y, p.b), y * h});
    }
    return out;
}

void write_state_json(std::ostream& os, const FixedPointState& s) {
    nlohmann::json j;
    j["grid"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    j["W"] = std::vector<double>(s.W.data(), s.W.data() + s.W.size());
    j["eps"] = s.eps;
    j["eta"] = s.eta;
    j["F"] = s.F_value;
    j["iterations"] = s.iterations;
    j["sup_diff_history"] = s.sup_diff_history;
    j["M_fit"] = s.M_fit;
    j["delta_fit"] = s.delta_fit;
    os << j.dump() << '\n';
}

void write_profile_csv(std::ostream& os, const FixedPointState& s) {
    os << "x,h,W\n";
    for (Eigen::Index i = 0; i < s.x.size(); ++i)
        write_csv_row(os, {s.x[i], std::exp(-s.x[i]) + s.W[i], s.W[i]});
}

}  // namespace gelshoot
