#include "gelshoot/asymptotics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <numbers>

#include "gelshoot/errors.hpp"

namespace gelshoot {

namespace {

using boost::math::tools::toms748_solve;

template <class F>
double bracket_root(F f, double lo, double hi) {
    std::uintmax_t it = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(std::abs(a), std::abs(b)); };
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    auto r = toms748_solve(f, lo, hi, flo, fhi, tol, it);
    return 0.5 * (r.first + r.second);
}

}  // namespace

double alpha_residual(double b, double alpha) {
    return b * alpha / (2.0 * (-std::expm1(-alpha * std::numbers::ln2))) - 1.0;
}

double alpha_root(double b) {
    if (!(b > 0.0)) throw DomainError("b must be positive");
    // near 0 the left side tends to b/(2 ln2), so a positive root needs b < 2 ln2
    if (!(b < 2.0 * std::numbers::ln2)) throw DomainError("no positive root for b >= 2 ln2");
    double hi = 1.0;
    while (alpha_residual(b, hi) < 0.0) hi *= 2.0;
    return bracket_root([b](double a) { return alpha_residual(b, a); }, 1e-12, hi);
}

double Gamma1Profile::value(double x) const {
    const double u = std::pow(x, alpha);
    double s = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) s = s * u + *it;
    return s;
}

double Gamma1Profile::derivative(double x) const {
    if (x <= 0.0) return alpha == 1.0 && coefficients.size() > 1 ? coefficients[1] : 0.0;
    const double u = std::pow(x, alpha);
    double s = 0.0;
    for (std::size_t n = coefficients.size() - 1; n >= 1; --n) s = s * u + n * coefficients[n];
    return alpha * u / x * s;
}

Gamma1Profile gamma1_series(double b, double a1, int N) {
    if (!(a1 <= 0.0)) throw DomainError("a1 must be negative");
    if (N < 2) throw DomainError("need N >= 2");
    Gamma1Profile g{b, alpha_root(b), a1, std::vector<double>(N + 1, 0.0)};
    auto& a = g.coefficients;
    a[0] = 1.0;
    a[1] = a1;
    for (int n = 2; n <= N; ++n) {
        double s = 0.0;
        for (int m = 1; m < n; ++m) s += a[m] * a[n - m];
        const double na = n * g.alpha;
        a[n] = s / (n * b * g.alpha / (-std::expm1(-na * std::numbers::ln2)) - 2.0);
    }
    // |a_n| ~ c^n in u = x^alpha
    double c = 0.0;
    for (int n = N / 2; n <= N; ++n)
        if (a[n] != 0.0) c = std::max(c, std::pow(std::abs(a[n]), 1.0 / n));
    g.radius_estimate = c > 0.0 ? std::pow(1.0 / c, 1.0 / g.alpha) : INFINITY;
    return g;
}

double gamma1_switch_point(const Gamma1Profile& s, double threshold) {
    const int N = static_cast<int>(s.coefficients.size()) - 1;
    const double aN = std::abs(s.coefficients[N]);
    if (aN == 0.0) return std::isfinite(s.radius_estimate) ? s.radius_estimate : 1.0;
    const double u = std::pow(threshold / aN, 1.0 / N);
    return std::min(std::pow(u, 1.0 / s.alpha), s.radius_estimate);
}

double Gamma1Run::phi(double x) const {
    if (x <= x_switch) return series.value(x);
    return traj.eval(std::log(x));
}

Gamma1Run gamma1_profile(double b, double a1, double x_end, double tol, int N) {
    Gamma1Profile s = gamma1_series(b, a1, N);
    const double xs = gamma1_switch_point(s);
    if (!(x_end > xs)) throw DomainError("x_end inside the series range");
    auto hist = [s](double t) { return s.value(std::exp(t)); };
    auto dhist = [s](double t) {
        const double x = std::exp(t);
        return x * s.derivative(x);
    };
    IntegrateOptions o;
    o.tol = tol;
    o.scale_floor = 1e-300;
    o.stop = [](double, double u) { return u < 1e-200; };
    auto tr = integrate(DelayRHS::phi_gamma1_log(b), InitialSegment::function(hist, dhist),
                        {std::log(xs), std::log(x_end)}, o);
    return {std::move(s), xs, std::move(tr)};
}

double gamma1_integrated_constant(const Gamma1Run& run, double x) {
    using GL = boost::math::quadrature::gauss<double, 20>;
    const double t1 = std::log(x), t0 = t1 - std::numbers::ln2;
    double integral = 0.0;
    const int panels = 16;
    for (int k = 0; k < panels; ++k) {
        const double a = t0 + (t1 - t0) * k / panels, c = a + (t1 - t0) / panels;
        integral += GL::integrate([&](double t) {
            const double v = run.traj.eval(t);
            return v * v;
        }, a, c);
    }
    return run.series.b * run.phi(x) - integral;
}

Gamma1Limit gamma1_b1_limit(double a1, double x_end, double tol) {
    if (!(a1 < 0.0)) throw DomainError("a1 must be negative");
    const Gamma1Run run = gamma1_profile(1.0, a1, x_end, tol);
    Gamma1Limit r{run.traj.values().back(), 0.0, x_end};
    // log |Phi - limit| against s = ln x; the approach is algebraic in x
    const double closed = (1.0 - std::numbers::ln2) / std::numbers::ln2;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < run.traj.size(); ++i) {
        const double g = std::abs(run.traj.values()[i] - closed);
        if (g > 1e-9 && g < 1e-3) {
            xs.push_back(run.traj.nodes()[i]);
            ys.push_back(std::log(g));
        }
    }
    if (xs.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) {
            sx += xs[k]; sy += ys[k]; sxx += xs[k] * xs[k]; sxy += xs[k] * ys[k];
        }
        r.fit_rate = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return r;
}

double psi_coefficient_log(double eps, int n) {
    const double l1e = std::log1p(-eps);
    double s = n * std::numbers::ln2 - std::lgamma(n + 2.0);
    for (int k = 1; k <= n; ++k) s += std::log(-std::expm1(k * l1e));
    return s;
}

namespace {

// log of sum_n exp(c_n + (n + shift) ln y) with c_n from coef(n)
template <class C>
std::pair<double, int> log_series(double eps, double y, int N, C coef) {
    const double ly = std::log(y);
    const double l1e = std::log1p(-eps);
    std::vector<double> terms;
    double lc = 0.0;  // log a_{n+1} built incrementally
    double mx = -INFINITY;
    const int cap = N > 0 ? N : 200000;
    for (int n = 0; n <= cap; ++n) {
        if (n > 0) lc += std::numbers::ln2 + std::log(-std::expm1(n * l1e)) - std::log(n + 1.0);
        const double t = coef(n, lc, ly);
        terms.push_back(t);
        mx = std::max(mx, t);
        // past the peak and negligible
        if (N <= 0 && n > 2 && t < terms[n - 1] && t < mx + std::log(1e-17)) break;
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return {mx + std::log(s), static_cast<int>(terms.size())};
}

}  // namespace

PsiValue psi_series_eval(double eps, double y, int N) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (y < 0.0) throw DomainError("y must be nonnegative");
    if (y == 0.0) return {-INFINITY, 0.0, 1};
    auto [lv, n] = log_series(eps, y, N, [](int k, double lc, double ly) { return lc + (k + 1) * ly; });
    return {lv, lv < 700.0 ? std::exp(lv) : INFINITY, n};
}

double psi_series_derivative(double eps, double y, int N) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (y == 0.0) return 1.0;
    auto [lv, n] = log_series(eps, y, N, [](int k, double lc, double ly) {
        return lc + std::log(k + 1.0) + k * ly;
    });
    (void)n;
    return std::exp(lv);
}

LaplaceQuantities laplace_quantities(double eta) {
    if (!(eta > 0.5)) throw DomainError("eta must exceed 1/2");
    auto ratio = [](double t) { return t / (-std::expm1(-t)); };
    const double ts = bracket_root([&](double t) { return ratio(t) - 2.0 * eta; }, 1e-300, 2.0 * eta + 1.0);
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double W = GK::integrate(
        [&](double t) { return t == 0.0 ? std::log(2.0 * eta) : std::log(2.0 * eta / ratio(t)); }, 0.0, ts, 20,
        1e-14);
    const double om = -std::expm1(-ts);
    const double D = -(1.0 / (2.0 * ts)) * (ts * std::exp(-ts) / om - 1.0);
    const double U = eta * std::sqrt(std::numbers::pi) * std::sqrt(om) / (std::sqrt(D) * std::pow(ts, 1.5));
    return {eta, ts, W, D, U};
}

std::vector<PsiAsymRow> psi_asymptotics_check(double eta, const std::vector<double>& eps_list) {
    const auto L = laplace_quantities(eta);
    std::vector<PsiAsymRow> out;
    for (double e : eps_list) {
        const double lp = psi_series_eval(e, eta / e).log_value;
        const double pred = std::log(L.U) - 0.5 * std::log(e) + L.W / e;
        out.push_back({e, lp, pred, lp - pred});
    }
    return out;
}

CriticalDelta critical_delta(double eps, double eta_bar) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    const auto L = laplace_quantities(eta_bar);
    CriticalDelta c;
    c.log_delta = 0.5 * std::log(eps) - L.W / eps - std::log(L.U);
    c.delta = std::exp(c.log_delta);
    c.w_prime = L.t_star / eta_bar;
    const double h = 1e-5 * eta_bar;
    c.w_prime_fd = (laplace_quantities(eta_bar + h).W - laplace_quantities(eta_bar - h).W) / (2.0 * h);
    return c;
}

TailExponents tail_exponents(double eps, double eta_bar) {
    if (!(eps > 0.0 && eps < 0.5)) throw DomainError("eps must lie in (0, 0.5)");
    if (!(eta_bar > 0.0)) throw DomainError("eta_bar must be positive");
    TailExponents t;
    t.eps = eps;
    t.beta = -std::numbers::ln2 / std::log1p(-eps);
    t.alpha = t.beta - 1.0;
    t.K1_over_c1 = 4.0 * t.beta * (1.0 - eps) * (1.0 - eps);
    t.sigma_rate = std::numbers::ln2 / eta_bar;
    t.K0_over_c0 = 4.0 * std::numbers::ln2 / eta_bar;

    // c1 = 1: push K1, c1 out to the far field and back through the matching identities
    const double r = eta_bar / eps;
    const double c1 = 1.0, K1 = t.K1_over_c1 * c1;
    const double c0 = c1 * std::pow(r, t.beta), K0 = K1 * std::pow(r, t.alpha);
    const double K1b = K0 * std::pow(r, -t.alpha), c1b = c0 * std::pow(r, -t.beta);
    t.closure_error = std::abs(K1b - 4.0 * c1b * t.beta * (1.0 - eps) * (1.0 - eps)) / K1;
    t.leading_gap = std::abs((K0 / c0) / t.K0_over_c0 - 1.0);
    return t;
}

}  // namespace gelshoot
