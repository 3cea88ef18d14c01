#include "gelshoot/greens.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "gelshoot/delaycore.hpp"
#include "gelshoot/errors.hpp"

namespace gelshoot {

using cplx = std::complex<double>;

double q_coefficient(int n) {
    double c = 1.0;
    for (int j = 1; j <= n; ++j) c *= 4.0 / (std::exp2(j) - 1.0);
    return c;
}

QValue q_eval_bounded(double xi, int N) {
    if (xi < 0.0) throw DomainError("Q needs xi >= 0");
    if (N < 1) throw DomainError("Q needs at least one term");
    double s = 0.0, c = 1.0;
    for (int n = 0; n <= N; ++n) {
        if (n > 0) c *= 4.0 / (std::exp2(n) - 1.0);
        const double e = std::exp(-std::exp2(n) * xi);
        s += (n % 2 ? -c : c) * e;
    }
    const double next = c * 4.0 / (std::exp2(N + 1) - 1.0) * std::exp(-std::exp2(N + 1) * xi);
    return {s, next};
}

double q_eval(double xi, int N) { return q_eval_bounded(xi, N).value; }

double c0_moment() {
    // the n-th term integrates to (-1)^n / prod (2^j - 1)
    double s = 1.0, p = 1.0;
    for (int n = 1; n < 60; ++n) {
        p *= std::exp2(n) - 1.0;
        s += (n % 2 ? -1.0 : 1.0) / p;
    }
    return s;
}

double q_laplace_one() {
    double s = 0.5;
    for (int n = 1; n < 60; ++n) s += (n % 2 ? -1.0 : 1.0) * q_coefficient(n) / (1.0 + std::exp2(n));
    return s;
}

namespace {

template <class F>
double integrate_half_line(F f) {
    using GL = boost::math::quadrature::gauss<double, 20>;
    // Q has features down to the scale 2^-n near the origin: geometric panels
    double total = GL::integrate(f, 0.0, std::exp2(-14));
    for (int k = -14; k < 7; ++k) {
        const double a = std::exp2(k), b = std::exp2(k + 1), h = (b - a) / 4;
        for (int i = 0; i < 4; ++i) total += GL::integrate(f, a + i * h, a + (i + 1) * h);
    }
    return total;
}

}  // namespace

double c0_moment_quadrature() {
    return integrate_half_line([](double e) { return e * q_eval(e); });
}

double q_laplace_one_quadrature() {
    return integrate_half_line([](double e) { return std::exp(-e) * q_eval(e); });
}

double g_by_ode(double x, double xi, double tol) {
    if (!(xi > 0.0)) throw DomainError("source point must be positive");
    if (x < xi) return 0.0;
    if (x == xi) return 1.0;
    auto tr = integrate(DelayRHS::linear_g(), InitialSegment::jump(1.0), {xi, x}, tol);
    return tr.values().back();
}

namespace {

using GL = boost::math::quadrature::gauss<double, 20>;

// composite 20-point Gauss-Legendre on [a, b] split into k panels
template <class F>
cplx gl_panels(F f, double a, double b, int k) {
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    cplx total = 0.0;
    const double h = (b - a) / k;
    for (int p = 0; p < k; ++p) {
        const double c = a + (p + 0.5) * h, r = 0.5 * h;
        cplx s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * (f(c + r * x[i]) + f(c - r * x[i]));
        total += r * s;
    }
    return total;
}

// (1/2 pi i) int over Re z = L of e^(a z) / prod_{j=0}^n (z - 2^-j) dz
struct TermIntegral {
    double value;
    double ray;
};

TermIntegral contour_term(int n, double a, const GreensEval& cfg) {
    const double L = cfg.L_tilde, T = cfg.T_max;
    auto g = [&](cplx z) {
        cplx p = 1.0;
        for (int j = 0; j <= n; ++j) p *= z - std::exp2(-j);
        return std::exp(a * z) / p;
    };
    // upper half of the path; the lower half is its mirror image, so the total is Im(J)/pi
    const double per_side = std::max(1, cfg.nodes / 2);
    int panels = static_cast<int>(per_side / 20.0);
    panels = std::max(panels, static_cast<int>(std::ceil(std::abs(a) * T / std::numbers::pi)));
    // graded toward t = 0: t = T u^2
    auto seg = [&](double u) {
        const double t = T * u * u;
        return g(cplx(L, t)) * cplx(0.0, 1.0) * (2.0 * T * u);
    };
    const cplx Jseg = gl_panels(seg, 0.0, 1.0, panels);

    // beyond |t| = T rotate the path so that e^(a z) decays; nothing is truncated
    const cplx z0(L, T);
    const cplx dir = a == 0.0 ? cplx(0.0, 1.0)
                              : cplx(a > 0.0 ? -1.0 : 1.0, 1.0) / std::sqrt(2.0);
    const double S = a == 0.0 ? T : std::min(T, 4.0 / std::abs(a));
    auto ray = [&](double v) {
        if (v >= 1.0) return cplx(0.0);
        const double s = S * v / (1.0 - v);
        const double ds = S / ((1.0 - v) * (1.0 - v));
        return g(z0 + s * dir) * dir * ds;
    };
    const cplx Jray = gl_panels(ray, 0.0, 1.0, 32);
    return {(Jseg + Jray).imag() / std::numbers::pi, Jray.imag() / std::numbers::pi};
}

double term_coefficient(int n) {
    // (-1)^n 2^(2n) / 2^(n(n+1)/2)
    const double e = 2.0 * n - 0.5 * n * (n + 1);
    return (n % 2 ? -1.0 : 1.0) * std::exp2(e);
}

}  // namespace

double gtilde_term(int n, double x, double xi, const GreensEval& cfg) {
    if (n < 1) throw DomainError("G~ terms start at n = 1");
    return term_coefficient(n) * contour_term(n, x - std::exp2(n) * xi, cfg).value;
}

GtildeResult gtilde_quadrature(double x, double xi, const GreensEval& cfg) {
    if (!(cfg.L_tilde > 0.5 && cfg.L_tilde < 1.0)) throw DomainError("L_tilde must lie in (1/2, 1)");
    if (!(x > xi && xi > 0.0)) throw DomainError("G~ needs x > xi > 0");
    // crude size of the n-th summand: |coef| e^(aL) / prod |L - 2^-j|
    auto bound = [&](int n) {
        double p = 1.0;
        for (int j = 0; j <= n; ++j) p *= std::abs(cfg.L_tilde - std::exp2(-j));
        const double a = x - std::exp2(n) * xi;
        return std::abs(term_coefficient(n)) * std::exp(a * cfg.L_tilde) / p;
    };
    int N = cfg.N_terms;
    if (N <= 0) {
        N = 1;
        while (N < 40 && bound(N + 1) > 1e-16) ++N;
    }
    GtildeResult r;
    r.terms = N;
    for (int n = 1; n <= N; ++n) {
        const double a = x - std::exp2(n) * xi;
        const auto t = contour_term(n, a, cfg);
        r.value += term_coefficient(n) * t.value;
        r.ray_part += std::abs(term_coefficient(n) * t.ray);
    }
    r.series_remainder = bound(N + 1);
    r.truncation_warning = r.series_remainder > 1e-8;
    return r;
}

BoundsAudit bounds_audit(const std::vector<double>& xi_samples,
                         const std::vector<std::pair<double, double>>& gtilde_samples,
                         const std::vector<std::pair<double, double>>& lipschitz_samples,
                         const GreensEval& cfg) {
    BoundsAudit a;
    for (double xi : xi_samples) a.C0_Q = std::max(a.C0_Q, std::abs(q_eval(xi, cfg.N_q)) * std::exp(xi));

    // least squares slope of log|G~| against x - xi
    std::vector<std::pair<double, double>> pts;
    for (auto [x, xi] : gtilde_samples) {
        const double v = std::abs(gtilde_quadrature(x, xi, cfg).value);
        if (v > 1e-12) pts.push_back({x - xi, std::log(v)});
    }
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [u, v] : pts) {
            sx += u; sy += v; sxx += u * u; sxy += u * v;
        }
        const double m = static_cast<double>(pts.size());
        a.gtilde_rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        for (auto [u, v] : pts) a.gtilde_C0 = std::max(a.gtilde_C0, std::exp(v - a.gtilde_rate * u));
        if (a.gtilde_rate > cfg.L_tilde + 0.01) a.violations.push_back("G~ grows faster than e^(L x)");
    }
    for (auto [x1, x2] : lipschitz_samples) {
        if (x1 == x2) continue;
        const double d = std::abs(std::exp(x1) * q_eval(x1, cfg.N_q) - std::exp(x2) * q_eval(x2, cfg.N_q));
        a.lipschitz_C = std::max(a.lipschitz_C, d / std::abs(x1 - x2) / std::exp(-std::min(x1, x2)));
    }
    return a;
}

void write_q_table(std::ostream& os, const std::vector<double>& xi, int N) {
    os << "xi,Q,tail_bound\n" << std::setprecision(17);
    for (double x : xi) {
        const auto q = q_eval_bounded(x, N);
        os << x << ',' << q.value << ',' << q.tail_bound << '\n';
    }
}

}  // namespace gelshoot
