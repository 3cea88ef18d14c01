#include "gelshoot/params.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gelshoot/errors.hpp"

namespace gelshoot {

ModelParams make_params(double gamma, double b) {
    if (!(gamma > 1.0)) throw DomainError("gamma must exceed 1");
    if (!(b > 0.0)) throw DomainError("b must be positive");
    ModelParams p{};
    p.gamma = gamma;
    p.b = b;
    p.a = 1.0 + gamma - 1.0 / b;
    p.sigma = std::exp2(gamma - 1.0 - 2.0 / b);
    p.q = std::exp2(-1.0 / b);
    p.d = std::log(2.0) / b;
    p.theta = std::exp2(gamma - 1.0);
    p.b0 = 2.0 / (gamma - 1.0);
    p.eps_delay = -std::expm1(-std::log(2.0) / b);
    p.phi_inf = 1.0 / (p.theta - 1.0);

    const double ulp = std::nextafter(std::log(2.0), 1.0) - std::log(2.0);
    if (std::abs(p.d * p.b - std::log(2.0)) > 4.0 * ulp)
        throw std::logic_error("d*b drifted from ln2");
    return p;
}

double explicit_solution_residual(const ModelParams& p, ExplicitSolution which,
                                  const std::vector<double>& grid) {
    double worst = 0.0;
    for (double x : grid) {
        if (!(x > 0.0)) throw DomainError("grid must be strictly positive");
        double r = 0.0;
        switch (which) {
            case ExplicitSolution::Phi0: {
                // only a solution when b == b0
                const double e = 1.0 / p.b0;
                const double phi = std::pow(x, e);
                const double half = std::pow(0.5 * x, e);
                const double lhs = p.b * e * phi;
                r = lhs - (phi - p.theta * half * half + phi * phi);
                break;
            }
            case ExplicitSolution::PhiInf: {
                const double c = p.phi_inf;
                r = 0.0 - (c - p.theta * c * c + c * c);
                break;
            }
            case ExplicitSolution::HInf: {
                // here the grid is in y
                const double y = x;
                const double h = p.phi_inf / y;
                const double hq = p.phi_inf / (p.q * y);
                const double dh = -p.phi_inf / (y * y);
                r = dh - (-p.sigma * hq * hq + h * h);
                break;
            }
        }
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

PowerSeries quadratic_pantograph_series(double A, double B, double q, double u0, int N) {
    if (N < 1) throw DomainError("series order must be at least 1");
    PowerSeries s;
    s.coefficients.assign(N + 1, 0.0);
    s.coefficients[0] = u0;
    double c = std::abs(B);
    double qn = 1.0;
    for (int n = 0; n < N; ++n) {
        double conv = 0.0;
        for (int k = 0; k <= n; ++k) conv += s.coefficients[k] * s.coefficients[n - k];
        const double f = A * qn + B;
        c = std::max(c, std::abs(f));
        s.coefficients[n + 1] = f * conv / (n + 1);
        qn *= q;
    }
    const double scale = c * std::abs(u0);
    s.validity_radius_estimate =
        scale > 0.0 ? 1.0 / scale : std::numeric_limits<double>::infinity();
    return s;
}

PowerSeries local_series(const ModelParams& p, int N) {
    return quadratic_pantograph_series(-p.sigma, 1.0, p.q, 1.0, N);
}

SeriesValue series_eval(const PowerSeries& s, double y) {
    const auto& a = s.coefficients;
    const double t = y - s.expansion_point;
    double v = 0.0;
    for (auto it = a.rbegin(); it != a.rend(); ++it) v = v * t + *it;
    const double last = std::abs(a.back() * std::pow(t, static_cast<double>(a.size() - 1)));
    return {v, last};
}

double series_derivative(const PowerSeries& s, double y) {
    const auto& a = s.coefficients;
    const double t = y - s.expansion_point;
    double v = 0.0;
    for (std::size_t n = a.size() - 1; n >= 1; --n) v = v * t + static_cast<double>(n) * a[n];
    return v;
}

double series_switch_point(const PowerSeries& s, double threshold) {
    const auto& a = s.coefficients;
    const double r = s.validity_radius_estimate;
    const double last = std::abs(a.back());
    if (last == 0.0) return std::isfinite(r) ? r : 1.0;
    const double y = std::pow(threshold / last, 1.0 / static_cast<double>(a.size() - 1));
    return std::min(y, r);
}

ProfileVariables convert(const ProfileVariables& in, ProfileVariables::Kind to,
                         const ModelParams& p) {
    using K = ProfileVariables::Kind;
    const std::size_t n = in.grid.size();
    if (in.values.size() != n) throw DomainError("grid and values differ in length");
    std::vector<double> x(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = in.grid[i], v = in.values[i];
        switch (in.kind) {
            case K::F: x[i] = g; phi[i] = std::pow(g, p.gamma + 1.0) * v; break;
            case K::Phi: x[i] = g; phi[i] = v; break;
            case K::H: x[i] = std::pow(g, p.b); phi[i] = g * v; break;
            case K::phi: x[i] = std::exp(p.b * g); phi[i] = v; break;
        }
    }
    ProfileVariables out{to, std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        switch (to) {
            case K::F:
                out.grid[i] = x[i];
                out.values[i] = phi[i] / std::pow(x[i], p.gamma + 1.0);
                break;
            case K::Phi: out.grid[i] = x[i]; out.values[i] = phi[i]; break;
            case K::H: {
                const double y = in.kind == K::H ? in.grid[i] : std::pow(x[i], 1.0 / p.b);
                out.grid[i] = y;
                out.values[i] = phi[i] / y;
                break;
            }
            case K::phi:
                out.grid[i] = in.kind == K::phi ? in.grid[i] : std::log(x[i]) / p.b;
                out.values[i] = phi[i];
                break;
        }
    }
    return out;
}

}  // namespace gelshoot
