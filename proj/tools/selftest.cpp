#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>

#include "gelshoot/asymptotics.hpp"
#include "gelshoot/delaycore.hpp"
#include "gelshoot/errors.hpp"
#include "gelshoot/fixedpoint.hpp"
#include "gelshoot/gelsim.hpp"
#include "gelshoot/greens.hpp"
#include "gelshoot/params.hpp"
#include "gelshoot/shooting.hpp"
#include "gelshoot/stability.hpp"

using namespace gelshoot;

namespace {

struct Table {
    std::ostream& os;
    int failures = 0;
    void check(const std::string& name, bool ok, const std::string& detail = {}) {
        os << (ok ? "PASS " : "FAIL ") << name;
        if (!detail.empty()) os << "  (" << detail << ")";
        os << "\n";
        if (!ok) ++failures;
    }
    void near(const std::string& name, double got, double want, double tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "got %.10g, want %.10g +- %.2g", got, want, tol);
        check(name, std::abs(got - want) <= tol, buf);
    }
    template <class E, class F>
    void throws(const std::string& name, F f) {
        bool ok = false;
        try {
            f();
        } catch (const E&) {
            ok = true;
        } catch (...) {
        }
        check(name, ok);
    }
};

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

void params_table(Table& t) {
    const ModelParams p2 = make_params(2, 2);
    t.check("make_params(2,2): b0=2 sigma=1 theta=2 phi_inf=1",
            p2.b0 == 2 && std::abs(p2.sigma - 1) < 1e-15 && p2.theta == 2 && p2.phi_inf == 1);
    const ModelParams p4 = make_params(2, 4);
    t.near("make_params(2,4).sigma", p4.sigma, std::sqrt(2.0), 1e-12);
    t.near("make_params(2,4).q", p4.q, std::pow(2.0, -0.25), 1e-12);
    t.near("make_params(3,1.7).phi_inf", make_params(3, 1.7).phi_inf, 1.0 / 3.0, 1e-15);
    t.throws<DomainError>("make_params(1,2) rejected", [] { make_params(1, 2); });
    t.check("Phi0 residual at b0", explicit_solution_residual(p2, ExplicitSolution::Phi0, grid(0.1, 10, 200)) < 1e-12);
    t.check("PhiInf residual b=3.7",
            explicit_solution_residual(make_params(2, 3.7), ExplicitSolution::PhiInf, grid(0.1, 10, 200)) < 1e-12);
    t.check("HInf residual b=5",
            explicit_solution_residual(make_params(2, 5), ExplicitSolution::HInf, grid(0.1, 10, 200)) < 1e-12);
    const PowerSeries c = local_series(p2, 10);
    bool flat = c.coefficients[0] == 1.0;
    for (std::size_t n = 1; n < c.coefficients.size(); ++n) flat = flat && std::abs(c.coefficients[n]) < 1e-15;
    t.check("series collapses at b=b0", flat);
    const PowerSeries s4 = local_series(p4, 2);
    t.near("a1 at (2,4)", s4.coefficients[1], -0.4142136, 1e-7);
    t.near("a2 at (2,4)", s4.coefficients[2], 0.0783722, 1e-7);
    t.near("series_eval(0.1)", series_eval(s4, 0.1).value, 1 - 0.04142136 + 0.000783722, 1e-8);
    t.check("series_eval(0) = a0", series_eval(s4, 0.0).value == 1.0);
}

void delaycore_table(Table& t) {
    const DenseTrajectory h = integrate(DelayRHS::limit_h(0.0), InitialSegment::point(1.0), {0.0, 10.0}, 1e-10);
    double err = 0;
    for (double x : grid(0, 10, 1001)) err = std::max(err, std::abs(h.eval(x) - std::exp(-x)));
    t.check("limit-h eps=0 matches e^-x to 1e-8", err < 1e-8, "max err " + std::to_string(err));
    const DenseTrajectory fine = integrate(DelayRHS::limit_h(0.0), InitialSegment::point(1.0), {0.0, 10.0}, 1e-12);
    const auto& nd = fine.nodes();
    const bool mid = std::find(nd.begin(), nd.end(), 1.5) == nd.end();
    t.check("1.5 falls between nodes", mid);
    t.near("interpolated value at 1.5", fine.eval(1.5), std::exp(-1.5), 1e-9);
    t.check("node value returned exactly", h.eval(h.nodes()[3]) == h.values()[3]);
    const ModelParams p2 = make_params(2, 2);
    const DenseTrajectory c =
        integrate(DelayRHS::h_equation(p2), InitialSegment::series(local_series(p2), 0.5), {0.0, 20.0}, 1e-10);
    double dev = 0;
    for (double v : c.values()) dev = std::max(dev, std::abs(v - 1.0));
    t.check("H = 1 at b = b0", dev < 1e-12);
    const DenseTrajectory g = integrate(DelayRHS::linear_g(), InitialSegment::jump(1.0), {1.0, 2.0}, 1e-11);
    double gerr = 0;
    for (double x : grid(1, 2, 101)) gerr = std::max(gerr, std::abs(g.eval(x) - std::exp(x - 1.0)));
    t.check("linear G on [xi, 2xi] is e^(x-xi)", gerr < 1e-9);
    const ModelParams p4 = make_params(2, 4);
    const PowerSeries s4 = local_series(p4);
    const DenseTrajectory H4 = integrate(DelayRHS::h_equation(p4), InitialSegment::series(s4, series_switch_point(s4)),
                                         {0.0, 20.0}, 1e-10);
    t.check("monotonicity and bound (2,4)", monotonicity_and_bound_check(H4, p4).ok);
    const ModelParams p10 = make_params(2, 10);
    const PowerSeries s10 = local_series(p10);
    const DenseTrajectory H10 = integrate(DelayRHS::h_equation(p10),
                                          InitialSegment::series(s10, series_switch_point(s10)), {0.0, 2.0}, 1e-10);
    t.check("H(1) <= 1/sigma at (2,10)", H10.eval(1.0) <= 1.0 / p10.sigma + 1e-12);
}

void shooting_table(Table& t) {
    t.check("b=2.05 SignChange", classify(make_params(2, 2.05), 200).is_sign_change());
    const Classification c10 = classify(make_params(2, 10), 200);
    t.check("b=10 ConvergesToConstant", std::holds_alternative<ConvergesToConstant>(c10.outcome));
    t.check("b=2.3 Oscillating", std::holds_alternative<Oscillating>(classify(make_params(2, 2.3), 200).outcome));
    const auto rows = scan_b(2, {2.0}, 200);
    t.check("scan at b0 rejected", !rows[0].ok);
    t.check("gamma=3 b0+0.01 SignChange", classify(make_params(3, 1.01), 200).is_sign_change());
    const CriticalBracket br = bracket_bbar(2, 1e-3);
    t.check("bracket(2) inside (2, b*)", br.b_lo > 2.0 && br.b_hi < b_star(2) && br.width <= 1e-3);
    const PlateauReport pr = plateau_diagnostics(limit_h_run(0.05).traj, 0.05);
    bool within = pr.ratios.size() >= 2;
    for (double r : pr.ratios) within = within && std::abs(r - pr.predicted_ratio) <= 0.3 * pr.predicted_ratio;
    t.check("eps=0.05 plateau ratios within 30% of c0 eps", within);
    t.throws<NoPlateaus>("eps=0 has no plateaus", [] { plateau_diagnostics(limit_h_run(0.0).traj, 0.0); });
    t.check("eps=-0.02 changes sign", limit_h_run(-0.02).sign_change);
}

void stability_table(Table& t) {
    t.near("b*(2)", b_star(2), 2.5375, 1e-3);
    t.near("b*(30)", b_star(30), 3 * std::sqrt(3.0) * std::numbers::ln2 / std::numbers::pi, 1e-3);
    t.near("p(0.5)", p_ratio(0.5), b_star(2) / 2, 1e-12);
    t.near("p near 0", p_ratio(1e-6), 1.0, 1e-3);
    t.check("b=3 winding 0", winding_number(make_params(2, 3)).winding == 0);
    t.check("b=2.3 winds", winding_number(make_params(2, 2.3)).winding > 0);
    const double bs = b_star(2);
    t.check("winding switches across b*", winding_number(make_params(2, bs - 1e-4)).winding > 0 &&
                                              winding_number(make_params(2, bs + 1e-4)).winding == 0);
    Perturbation pe;
    pe.amplitude = 0.05;
    const DecayReport d3 = stability_empirical(make_params(2, 3), pe);
    t.check("b=3 perturbation decays below 1e-6", d3.decays && d3.final_dev < 1e-6);
    t.check("b=2.3 perturbation does not decay", !stability_empirical(make_params(2, 2.3), pe).decays);
    const DecayReport z = stability_empirical(make_params(2, 3), Perturbation{});
    t.check("zero perturbation stays at phi_inf", z.final_dev == 0.0);
}

void greens_table(Table& t) {
    t.near("Q(1)", q_eval(1.0), -0.0768006, 1e-6);
    t.check("|Q(0)| < 1e-5 at N=9", std::abs(q_eval(0.0, 9)) < 1e-5);
    t.near("c0 series", c0_moment(), 0.2887881, 1e-6);
    t.near("c0 quadrature", c0_moment_quadrature(), 0.2887881, 1e-6);
    for (auto [x, xi] : {std::pair{2.0, 1.0}, {3.0, 1.0}, {5.0, 2.0}}) {
        const double g = g_by_ode(x, xi);
        const double alt = std::exp(x) * q_eval(xi) + gtilde_quadrature(x, xi).value;
        t.check("three routes at (" + std::to_string(x) + "," + std::to_string(xi) + ")",
                std::abs(g - alt) <= 1e-4 * std::abs(g));
    }
    double e1 = 0, e2 = 0;
    for (double x : grid(1.05, 1.95, 10)) e1 = std::max(e1, std::abs(gtilde_term(1, x, 1.0) - 4 * std::exp(x - 2.0)));
    for (double x : grid(2.1, 4.0, 10)) e2 = std::max(e2, std::abs(gtilde_term(1, x, 1.0) - 4 * std::exp(x / 2 - 1.0)));
    t.check("n=1 term 4 e^(x-2 xi) on (xi, 2 xi)", e1 < 1e-8);
    t.check("n=1 term 4 e^(x/2-xi) beyond 2 xi", e2 < 1e-8);
}

void fixedpoint_table(Table& t) {
    const FixedPointState z = picard_solve(0, 0);
    t.check("(0,0) gives W = 0", z.W.cwiseAbs().maxCoeff() == 0.0 && z.iterations <= 1);
    const FixedPointState s = picard_solve(0.01, 0.01);
    t.check("(0.01,0.01) converges", s.sup_diff_history.back() < 1e-10);
    t.check("(0.01,0.01) envelope finite for delta < 1/2", std::isfinite(envelope_constant(s, 0.45)));
    const double h = 1e-4;
    t.near("dF/deps", (f_eval(picard_solve(h, 0)) - f_eval(picard_solve(-h, 0))) / (2 * h), 0.288788, 1e-4);
    t.near("dF/deta", (f_eval(picard_solve(0, h)) - f_eval(picard_solve(0, -h))) / (2 * h), -0.060562, 1e-4);
    const EpsOfEta e = eps_of_eta(0.01);
    t.check("eps(0.01) ~ 0.0021 with |F| < 1e-8", std::abs(e.eps - 0.0021) < 2e-4 && std::abs(e.state.F_value) < 1e-8);
    t.check("eps(0) = 0", eps_of_eta(0.0).eps == 0.0);
    const BbarResult b = bbar_of_gamma(13);
    t.near("bbar(13)", b.bbar, 1.0003, 2e-4);
    t.near("eta(13) close to 2^-10", b.eta, std::ldexp(1.0, -10), 0.01 * std::ldexp(1.0, -10));
}

void asymptotics_table(Table& t) {
    const double a = alpha_root(std::numbers::ln2);
    t.check("alpha(ln2) > 2 with residual < 1e-12", a > 2 && std::abs(alpha_residual(std::numbers::ln2, a)) < 1e-12);
    t.check("alpha(1) residual < 1e-12", std::abs(alpha_residual(1.0, alpha_root(1.0))) < 1e-12);
    const Gamma1Profile flat = gamma1_series(std::numbers::ln2, 0.0, 10);
    bool one = flat.coefficients[0] == 1.0;
    for (std::size_t n = 1; n < flat.coefficients.size(); ++n) one = one && flat.coefficients[n] == 0.0;
    t.check("a1 = 0 gives Phi = 1", one);
    const Gamma1Run run = gamma1_profile(std::numbers::ln2, -1.0, 20.0, 1e-13);
    t.check("integrated constant vanishes at b = ln2", std::abs(gamma1_integrated_constant(run, 20.0)) < 1e-9);
    const double lim = (1 - std::numbers::ln2) / std::numbers::ln2;
    for (double a1 : {-0.5, -1.0, -2.0})
        t.near("b=1 limit a1=" + std::to_string(a1), gamma1_b1_limit(a1).limit, lim, 1e-6);
    const LaplaceQuantities q = laplace_quantities(1.0);
    t.near("t*(1)", q.t_star, 1.59362, 1e-5);
    t.near("D(1)", q.D, 0.186241, 1e-5);
    t.near("W(1)", q.W, 0.525, 0.002);
    for (double eta : {1.0, 0.75}) {
        const auto rows = psi_asymptotics_check(eta, {0.1, 0.05, 0.02});
        t.check("|r| decreasing at eta=" + std::to_string(eta),
                std::abs(rows[1].r) < std::abs(rows[0].r) && std::abs(rows[2].r) < std::abs(rows[1].r));
    }
    const CriticalDelta cd = critical_delta(0.05, 1.0);
    t.near("delta(0.05, 1)", cd.delta, std::sqrt(0.05) * std::exp(-q.W / 0.05) / q.U, 1e-12 * cd.delta + 1e-300);
    t.near("W'(1) identity against finite differences", cd.w_prime, cd.w_prime_fd, 1e-6);
    const TailExponents te = tail_exponents(0.1, 1.0);
    const double beta = -std::numbers::ln2 / std::log1p(-0.1);
    t.near("beta(0.1)", te.beta, beta, 1e-12);
    t.near("alpha(0.1)", te.alpha, beta - 1, 1e-12);
    t.near("eps beta -> ln2", tail_exponents(1e-6, 1.0).beta * 1e-6, std::numbers::ln2, 1e-6);
}

void gelsim_table(Table& t) {
    const DyadicChain one = make_chain(1.3, 2, 0, [](double) { return 0.7; });
    const double want = 0.7 / (1 + std::pow(1.3, 3) * 0.7 * 5);
    t.near("single-site Riccati", evolve_chain(one, 5, 1e-12).f[0] / want, 1.0, 1e-10);
    const double g = 2, a0 = (g + 3) / 2;
    const DyadicChain st = make_chain(1.0, g, 12, [&](double x) { return std::pow(x, -a0); }, std::pow(0.5, -a0));
    t.check("stationary power law has zero RHS", (chain_rhs(st, st.f).array() / st.f.array()).abs().maxCoeff() < 1e-10);
    auto e = [](double x) { return std::exp(-x); };
    const DyadicChain c1 = make_chain(1.0, 2, 12, e), c2 = make_chain(1.5, 2, 12, e);
    const ChainRun j = evolve_chains({c1, c2}, 3.0, 1e-9);
    t.check("joint and separate evolution agree bitwise",
            replay_chain(c1, j.steps).f == j.chains[0].f && replay_chain(c2, j.steps).f == j.chains[1].f);
    t.check("positivity", j.min_value >= -1e-12);
    GridFunction F;
    const int m = 16;
    for (int i = 0; i <= 10 * m; ++i) {
        const double x = 0.1 * std::exp2(static_cast<double>(i) / m);
        F.x.push_back(x);
        F.F.push_back(std::pow(x, -a0));
        F.dF.push_back(-a0 * std::pow(x, -a0 - 1));
    }
    t.check("stationary profile residual", selfsimilar_residual(F, make_params(g, 2 / (g - 1))) < 1e-10);
    for (auto& v : F.F) v = 0.0;
    for (auto& v : F.dF) v = 0.0;
    t.check("zero profile residual", selfsimilar_residual(F, make_params(2, 3)) == 0.0);
    ScanConfig sc;
    sc.chains = 16;
    const SimDiagnostics d2 = gelation_scan(2.0, sc);
    t.check("gamma=2 gels with finite estimates", d2.gels && std::isfinite(d2.T_hat));
    bool dec = d2.collapse.size() >= 3;
    for (std::size_t i = 1; i < d2.collapse.size(); ++i) dec = dec && d2.collapse[i] < d2.collapse[i - 1];
    t.check("collapse improves toward T", dec);
    t.check("gamma=0.5 does not gel", !gelation_scan(0.5, sc).gels);
}

}  // namespace

int run_selftest(const std::string& sub, std::ostream& os) {
    static const std::map<std::string, std::function<void(Table&)>> by_cmd = {
        {"params", params_table},        {"profile", delaycore_table},    {"classify", shooting_table},
        {"scan-b", shooting_table},      {"bracket-bbar", shooting_table}, {"fig3", shooting_table},
        {"b-star", stability_table},     {"winding", stability_table},    {"stability-scan", stability_table},
        {"fig2", stability_table},       {"greens-q", greens_table},      {"greens-verify", greens_table},
        {"fixedpoint", fixedpoint_table}, {"eps-of-eta", fixedpoint_table}, {"bbar", fixedpoint_table},
        {"gamma1", asymptotics_table},   {"psi-asym", asymptotics_table}, {"laplace", asymptotics_table},
        {"tails", asymptotics_table},    {"simulate", gelsim_table},
    };
    Table t{os};
    const auto it = by_cmd.find(sub);
    if (it == by_cmd.end()) {
        os << "no selftest for " << sub << "\n";
        return 1;
    }
    try {
        it->second(t);
    } catch (const std::exception& e) {
        t.check(std::string("unexpected exception: ") + e.what(), false);
    }
    os << (t.failures == 0 ? "all passed" : std::to_string(t.failures) + " failed") << "\n";
    return t.failures;
}
