#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "gelshoot/asymptotics.hpp"
#include "gelshoot/delaycore.hpp"
#include "gelshoot/errors.hpp"
#include "gelshoot/fixedpoint.hpp"
#include "gelshoot/gelsim.hpp"
#include "gelshoot/greens.hpp"
#include "gelshoot/io.hpp"
#include "gelshoot/params.hpp"
#include "gelshoot/shooting.hpp"
#include "gelshoot/stability.hpp"
#include "selftest.hpp"

#ifndef GELSHOOT_VERSION
#define GELSHOOT_VERSION "dev"
#endif

using namespace gelshoot;
using nlohmann::ordered_json;

namespace {

struct Opts {
    double gamma = 2.0;
    double b = NAN;
    double tol = NAN;
    double y_max = 500.0;
    std::string grid;
    std::string out;
    int jobs = 0;
    std::string format;
    int digits = 5;

    double eps = NAN;
    double eta = NAN;
    std::string eps_list = "0.1,0.05,0.02";
    std::string b_list = "3,2.3,1";
    double xi = NAN;
    double x = NAN;
    double a1 = -1.0;
    double x_end = 200.0;
    double tol_b = 1e-3;
    double amplitude = 1e-3;
    int samples = 20000;
    bool curve = false;

    int chains = 64;
    int levels = 24;
    double horizon = 10.0;
    std::string init = "mono";
    std::string times;
};

struct Grid {
    double lo, hi;
    int n;
    bool log = false;
    std::vector<double> points() const {
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) {
            const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
            v[i] = log ? lo * std::pow(hi / lo, s) : lo + (hi - lo) * s;
        }
        return v;
    }
};

Grid parse_grid(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3 && !(parts.size() == 4 && parts[3] == "log"))
        throw DomainError("grid must be lo:hi:n or lo:hi:n:log, got '" + s + "'");
    Grid g{};
    try {
        g.lo = std::stod(parts[0]);
        g.hi = std::stod(parts[1]);
        g.n = std::stoi(parts[2]);
    } catch (const std::exception&) {
        throw DomainError("bad number in grid '" + s + "'");
    }
    g.log = parts.size() == 4;
    if (g.n < 1 || !(g.hi >= g.lo) || (g.log && !(g.lo > 0.0)))
        throw DomainError("grid '" + s + "' is empty or reversed");
    return g;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) {
        try {
            v.push_back(std::stod(p));
        } catch (const std::exception&) {
            throw DomainError("bad number '" + p + "' in list");
        }
    }
    return v;
}

double need(double v, const char* name) {
    if (std::isnan(v)) throw DomainError(std::string("--") + name + " is required");
    return v;
}

class Output {
public:
    Output(const Opts& o, std::string cmd, std::string fmt) : cmd_(std::move(cmd)), fmt_(std::move(fmt)) {
        if (!o.out.empty()) {
            file_.open(o.out);
            if (!file_) throw DomainError("cannot open " + o.out);
        }
    }
    std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    bool json() const { return fmt_ == "json"; }

    void header(const ordered_json& config) {
        if (json()) return;
        os() << "# gelshoot " << GELSHOOT_VERSION << " " << cmd_ << "\n# config " << config.dump() << "\n";
    }
    void emit(ordered_json body, const ordered_json& config) {
        ordered_json j;
        j["provenance"] = {{"tool", "gelshoot"}, {"version", GELSHOOT_VERSION}, {"command", cmd_},
                           {"config", config}};
        for (auto& [k, v] : body.items()) j[k] = v;
        os() << j.dump(2) << "\n";
    }

private:
    std::string cmd_, fmt_;
    std::ofstream file_;
};

ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

// unset optional values are echoed as "default"
ordered_json opt(double v) { return std::isnan(v) ? ordered_json("default") : num(v); }

ordered_json config_json(const Opts& o, const std::vector<std::string>& keys) {
    ordered_json c;
    for (const auto& k : keys) {
        if (k == "gamma") c[k] = o.gamma;
        else if (k == "b") c[k] = opt(o.b);
        else if (k == "tol") c[k] = opt(o.tol);
        else if (k == "y-max") c[k] = o.y_max;
        else if (k == "grid") c[k] = o.grid;
        else if (k == "jobs") c[k] = o.jobs;
        else if (k == "digits") c[k] = o.digits;
        else if (k == "eps") c[k] = opt(o.eps);
        else if (k == "eta") c[k] = opt(o.eta);
        else if (k == "eps-list") c[k] = o.eps_list;
        else if (k == "b-list") c[k] = o.b_list;
        else if (k == "xi") c[k] = opt(o.xi);
        else if (k == "x") c[k] = opt(o.x);
        else if (k == "a1") c[k] = o.a1;
        else if (k == "x-end") c[k] = o.x_end;
        else if (k == "tol-b") c[k] = o.tol_b;
        else if (k == "amplitude") c[k] = o.amplitude;
        else if (k == "samples") c[k] = o.samples;
        else if (k == "chains") c[k] = o.chains;
        else if (k == "levels") c[k] = o.levels;
        else if (k == "horizon") c[k] = o.horizon;
        else if (k == "init") c[k] = o.init;
        else if (k == "times") c[k] = o.times;
    }
    return c;
}

ordered_json params_json(const ModelParams& p) { return ordered_json::parse(to_json(p).dump()); }

double tol_or(const Opts& o, double dflt) { return std::isnan(o.tol) ? dflt : o.tol; }

// subcommands; each returns the exit code

int cmd_params(const Opts& o, Output& out) {
    const ModelParams p = make_params(o.gamma, need(o.b, "b"));
    const auto cfg = config_json(o, {"gamma", "b"});
    if (out.json()) {
        out.emit({{"params", params_json(p)}}, cfg);
    } else {
        out.header(cfg);
        out.os() << "key,value\n";
        const ordered_json j = params_json(p);
        for (auto& [k, v] : j.items()) out.os() << k << "," << csv_num(v.get<double>()) << "\n";
    }
    return 0;
}

int cmd_profile(const Opts& o, Output& out) {
    const ModelParams p = make_params(o.gamma, need(o.b, "b"));
    const double tol = tol_or(o, 1e-10);
    const PowerSeries s = local_series(p);
    const double sw = series_switch_point(s);
    IntegrateOptions io;
    io.tol = tol;
    io.stop = [](double, double u) { return u < -1e-9; };
    const DenseTrajectory tr =
        integrate(DelayRHS::h_equation(p), InitialSegment::series(s, sw), {0.0, o.y_max}, io);
    const auto cfg = config_json(o, {"gamma", "b", "tol", "y-max"});
    if (out.json()) {
        const auto mono = monotonicity_and_bound_check(tr, p);
        out.emit({{"params", params_json(p)},
                  {"y_end", tr.end()},
                  {"H_end", tr.values().back()},
                  {"stopped_early", tr.stopped_early()},
                  {"rejected_steps", tr.rejected_steps()},
                  {"monotone_and_bounded", mono.ok}},
                 cfg);
    } else {
        out.header(cfg);
        out.os() << "y,H,x,Phi\n";
        // series part below the first stepped node
        const int ns = 32;
        for (int i = 0; i < ns; ++i) {
            const double y = tr.start() * i / ns;
            const double H = series_eval(s, y).value;
            write_csv_row(out.os(), {y, H, std::pow(y, p.b), y * H});
        }
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const double y = tr.nodes()[i], H = tr.values()[i];
            write_csv_row(out.os(), {y, H, std::pow(y, p.b), y * H});
        }
    }
    return 0;
}

int cmd_classify(const Opts& o, Output& out) {
    const ModelParams p = make_params(o.gamma, need(o.b, "b"));
    ClassifyTols t;
    if (!std::isnan(o.tol)) t.integ_tol = o.tol;
    const Classification c = classify(p, o.y_max, t);
    ordered_json body = {{"class", c.tag()}};
    const ordered_json ev = ordered_json::parse(c.evidence_json());
    for (auto& [k, v] : ev.items())
        if (k != "class") body[k] = v;
    out.emit(body, config_json(o, {"gamma", "b", "tol", "y-max"}));
    return 0;
}

int cmd_scan_b(const Opts& o, Output& out) {
    if (o.grid.empty()) throw DomainError("--grid is required");
    ClassifyTols t;
    if (!std::isnan(o.tol)) t.integ_tol = o.tol;
    const auto rows = scan_b(o.gamma, parse_grid(o.grid).points(), o.y_max, t, o.jobs);
    const auto cfg = config_json(o, {"gamma", "grid", "tol", "y-max", "jobs"});
    if (out.json()) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows)
            arr.push_back({{"b", r.b}, {"ok", r.ok}, {"class", r.tag}, {"y_event", num(r.y_event)}});
        out.emit({{"rows", arr}}, cfg);
    } else {
        out.header(cfg);
        out.os() << "b,class,y_event,ok\n";
        for (const auto& r : rows)
            out.os() << csv_num(r.b) << "," << r.tag << "," << csv_num(r.y_event) << "," << (r.ok ? 1 : 0) << "\n";
    }
    return 0;
}

int cmd_bracket(const Opts& o, Output& out) {
    const CriticalBracket br = bracket_bbar(o.gamma, o.tol_b, o.y_max);
    out.emit({{"b_lo", br.b_lo},
              {"b_hi", br.b_hi},
              {"width", br.width},
              {"class_lo", br.class_lo},
              {"class_hi", br.class_hi},
              {"evaluations", br.evaluations}},
             config_json(o, {"gamma", "tol-b", "y-max"}));
    return 0;
}

int cmd_b_star(const Opts& o, Output& out) {
    const double bs = b_star(o.gamma);
    const auto cfg = config_json(o, {"gamma", "digits"});
    if (out.json()) {
        out.emit({{"b_star", bs}, {"b0", 2.0 / (o.gamma - 1.0)}}, cfg);
    } else {
        out.os() << std::setprecision(o.digits) << bs << "\n";
    }
    return 0;
}

int cmd_winding(const Opts& o, Output& out) {
    const ModelParams p = make_params(o.gamma, need(o.b, "b"));
    const CharProblem cp = char_problem(p);
    const WindingResult w = winding_number(p, 0.0, o.samples, o.curve);
    const auto cfg = config_json(o, {"gamma", "b", "samples"});
    if (o.curve) {
        out.header(cfg);
        write_curve_csv(out.os(), w);
        return 0;
    }
    out.emit({{"winding", w.winding},
              {"R", w.R},
              {"min_distance", w.min_distance},
              {"d_tilde", cp.d_tilde},
              {"d_star", cp.d_star},
              {"sigma_tilde", cp.sigma_tilde}},
             cfg);
    return 0;
}

int cmd_stability_scan(const Opts& o, Output& out) {
    std::vector<double> bs;
    if (o.grid.empty()) {
        const double s = b_star(o.gamma);
        for (int i = 0; i < 8; ++i) bs.push_back(s * std::exp2(-1.0 + 2.0 * i / 7.0));
    } else {
        bs = parse_grid(o.grid).points();
    }
    struct Row {
        double b;
        int winding;
        CharProblem cp;
        DecayReport dr;
    };
    std::vector<Row> rows(bs.size());
    const double tol = tol_or(o, 1e-10);
    std::vector<std::thread> pool;
    const int nt = std::max(1, o.jobs > 0 ? o.jobs : static_cast<int>(std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < bs.size(); i = next++) {
                try {
                    const ModelParams p = make_params(o.gamma, bs[i]);
                    Perturbation pert;
                    pert.amplitude = o.amplitude * p.phi_inf;
                    rows[i] = {bs[i], winding_number(p).winding, char_problem(p),
                               stability_empirical(p, pert, 200.0, tol)};
                } catch (...) {
                    std::lock_guard<std::mutex> g(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);

    const auto cfg = config_json(o, {"gamma", "grid", "tol", "amplitude", "jobs"});
    if (out.json()) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows)
            arr.push_back({{"b", r.b},
                           {"winding", r.winding},
                           {"d_tilde", r.cp.d_tilde},
                           {"d_star", r.cp.d_star},
                           {"decays", r.dr.decays},
                           {"rate", r.dr.rate}});
        out.emit({{"b_star", b_star(o.gamma)}, {"rows", arr}}, cfg);
    } else {
        out.header(cfg);
        out.os() << "gamma,b,winding,d_tilde,d_star,decays,rate\n";
        for (const auto& r : rows)
            out.os() << csv_num(o.gamma) << "," << csv_num(r.b) << "," << r.winding << "," << csv_num(r.cp.d_tilde)
                     << "," << csv_num(r.cp.d_star) << "," << (r.dr.decays ? 1 : 0) << "," << csv_num(r.dr.rate)
                     << "\n";
    }
    return 0;
}

int cmd_greens_q(const Opts& o, Output& out) {
    const std::vector<double> xs = parse_grid(o.grid.empty() ? "0:10:101" : o.grid).points();
    const auto cfg = config_json(o, {"grid"});
    if (out.json()) {
        ordered_json arr = ordered_json::array();
        for (double x : xs) {
            const QValue q = q_eval_bounded(x);
            arr.push_back({{"xi", x}, {"Q", q.value}, {"tail_bound", q.tail_bound}});
        }
        out.emit({{"c0_series", c0_moment()},
                  {"c0_quadrature", c0_moment_quadrature()},
                  {"laplace_one_series", q_laplace_one()},
                  {"laplace_one_quadrature", q_laplace_one_quadrature()},
                  {"table", arr}},
                 cfg);
    } else {
        out.header(cfg);
        write_q_table(out.os(), xs);
    }
    return 0;
}

int cmd_greens_verify(const Opts& o, Output& out) {
    std::vector<std::pair<double, double>> pts = {{2, 1}, {3, 1}, {5, 2}};
    if (!std::isnan(o.x) || !std::isnan(o.xi)) pts = {{need(o.x, "x"), need(o.xi, "xi")}};
    const auto cfg = config_json(o, {"x", "xi", "tol"});
    const double tol = tol_or(o, 1e-11);
    ordered_json arr = ordered_json::array();
    if (!out.json()) {
        out.header(cfg);
        out.os() << "x,xi,g_ode,q_route,gtilde,rel_diff\n";
    }
    for (const auto& [x, xi] : pts) {
        const double g = g_by_ode(x, xi, tol);
        const double eq = std::exp(x) * q_eval(xi);
        const GtildeResult gt = gtilde_quadrature(x, xi);
        const double rel = std::abs(g - (eq + gt.value)) / std::abs(g);
        if (out.json())
            arr.push_back({{"x", x}, {"xi", xi}, {"g_ode", g}, {"q_route", eq}, {"gtilde", gt.value}, {"rel_diff", rel}});
        else
            write_csv_row(out.os(), {x, xi, g, eq, gt.value, rel});
    }
    if (out.json()) out.emit({{"routes", arr}}, cfg);
    return 0;
}

int cmd_fixedpoint(const Opts& o, Output& out) {
    FixedPointConfig fc;
    if (!std::isnan(o.tol)) fc.tol = o.tol;
    const FixedPointState s = picard_solve(need(o.eps, "eps"), need(o.eta, "eta"), fc);
    const auto cfg = config_json(o, {"eps", "eta", "tol"});
    if (out.json()) {
        std::ostringstream ss;
        write_state_json(ss, s);
        out.emit({{"state", ordered_json::parse(ss.str())}}, cfg);
    } else {
        out.header(cfg);
        write_profile_csv(out.os(), s);
    }
    return 0;
}

int cmd_eps_of_eta(const Opts& o, Output& out) {
    std::vector<double> etas;
    if (!o.grid.empty()) etas = parse_grid(o.grid).points();
    else etas = {need(o.eta, "eta")};
    const double tol = tol_or(o, 1e-10);
    const auto cfg = config_json(o, {"eta", "grid", "tol"});
    ordered_json arr = ordered_json::array();
    if (!out.json()) {
        out.header(cfg);
        out.os() << "eta,eps,slope,evaluations\n";
    }
    for (double eta : etas) {
        const EpsOfEta r = eps_of_eta(eta, tol);
        if (out.json())
            arr.push_back({{"eta", eta}, {"eps", r.eps}, {"slope", r.eps / eta}, {"evaluations", r.evaluations}});
        else
            out.os() << csv_num(eta) << "," << csv_num(r.eps) << "," << csv_num(r.eps / eta) << "," << r.evaluations
                     << "\n";
    }
    if (out.json()) out.emit({{"rows", arr}}, cfg);
    return 0;
}

int cmd_bbar(const Opts& o, Output& out) {
    const BbarResult r = bbar_of_gamma(o.gamma);
    out.emit({{"bbar", r.bbar},
              {"eta", r.eta},
              {"eps", r.eps},
              {"iterations", r.iterations},
              {"min_h", r.min_h},
              {"tail_delta", r.tail_delta},
              {"W_delta_fit", r.state.delta_fit},
              {"W_M_fit", r.state.M_fit}},
             config_json(o, {"gamma"}));
    return 0;
}

int cmd_gamma1(const Opts& o, Output& out) {
    const double b = std::isnan(o.b) ? std::numbers::ln2 : o.b;
    const double tol = tol_or(o, 1e-12);
    const auto cfg = config_json(o, {"b", "a1", "x-end", "tol"});
    if (b == 1.0) {
        const Gamma1Limit l = gamma1_b1_limit(o.a1, std::max(o.x_end, 1e12), tol);
        out.emit({{"limit", l.limit},
                  {"closed_form", (1.0 - std::numbers::ln2) / std::numbers::ln2},
                  {"fit_rate", l.fit_rate},
                  {"x_end", l.x_end}},
                 cfg);
        return 0;
    }
    const Gamma1Run run = gamma1_profile(b, o.a1, o.x_end, tol);
    if (out.json()) {
        out.emit({{"alpha", run.series.alpha},
                  {"alpha_residual", alpha_residual(b, run.series.alpha)},
                  {"x_switch", run.x_switch},
                  {"integrated_constant", gamma1_integrated_constant(run, o.x_end)},
                  {"Phi_end", run.traj.values().back()}},
                 cfg);
    } else {
        out.header(cfg);
        out.os() << "x,Phi\n";
        for (std::size_t i = 0; i < run.traj.size(); ++i)
            write_csv_row(out.os(), {std::exp(run.traj.nodes()[i]), run.traj.values()[i]});
    }
    return 0;
}

int cmd_psi_asym(const Opts& o, Output& out) {
    const double eta = std::isnan(o.eta) ? 1.0 : o.eta;
    const auto rows = psi_asymptotics_check(eta, parse_list(o.eps_list));
    const auto cfg = config_json(o, {"eta", "eps-list"});
    if (out.json()) {
        ordered_json arr = ordered_json::array();
        for (const auto& r : rows)
            arr.push_back({{"eps", r.eps}, {"log_psi", r.log_psi}, {"log_pred", r.log_pred}, {"r", r.r}});
        out.emit({{"eta", eta}, {"rows", arr}}, cfg);
    } else {
        out.header(cfg);
        out.os() << "eps,log_psi,log_pred,r\n";
        for (const auto& r : rows) write_csv_row(out.os(), {r.eps, r.log_psi, r.log_pred, r.r});
    }
    return 0;
}

int cmd_laplace(const Opts& o, Output& out) {
    std::vector<double> etas;
    if (!o.grid.empty()) etas = parse_grid(o.grid).points();
    else etas = {std::isnan(o.eta) ? 1.0 : o.eta};
    const auto cfg = config_json(o, {"eta", "grid"});
    ordered_json arr = ordered_json::array();
    if (!out.json()) {
        out.header(cfg);
        out.os() << "eta,t_star,W,D,U\n";
    }
    for (double eta : etas) {
        const LaplaceQuantities q = laplace_quantities(eta);
        if (out.json())
            arr.push_back({{"eta", q.eta}, {"t_star", q.t_star}, {"W", q.W}, {"D", q.D}, {"U", q.U}});
        else
            write_csv_row(out.os(), {q.eta, q.t_star, q.W, q.D, q.U});
    }
    if (out.json()) out.emit({{"rows", arr}}, cfg);
    return 0;
}

int cmd_tails(const Opts& o, Output& out) {
    const double eps = need(o.eps, "eps");
    const double eta = std::isnan(o.eta) ? 1.0 : o.eta;
    const TailExponents t = tail_exponents(eps, eta);
    const CriticalDelta cd = critical_delta(eps, eta);
    out.emit({{"eps", t.eps},
              {"beta", t.beta},
              {"alpha", t.alpha},
              {"K1_over_c1", t.K1_over_c1},
              {"sigma_rate", t.sigma_rate},
              {"K0_over_c0", t.K0_over_c0},
              {"closure_error", t.closure_error},
              {"leading_gap", t.leading_gap},
              {"log_delta", cd.log_delta},
              {"w_prime", cd.w_prime},
              {"w_prime_fd", cd.w_prime_fd}},
             config_json(o, {"eps", "eta"}));
    return 0;
}

int cmd_simulate(const Opts& o, Output& out) {
    ScanConfig sc;
    sc.chains = o.chains;
    sc.K = o.levels;
    sc.horizon = o.horizon;
    sc.jobs = o.jobs;
    sc.init = InitDescriptor::parse(o.init);
    if (!std::isnan(o.tol)) sc.tol = o.tol;
    if (!std::isnan(o.b)) sc.b = o.b;
    const auto cfg = config_json(o, {"gamma", "b", "chains", "levels", "horizon", "init", "tol", "times", "jobs"});
    if (out.json()) {
        const SimDiagnostics d = gelation_scan(o.gamma, sc);
        ordered_json chains = ordered_json::array();
        for (const auto& e : d.per_chain)
            chains.push_back({{"xi0", e.xi0}, {"gels", e.gels}, {"T_hat", e.T_hat}, {"T_err", e.T_err},
                              {"ratio", e.ratio}, {"b_fit", e.b_fit}});
        out.emit({{"gels", d.gels},
                  {"T_hat", d.T_hat},
                  {"b_fit", d.b_fit},
                  {"collapse", d.collapse},
                  {"mass_times", d.mass_times},
                  {"mass", d.mass},
                  {"chains", chains}},
                 cfg);
        return 0;
    }
    // CSV: raw snapshots (t, xi, f) of every chain at the requested times
    std::vector<double> times = o.times.empty() ? Grid{0.0, o.horizon, 5}.points() : parse_list(o.times);
    std::vector<DyadicChain> chains;
    for (int j = 0; j < o.chains; ++j)
        chains.push_back(make_chain(std::exp2(static_cast<double>(j) / o.chains), o.gamma, o.levels, sc.init));
    out.header(cfg);
    out.os() << "t,xi,f\n";
    for (double t : times) {
        for (auto& c : chains)
            if (t > c.t) c = evolve_chain(c, t, sc.tol);
        for (const auto& c : chains)
            for (int k = 0; k < c.levels(); ++k) write_csv_row(out.os(), {c.t, c.xi(k), c.f[k]});
    }
    return 0;
}

int cmd_fig2(const Opts& o, Output& out) {
    const auto cfg = config_json(o, {"gamma", "b-list", "samples"});
    out.header(cfg);
    out.os() << "panel,b,d_tilde,winding,t,re,im\n";
    int panel = 0;
    for (double b : parse_list(o.b_list)) {
        const ModelParams p = make_params(o.gamma, b);
        const WindingResult w = winding_number(p, 0.0, o.samples, true);
        const double dt = char_problem(p).d_tilde;
        const std::size_t n = w.curve.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double t = -w.R + 2.0 * w.R * static_cast<double>(i) / static_cast<double>(n - 1);
            out.os() << panel << "," << csv_num(b) << "," << csv_num(dt) << "," << w.winding << "," << csv_num(t)
                     << "," << csv_num(w.curve[i].real()) << "," << csv_num(w.curve[i].imag()) << "\n";
        }
        ++panel;
    }
    return 0;
}

int cmd_fig3(const Opts& o) {
    const ModelParams p = make_params(o.gamma, need(o.b, "b"));
    ClassifyTols t;
    if (!std::isnan(o.tol)) t.integ_tol = o.tol;
    const Classification c = classify(p, o.y_max, t);
    const auto cfg = config_json(o, {"gamma", "b", "tol", "y-max"});
    const DenseTrajectory& phi = *c.phi;

    auto write_phi = [&](std::ostream& os) {
        os << "# gelshoot " << GELSHOOT_VERSION << " fig3 class=" << c.tag() << "\n# config " << cfg.dump() << "\n";
        os << "z,phi\n";
        for (std::size_t i = 0; i < phi.size(); ++i) write_csv_row(os, {phi.nodes()[i], phi.values()[i]});
    };
    auto write_h = [&](std::ostream& os) {
        os << "# gelshoot " << GELSHOOT_VERSION << " fig3 class=" << c.tag() << "\n# config " << cfg.dump() << "\n";
        os << "y,H\n";
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const double y = std::exp(phi.nodes()[i]);
            write_csv_row(os, {y, phi.values()[i] / y});
        }
    };
    // --out is a prefix here: PREFIX_phi.csv and PREFIX_H.csv
    if (o.out.empty()) {
        write_phi(std::cout);
        std::cout << "\n";
        write_h(std::cout);
    } else {
        std::ofstream a(o.out + "_phi.csv"), b(o.out + "_H.csv");
        if (!a || !b) throw DomainError("cannot open " + o.out + "_{phi,H}.csv");
        write_phi(a);
        write_h(b);
    }
    return 0;
}

void print_error(const std::string& kind, const std::string& msg, const ordered_json& extra = {}) {
    ordered_json j = {{"error", kind}, {"message", msg}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar gelation profiles: shooting, stability, fixed points and simulation"};
    app.set_config("--config", "", "flat key=value file; flags on the command line win");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    Opts o;
    bool selftest = false;
    app.add_option("--gamma", o.gamma, "homogeneity");
    app.add_option("--b", o.b, "shooting parameter");
    app.add_option("--tol", o.tol, "integration or solver tolerance");
    app.add_option("--y-max", o.y_max, "integration end in y");
    app.add_option("--grid", o.grid, "lo:hi:n, optionally :log");
    app.add_option("--out", o.out, "output path (stdout when absent)");
    app.add_option("--jobs", o.jobs, "worker threads for scans (0 = hardware)");
    app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--digits", o.digits, "significant digits for scalar output");
    app.add_option("--eps", o.eps);
    app.add_option("--eta", o.eta);
    app.add_option("--eps-list", o.eps_list, "comma separated");
    app.add_option("--b-list", o.b_list, "comma separated");
    app.add_option("--xi", o.xi);
    app.add_option("--x", o.x);
    app.add_option("--a1", o.a1);
    app.add_option("--x-end", o.x_end);
    app.add_option("--tol-b", o.tol_b, "bracket width target");
    app.add_option("--amplitude", o.amplitude, "perturbation size relative to phi_inf");
    app.add_option("--samples", o.samples, "contour samples");
    app.add_flag("--curve", o.curve, "emit the contour samples as CSV");
    app.add_option("--chains", o.chains);
    app.add_option("--levels", o.levels, "top level K of each dyadic chain");
    app.add_option("--horizon", o.horizon);
    app.add_option("--init", o.init, "exp, mono or power:<e>");
    app.add_option("--times", o.times, "comma separated snapshot times");
    app.add_flag("--selftest", selftest, "run the module example table for the subcommand");

    struct Cmd {
        const char* name;
        const char* help;
        const char* fmt;  // default format
    };
    const std::vector<Cmd> cmds = {
        {"params", "derived model parameters", "json"},
        {"profile", "H(y) from the series start", "csv"},
        {"classify", "classify the profile for (gamma, b)", "json"},
        {"scan-b", "classify over a b grid", "csv"},
        {"bracket-bbar", "bracket the sign-change threshold in b", "json"},
        {"b-star", "stability boundary b*(gamma)", "csv"},
        {"winding", "winding number of the characteristic curve", "json"},
        {"stability-scan", "winding and empirical decay over b", "csv"},
        {"greens-q", "Q(xi) table and moments", "csv"},
        {"greens-verify", "three-route check of the fundamental solution", "csv"},
        {"fixedpoint", "Picard solve of W = T[W]", "json"},
        {"eps-of-eta", "eps(eta) with F = 0", "csv"},
        {"bbar", "b from the fixed point for large gamma", "json"},
        {"gamma1", "gamma = 1 profile and b = 1 limit", "json"},
        {"psi-asym", "Psi series against its Laplace asymptotics", "csv"},
        {"laplace", "Laplace quantities t*, W, D, U", "json"},
        {"tails", "tail exponents and critical delta", "json"},
        {"simulate", "dyadic-chain gelation simulation", "json"},
        {"fig2", "characteristic curves for a list of b", "csv"},
        {"fig3", "phi against z and H against y", "csv"},
    };
    for (const auto& c : cmds) app.add_subcommand(c.name, c.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("ParseError", e.what());
        return 1;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    std::string fmt = o.format;
    for (const auto& c : cmds)
        if (name == c.name && fmt.empty()) fmt = c.fmt;

    try {
        if (selftest) return run_selftest(name, std::cout) == 0 ? 0 : 2;
        if (name == "fig3") return cmd_fig3(o);
        Output out(o, name, fmt);
        log(LogLevel::Info, "running " + name);
        if (name == "params") return cmd_params(o, out);
        if (name == "profile") return cmd_profile(o, out);
        if (name == "classify") return cmd_classify(o, out);
        if (name == "scan-b") return cmd_scan_b(o, out);
        if (name == "bracket-bbar") return cmd_bracket(o, out);
        if (name == "b-star") return cmd_b_star(o, out);
        if (name == "winding") return cmd_winding(o, out);
        if (name == "stability-scan") return cmd_stability_scan(o, out);
        if (name == "greens-q") return cmd_greens_q(o, out);
        if (name == "greens-verify") return cmd_greens_verify(o, out);
        if (name == "fixedpoint") return cmd_fixedpoint(o, out);
        if (name == "eps-of-eta") return cmd_eps_of_eta(o, out);
        if (name == "bbar") return cmd_bbar(o, out);
        if (name == "gamma1") return cmd_gamma1(o, out);
        if (name == "psi-asym") return cmd_psi_asym(o, out);
        if (name == "laplace") return cmd_laplace(o, out);
        if (name == "tails") return cmd_tails(o, out);
        if (name == "simulate") return cmd_simulate(o, out);
        if (name == "fig2") return cmd_fig2(o, out);
    } catch (const DomainError& e) {
        print_error("DomainError", e.what());
        return 1;
    } catch (const ChainBlowUp& e) {
        print_error(e.kind(), e.what(), {{"site", e.site}, {"t", e.where}, {"t_estimate", e.t_estimate}});
        return 2;
    } catch (const BlowUp& e) {
        print_error(e.kind(), e.what(), {{"where", e.where}});
        return 2;
    } catch (const StepUnderflow& e) {
        print_error(e.kind(), e.what(), {{"where", e.where}});
        return 2;
    } catch (const NumericalError& e) {
        print_error(e.kind(), e.what());
        return 2;
    }
    return 1;
}
