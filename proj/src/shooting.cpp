#include "gelshoot/shooting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "gelshoot/errors.hpp"
#include "gelshoot/greens.hpp"
#include "gelshoot/io.hpp"
#include "gelshoot/stability.hpp"

namespace gelshoot {

const char* Classification::tag() const {
    switch (outcome.index()) {
        case 0: return "SignChange";
        case 1: return "ConvergesToConstant";
        case 2: return "Oscillating";
        default: return "Undetermined";
    }
}

double Classification::y_event() const {
    if (auto* s = std::get_if<SignChange>(&outcome)) return s->y_cross;
    if (auto* u = std::get_if<Undetermined>(&outcome)) return u->y_max_reached;
    return phi ? std::exp(phi->end()) : 0.0;
}

std::string Classification::evidence_json() const {
    nlohmann::json j;
    j["class"] = tag();
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, SignChange>) j["y_cross"] = o.y_cross;
            if constexpr (std::is_same_v<T, ConvergesToConstant>) {
                j["tail_residual"] = o.tail_residual;
                j["phi_inf"] = o.phi_inf;
            }
            if constexpr (std::is_same_v<T, Oscillating>) {
                j["num_extrema"] = o.num_extrema;
                j["min_level"] = o.min_level;
                j["plateau_ratios"] = o.plateau_ratios;
            }
            if constexpr (std::is_same_v<T, Undetermined>) j["y_max_reached"] = o.y_max_reached;
        },
        outcome);
    return j.dump();
}

Classification classify(const ModelParams& p, double y_max, const ClassifyTols& tols) {
    if (!(p.b > p.b0)) throw DomainError("classification needs b > b0");
    if (!(y_max > 1.0)) throw DomainError("y_max must exceed 1");

    const PowerSeries s = local_series(p, tols.series_terms);
    const double ys = series_switch_point(s);
    const double zs = std::log(ys);
    // phi(z) = y H(y) with y = e^z, taken from the series below zs
    auto hist = [s](double z) {
        const double y = std::exp(z);
        return y * series_eval(s, y).value;
    };
    auto dhist = [s](double z) {
        const double y = std::exp(z);
        return y * series_eval(s, y).value + y * y * series_derivative(s, y);
    };
    const double z_end = std::max(std::log(y_max), tols.min_z_end);

    IntegrateOptions o;
    o.tol = tols.integ_tol;
    o.scale_floor = 1e-3 * p.phi_inf;
    const double neg = tols.tol_neg;
    o.stop = [neg](double, double u) { return u < -neg; };
    auto tr = std::make_shared<DenseTrajectory>(
        integrate(DelayRHS::phi_equation(p), InitialSegment::function(hist, dhist), {zs, z_end}, o));

    Classification c{Undetermined{z_end}, p, zs, tr};
    log(LogLevel::Debug, "classify b=" + shortest(p.b) + " zs=" + shortest(zs) + " nodes=" +
                             std::to_string(tr->size()));
    if (tr->stopped_early()) {
        c.outcome = SignChange{std::exp(tr->end())};
        return c;
    }

    const auto& z = tr->nodes();
    const auto& u = tr->values();
    const auto& du = tr->derivatives();

    // sup over the trailing window, nodes plus a fine uniform sample
    double sup = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (z[i] >= z_end - tols.window) sup = std::max(sup, std::abs(u[i] - p.phi_inf));
    for (int k = 0; k <= 1000; ++k) {
        const double zz = z_end - tols.window * k / 1000.0;
        sup = std::max(sup, std::abs(tr->eval(zz) - p.phi_inf));
    }
    if (sup < tols.tol_conv) {
        c.outcome = ConvergesToConstant{sup, p.phi_inf};
        return c;
    }

    // extrema over the last two windows
    const double z_osc = z_end - 2.0 * tols.window;
    int extrema = 0;
    double min_level = INFINITY;
    std::vector<double> maxima_H, amps;
    for (std::size_t i = 1; i < z.size(); ++i) {
        if (z[i] < z_osc) continue;
        min_level = std::min(min_level, u[i]);
        if ((du[i - 1] > 0.0) != (du[i] > 0.0) && du[i - 1] != 0.0) {
            // locate the extremum inside [z_{i-1}, z_i] by the Hermite derivative
            double a = z[i - 1], b = z[i];
            for (int it = 0; it < 60; ++it) {
                const double m = 0.5 * (a + b);
                if ((tr->derivative(m) > 0.0) == (du[i - 1] > 0.0)) a = m;
                else b = m;
            }
            const double ze = 0.5 * (a + b), ue = tr->eval(ze);
            if (std::abs(ue - p.phi_inf) > tols.osc_amp) {
                ++extrema;
                amps.push_back(std::abs(ue - p.phi_inf));
                if (du[i - 1] > 0.0) maxima_H.push_back(ue * std::exp(-ze));
            }
        }
    }
    // a slowly decaying approach to phi_inf is not an oscillation
    const bool sustained = !amps.empty() && amps.back() >= 0.5 * amps.front();
    if (extrema >= tols.min_extrema && min_level > 0.0 && sustained) {
        std::vector<double> ratios;
        for (std::size_t k = 1; k < maxima_H.size(); ++k) ratios.push_back(maxima_H[k] / maxima_H[k - 1]);
        c.outcome = Oscillating{extrema, min_level, ratios};
        return c;
    }
    c.outcome = Undetermined{std::exp(z_end)};
    return c;
}

std::vector<ScanEntry> scan_b(double gamma, const std::vector<double>& b_grid, double y_max,
                              const ClassifyTols& tols, int jobs) {
    std::vector<ScanEntry> out(b_grid.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < b_grid.size(); i = next++) {
            const double b = b_grid[i];
            try {
                const auto c = classify(make_params(gamma, b), y_max, tols);
                out[i] = {b, true, c.tag(), c.y_event(), c.evidence_json()};
            } catch (const NumericalError& e) {
                out[i] = {b, false, e.kind(), 0.0, e.what()};
            } catch (const DomainError& e) {
                out[i] = {b, false, "DomainError", 0.0, e.what()};
            }
        }
    };
    unsigned n = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
    n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, b_grid.size())));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

CriticalBracket bracket_bbar(double gamma, double tol_b, double y_max, const ClassifyTols& tols,
                             double delta_frac) {
    if (!(tol_b > 0.0)) throw DomainError("tol_b must be positive");
    const double b0 = 2.0 / (gamma - 1.0);
    double lo = b0 * (1.0 + delta_frac), hi = b_star(gamma);
    CriticalBracket br{lo, hi, hi - lo, gamma, "", "", 0};
    const auto clo = classify(make_params(gamma, lo), y_max, tols);
    const auto chi = classify(make_params(gamma, hi), y_max, tols);
    br.evaluations = 2;
    br.class_lo = clo.tag();
    br.class_hi = chi.tag();
    if (clo.is_sign_change() == chi.is_sign_change() || !clo.is_sign_change())
        throw BracketFailure("endpoints classify as " + br.class_lo + " at b=" + shortest(lo) +
                             " and " + br.class_hi + " at b=" + shortest(hi));
    while (hi - lo > tol_b) {
        const double mid = 0.5 * (lo + hi);
        const auto cm = classify(make_params(gamma, mid), y_max, tols);
        ++br.evaluations;
        log(LogLevel::Info, "bracket b=" + shortest(mid) + " " + cm.tag());
        if (cm.is_sign_change()) {
            lo = mid;
        } else {
            hi = mid;
            br.class_hi = cm.tag();
        }
    }
    br.b_lo = lo;
    br.b_hi = hi;
    br.width = hi - lo;
    return br;
}

LimitHRun limit_h_run(double eps, double y_end, double tol, double tol_neg) {
    if (!(eps > -1.0 && eps < 1.0)) throw DomainError("eps must lie in (-1, 1)");
    IntegrateOptions o;
    o.tol = tol;
    o.scale_floor = 1e-300;
    o.stop = [tol_neg](double, double u) { return u < -tol_neg || u < 1e-250; };
    auto tr = integrate(DelayRHS::limit_h(eps), InitialSegment::point(1.0), {0.0, y_end}, o);
    LimitHRun r{std::move(tr)};
    if (r.traj.stopped_early() && r.traj.values().back() < -tol_neg) {
        r.sign_change = true;
        r.y_cross = r.traj.end();
    }
    return r;
}

PlateauReport plateau_diagnostics(const DenseTrajectory& traj, double eps, double slope_tol) {
    PlateauReport rep;
    rep.predicted_ratio = c0_moment() * eps;
    rep.floor = INFINITY;
    for (std::size_t i = 0; i < traj.size(); ++i)
        rep.floor = std::min(rep.floor, traj.values()[i] * (1.0 + traj.nodes()[i]));

    // |y h'/h| on a log grid, 200 points per unit of ln y
    const double y0 = std::max(traj.start(), 1e-3), y1 = traj.end();
    if (!(y1 > y0)) throw NoPlateaus("trajectory too short");
    const double l0 = std::log(y0), l1 = std::log(y1);
    const int n = static_cast<int>((l1 - l0) * 200.0) + 2;
    std::vector<double> ly(n), s(n), h(n);
    for (int k = 0; k < n; ++k) {
        ly[k] = l0 + (l1 - l0) * k / (n - 1);
        const double y = std::min(std::exp(ly[k]), y1);
        h[k] = traj.eval(y);
        s[k] = h[k] > 0.0 ? std::abs(y * traj.derivative(y) / h[k]) : INFINITY;
    }
    const int half = 100;  // +-0.5 in ln y
    for (int k = 1; k + 1 < n; ++k) {
        if (!(s[k] < slope_tol) || !(h[k] > 0.0)) continue;
        bool is_min = true;
        for (int j = std::max(0, k - half); j <= std::min(n - 1, k + half) && is_min; ++j)
            if (s[j] < s[k] || (s[j] == s[k] && j < k)) is_min = false;
        if (!is_min || k < half || k + half >= n) continue;
        rep.positions.push_back(std::exp(ly[k]));
        rep.levels.push_back(h[k]);
    }
    if (rep.levels.size() < 2) throw NoPlateaus("found " + std::to_string(rep.levels.size()) + " plateau(s)");
    for (std::size_t k = 1; k < rep.levels.size(); ++k) rep.ratios.push_back(rep.levels[k] / rep.levels[k - 1]);
    return rep;
}

}  // namespace gelshoot
