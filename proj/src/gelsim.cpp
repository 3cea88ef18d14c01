#include "gelshoot/gelsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "gelshoot/io.hpp"

namespace gelshoot {

double DyadicChain::xi(int k) const { return std::ldexp(xi0, k); }

DyadicChain make_chain(double xi0, double gamma, int K, const std::function<double(double)>& f0,
                       double inflow) {
    if (!(xi0 > 0.0)) throw DomainError("xi0 must be positive");
    if (K < 0) throw DomainError("K must be nonnegative");
    DyadicChain c;
    c.xi0 = xi0;
    c.gamma = gamma;
    c.inflow = inflow;
    c.f.resize(K + 1);
    for (int k = 0; k <= K; ++k) c.f[k] = f0(c.xi(k));
    return c;
}

namespace {

Eigen::VectorXd site_weights(const DyadicChain& c) {
    Eigen::VectorXd w(c.levels());
    for (int k = 0; k < c.levels(); ++k) w[k] = std::pow(c.xi(k), c.gamma + 1.0);
    return w;
}

struct Stepper {
    Eigen::VectorXd w;   // xi_k^(g+1)
    double inflow;

    Eigen::VectorXd rhs(const Eigen::VectorXd& f) const {
        const int n = static_cast<int>(f.size());
        Eigen::VectorXd r(n);
        // (1/4)(xi/2)^(g+1) = (1/4) w_{k-1}
        for (int k = 0; k < n; ++k) {
            const double below = k > 0 ? f[k - 1] : inflow;
            const double wb = k > 0 ? w[k - 1] : w0_half;
            r[k] = 0.25 * wb * below * below - w[k] * f[k] * f[k];
        }
        return r;
    }

    Eigen::VectorXd rk4(const Eigen::VectorXd& f, double h) const {
        const Eigen::VectorXd k1 = rhs(f);
        const Eigen::VectorXd k2 = rhs(f + (0.5 * h) * k1);
        const Eigen::VectorXd k3 = rhs(f + (0.5 * h) * k2);
        const Eigen::VectorXd k4 = rhs(f + h * k3);
        return f + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    double w0_half = 0.0;  // (xi0/2)^(g+1)
};

Stepper make_stepper(const DyadicChain& c) {
    Stepper s{site_weights(c), c.inflow};
    s.w0_half = std::pow(0.5 * c.xi0, c.gamma + 1.0);
    return s;
}

}  // namespace

Eigen::VectorXd chain_rhs(const DyadicChain& c, const Eigen::VectorXd& f) {
    return make_stepper(c).rhs(f);
}

namespace {

using Observer = std::function<void(const std::vector<DyadicChain>&)>;

ChainRun evolve_impl(std::vector<DyadicChain> chains, double t_end, double tol, const ChainOptions& opt,
                     const Observer& obs) {
    if (chains.empty()) return {};
    const double t0 = chains.front().t;
    for (const auto& c : chains) {
        if (c.t != t0) throw DomainError("chains must share the start time");
        if (!c.f.allFinite()) throw DomainError("chain values must be finite");
    }
    if (!(t_end > t0)) throw DomainError("t_end must exceed the chain time");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");

    std::vector<Stepper> st;
    st.reserve(chains.size());
    for (const auto& c : chains) st.push_back(make_stepper(c));

    ChainRun run;
    run.min_value = std::numeric_limits<double>::infinity();
    for (const auto& c : chains) run.min_value = std::min(run.min_value, c.f.minCoeff());
    if (obs) obs(chains);

    double t = t0;
    double h = std::min(opt.h_init, t_end - t0);
    std::vector<Eigen::VectorXd> next(chains.size());
    while (t < t_end) {
        const bool last = h >= t_end - t;
        if (last) h = t_end - t;
        double errn = 0.0;
        for (std::size_t i = 0; i < chains.size(); ++i) {
            const Eigen::VectorXd& y = chains[i].f;
            const Eigen::VectorXd full = st[i].rk4(y, h);
            const Eigen::VectorXd half = st[i].rk4(st[i].rk4(y, 0.5 * h), 0.5 * h);
            for (Eigen::Index k = 0; k < y.size(); ++k) {
                const double sc = std::max({std::abs(y[k]), std::abs(half[k]), opt.abs_floor});
                const double e = std::abs(half[k] - full[k]) / 15.0 / (tol * sc);
                if (!(e <= errn)) errn = std::isnan(e) ? INFINITY : e;
            }
            next[i] = half;
        }
        if (errn <= 1.0) {
            t = last ? t_end : t + h;
            run.steps.push_back(h);
            for (std::size_t i = 0; i < chains.size(); ++i) {
                chains[i].f = next[i];
                chains[i].t = t;
                run.min_value = std::min(run.min_value, next[i].minCoeff());
                Eigen::Index site;
                const double top = next[i].maxCoeff(&site);
                if (!(top <= opt.cap)) {
                    const double fp = st[i].rhs(next[i])[site];
                    const double est = fp > 0.0 ? t + top / fp : t;
                    throw ChainBlowUp(static_cast<int>(site), t, est,
                                      "f exceeded cap at site " + std::to_string(site));
                }
            }
            if (obs) obs(chains);
            if (last) break;
        } else {
            ++run.rejected;
        }
        const double fac = errn > 0.0 ? 0.9 * std::pow(errn, -0.2) : 4.0;
        h *= std::clamp(fac, 0.2, 4.0);
        if (opt.h_max > 0.0) h = std::min(h, opt.h_max);
        if (h < opt.h_min * std::max(1.0, std::abs(t)))
            throw StepUnderflow(t, "chain step size underflow at t=" + shortest(t));
    }
    run.chains = std::move(chains);
    return run;
}

}  // namespace

ChainRun evolve_chains(std::vector<DyadicChain> chains, double t_end, double tol, const ChainOptions& opt) {
    return evolve_impl(std::move(chains), t_end, tol, opt, nullptr);
}

DyadicChain evolve_chain(const DyadicChain& c, double t_end, double tol, const ChainOptions& opt) {
    return evolve_impl({c}, t_end, tol, opt, nullptr).chains.front();
}

DyadicChain replay_chain(DyadicChain c, const std::vector<double>& steps) {
    const Stepper s = make_stepper(c);
    for (double h : steps) {
        c.f = s.rk4(s.rk4(c.f, 0.5 * h), 0.5 * h);
        c.t += h;
    }
    return c;
}

double selfsimilar_residual(const GridFunction& g, const ModelParams& p) {
    const std::size_t n = g.x.size();
    if (g.F.size() != n) throw DomainError("grid and values differ in length");
    if (!g.dF.empty() && g.dF.size() != n) throw DomainError("derivative has the wrong length");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(g.x[i] > 0.0)) throw DomainError("grid must be positive");
        if (i > 0 && !(g.x[i] > g.x[i - 1])) throw DomainError("grid must be increasing");
    }
    if (n < 2) return 0.0;

    std::vector<double> d = g.dF;
    if (d.empty()) {
        d.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            // three point nonuniform differences, one sided at the ends
            const std::size_t a = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
            if (n < 3) {
                d[i] = (g.F[1] - g.F[0]) / (g.x[1] - g.x[0]);
                continue;
            }
            const double x0 = g.x[a], x1 = g.x[a + 1], x2 = g.x[a + 2], x = g.x[i];
            const double l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
            const double l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
            const double l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
            d[i] = l0 * g.F[a] + l1 * g.F[a + 1] + l2 * g.F[a + 2];
        }
    }

    auto at = [&](double x) {
        const auto it = std::lower_bound(g.x.begin(), g.x.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - g.x.begin());
        if (it != g.x.end() && *it == x) return g.F[j];
        const double xa = g.x[j - 1], xb = g.x[j], Fa = g.F[j - 1], Fb = g.F[j];
        auto hermite = [](double s, double h, double va, double da, double vb, double db) {
            const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
            const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
            return h00 * va + h10 * h * da + h01 * vb + h11 * h * db;
        };
        // positive profiles are close to power laws, so interpolate ln F against ln x there
        if (Fa > 0 && Fb > 0) {
            const double h = std::log(xb / xa), s = std::log(x / xa) / h;
            return std::exp(hermite(s, h, std::log(Fa), xa * d[j - 1] / Fa, std::log(Fb), xb * d[j] / Fb));
        }
        return hermite((x - xa) / (xb - xa), xb - xa, Fa, d[j - 1], Fb, d[j]);
    };

    const double e = p.gamma + 1.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.x[i];
        if (0.5 * x < g.x.front()) continue;
        const double Fh = at(0.5 * x);
        const double t1 = -p.a * p.b * g.F[i];
        const double t2 = -p.b * x * d[i];
        const double t3 = -0.25 * std::pow(0.5 * x, e) * Fh * Fh;
        const double t4 = std::pow(x, e) * g.F[i] * g.F[i];
        const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4);
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(t1 + t2 + t3 + t4) / scale);
    }
    return worst;
}

double InitDescriptor::operator()(double xi) const {
    switch (kind) {
        case Kind::Exponential: return amplitude * std::exp(-xi);
        case Kind::Mono: {
            const double u = (std::log(xi) - std::log(center)) / width;
            return amplitude * std::exp(-u * u);
        }
        case Kind::Power: return amplitude * std::pow(xi, -exponent);
    }
    return 0.0;
}

InitDescriptor InitDescriptor::parse(const std::string& s) {
    InitDescriptor d;
    if (s == "exp") {
        d.kind = Kind::Exponential;
    } else if (s == "mono") {
        d.kind = Kind::Mono;
    } else if (s.rfind("power:", 0) == 0) {
        d.kind = Kind::Power;
        try {
            d.exponent = std::stod(s.substr(6));
        } catch (const std::exception&) {
            throw DomainError("bad power exponent in init '" + s + "'");
        }
    } else {
        throw DomainError("unknown init '" + s + "' (exp, mono, power:<e>)");
    }
    return d;
}

namespace {

template <class Fn>
void parallel_for(int n, int jobs, Fn fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned nt = std::min<unsigned>(jobs > 0 ? jobs : hw, static_cast<unsigned>(std::max(n, 1)));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    for (unsigned w = 0; w < nt; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// per-site arrival: first time f_k stops growing, from the sign change of f_k'
ChainEstimate estimate_chain(const DyadicChain& c0, double horizon, double tol) {
    const int n = c0.levels();
    std::vector<double> t_prev(n, 0.0), r_prev(n, 0.0), f_prev(n, 0.0);
    ChainEstimate e;
    e.xi0 = c0.xi0;
    e.site_T.assign(n, INFINITY);
    e.site_fmax.assign(n, 0.0);
    const Stepper st = make_stepper(c0);
    bool first = true;
    auto obs = [&](const std::vector<DyadicChain>& cs) {
        const DyadicChain& c = cs.front();
        const Eigen::VectorXd r = st.rhs(c.f);
        for (int k = 0; k < n; ++k) {
            if (!first && std::isinf(e.site_T[k]) && r_prev[k] > 0.0 && r[k] <= 0.0) {
                e.site_T[k] = t_prev[k] + (c.t - t_prev[k]) * r_prev[k] / (r_prev[k] - r[k]);
                e.site_fmax[k] = std::max(f_prev[k], c.f[k]);
            }
            f_prev[k] = c.f[k];
            t_prev[k] = c.t;
            r_prev[k] = r[k];
        }
        first = false;
    };
    evolve_impl({c0}, horizon, tol, ChainOptions{}, obs);

    // Aitken on the highest triple whose difference ratio agrees with the one below it
    for (int k = n - 1; k >= 3; --k) {
        const double* s = &e.site_T[k - 3];
        if (!(std::isfinite(s[0]) && std::isfinite(s[3]))) continue;
        const double d1 = s[1] - s[0], d2 = s[2] - s[1], d3 = s[3] - s[2];
        if (!(d1 > 0.0 && d2 > 0.0 && d3 > 0.0)) continue;
        const double r1 = d2 / d1, r2 = d3 / d2;
        if (!(r1 < 1.0 && r2 < 1.0) || std::abs(r2 - r1) > 0.3 * r1) continue;
        e.ratio = r2;
        e.T_hat = s[3] + d3 * r2 / (1.0 - r2);
        e.T_err = std::abs(e.T_hat - (s[2] + d2 * r1 / (1.0 - r1)));
        e.gels = e.T_hat < horizon;
        break;
    }
    // peak heights scale like xi^(1/b - g - 1); fit over the top eight peaked sites
    std::vector<double> ks, ls;
    for (int k = n - 1; k >= 0 && ks.size() < 8; --k)
        if (std::isfinite(e.site_T[k]) && e.site_fmax[k] > 0.0) {
            ks.push_back(k);
            ls.push_back(std::log2(e.site_fmax[k]));
        }
    if (ks.size() >= 3) {
        double kb = 0, lb = 0, skk = 0, skl = 0;
        for (std::size_t q = 0; q < ks.size(); ++q) {
            kb += ks[q] / ks.size();
            lb += ls[q] / ks.size();
        }
        for (std::size_t q = 0; q < ks.size(); ++q) {
            skk += (ks[q] - kb) * (ks[q] - kb);
            skl += (ks[q] - kb) * (ls[q] - lb);
        }
        const double inv_b = skl / skk + c0.gamma + 1.0;
        if (inv_b > 0.0) e.b_fit = 1.0 / inv_b;
    }
    return e;
}

Snapshot rescale(const std::vector<DyadicChain>& chains, double T, double b) {
    Snapshot s;
    s.t = chains.front().t;
    const double tau = T - s.t;
    std::vector<std::pair<double, double>> pts;
    for (const auto& c : chains)
        for (int k = 0; k < c.levels(); ++k)
            pts.push_back({std::pow(tau, b) * c.xi(k), tau * std::pow(c.xi(k), c.gamma + 1.0) * c.f[k]});
    std::sort(pts.begin(), pts.end());
    for (const auto& [x, v] : pts) {
        s.x.push_back(x);
        s.Phi.push_back(v);
    }
    return s;
}

double interp_log(const Snapshot& s, double x) {
    const auto it = std::lower_bound(s.x.begin(), s.x.end(), x);
    if (it == s.x.begin()) return s.Phi.front();
    if (it == s.x.end()) return s.Phi.back();
    const std::size_t j = static_cast<std::size_t>(it - s.x.begin());
    const double u = std::log(x / s.x[j - 1]) / std::log(s.x[j] / s.x[j - 1]);
    return (1 - u) * s.Phi[j - 1] + u * s.Phi[j];
}

}  // namespace

SimDiagnostics gelation_scan(double gamma, const ScanConfig& cfg) {
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    if (cfg.chains < 1 || cfg.K < 2) throw DomainError("need at least one chain and three levels");
    if (!(cfg.horizon > 0.0)) throw DomainError("horizon must be positive");

    SimDiagnostics d;
    d.gamma = gamma;
    d.chains = cfg.chains;
    d.levels = cfg.K + 1;
    d.horizon = cfg.horizon;

    std::vector<DyadicChain> seeds;
    for (int j = 0; j < cfg.chains; ++j)
        seeds.push_back(make_chain(std::exp2(static_cast<double>(j) / cfg.chains), gamma, cfg.K, cfg.init));

    d.per_chain.resize(cfg.chains);
    parallel_for(cfg.chains, cfg.jobs, [&](int j) {
        d.per_chain[j] = estimate_chain(seeds[j], cfg.horizon, cfg.tol);
    });

    std::vector<double> Ts, bs, rs;
    for (const auto& e : d.per_chain)
        if (e.gels) {
            Ts.push_back(e.T_hat);
            rs.push_back(e.ratio);
            if (e.b_fit > 0.0) bs.push_back(e.b_fit);
        }
    d.gels = 2 * Ts.size() > d.per_chain.size();

    // mass = int xi f dxi over all chains, uniform in ln xi with spacing ln2 / chains
    const int nm = 21;
    d.mass_times.resize(nm);
    d.mass.assign(nm, 0.0);
    for (int m = 0; m < nm; ++m) d.mass_times[m] = cfg.horizon * m / (nm - 1);
    std::vector<std::vector<double>> contrib(cfg.chains, std::vector<double>(nm, 0.0));
    auto chain_mass = [](const DyadicChain& c) {
        double s = 0.0;
        for (int k = 0; k < c.levels(); ++k) s += c.xi(k) * c.xi(k) * c.f[k];
        return s;
    };
    parallel_for(cfg.chains, cfg.jobs, [&](int j) {
        DyadicChain c = seeds[j];
        contrib[j][0] = chain_mass(c);
        for (int m = 1; m < nm; ++m) {
            c = evolve_chain(c, d.mass_times[m], cfg.tol);
            contrib[j][m] = chain_mass(c);
        }
    });
    for (int m = 0; m < nm; ++m)
        for (int j = 0; j < cfg.chains; ++j) d.mass[m] += contrib[j][m] * std::numbers::ln2 / cfg.chains;

    if (!d.gels) return d;
    // chains decouple, so each gels on its own clock; the system loses mass first at the earliest
    d.T_hat = *std::min_element(Ts.begin(), Ts.end());
    // arrival ratios 2^(-1/b) converge slowly; the peak-height fit is the better estimate
    d.b_fit = bs.empty() ? -std::numbers::ln2 / std::log(median(rs)) : median(bs);
    const double b_use = cfg.b > 0.0 ? cfg.b : d.b_fit;

    // per chain snapshots at T_j - tau0 2^-i with tau0 = T_j / 4, rescaled with the chain's own T_j
    const int J = std::max(cfg.snapshots, 2);
    std::vector<std::vector<double>> dist(cfg.chains);
    std::vector<std::vector<Snapshot>> snaps(cfg.chains);
    parallel_for(cfg.chains, cfg.jobs, [&](int j) {
        const ChainEstimate& e = d.per_chain[j];
        if (!e.gels) return;
        DyadicChain c = seeds[j];
        for (int i = 0; i < J; ++i) {
            const double tau = 0.25 * e.T_hat * std::exp2(-i);
            if (tau < 20.0 * e.T_err) break;  // closer in, the error in T dominates the rescaling
            c = evolve_chain(c, e.T_hat - tau, cfg.tol);
            snaps[j].push_back(rescale({c}, e.T_hat, b_use));
        }
        double lo = 0.0, hi = INFINITY;
        for (const auto& sn : snaps[j]) {
            lo = std::max(lo, sn.x.front());
            hi = std::min(hi, sn.x.back());
        }
        for (std::size_t i = 0; i + 1 < snaps[j].size(); ++i) {
            const Snapshot& a = snaps[j][i];
            const Snapshot& b = snaps[j][i + 1];
            double num = 0.0, den = 0.0;
            for (std::size_t q = 0; q < b.x.size(); ++q) {
                if (b.x[q] < lo || b.x[q] > hi) continue;
                num = std::max(num, std::abs(interp_log(a, b.x[q]) - b.Phi[q]));
                den = std::max(den, std::abs(b.Phi[q]));
            }
            dist[j].push_back(den > 0.0 ? num / den : 0.0);
        }
    });
    for (int j = 0; j < cfg.chains; ++j)
        if (!snaps[j].empty() && d.snapshots.empty()) d.snapshots = snaps[j];
    for (int i = 0; i + 1 < J; ++i) {
        std::vector<double> v;
        for (int j = 0; j < cfg.chains; ++j)
            if (static_cast<int>(dist[j].size()) > i) v.push_back(dist[j][i]);
        if (2 * v.size() < Ts.size()) break;  // most chains stopped short of this snapshot
        d.collapse.push_back(median(v));
    }
    return d;
}

void write_snapshot_csv(std::ostream& os, const std::vector<DyadicChain>& chains) {
    os << "t,xi,f\n";
    for (const auto& c : chains)
        for (int k = 0; k < c.levels(); ++k) write_csv_row(os, {c.t, c.xi(k), c.f[k]});
}

}  // namespace gelshoot
