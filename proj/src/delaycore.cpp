#include "gelshoot/delaycore.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "gelshoot/errors.hpp"

namespace gelshoot {

/* --- right-hand sides --- */

DelayRHS DelayRHS::h_equation(const ModelParams& p) {
    return DelayRHS(Kind::HEquation, p.sigma, 0.0, p.q, 0.0);
}
DelayRHS DelayRHS::phi_equation(const ModelParams& p) {
    return DelayRHS(Kind::PhiEquation, p.theta, 0.0, 1.0, p.d);
}
DelayRHS DelayRHS::limit_h(double eps) {
    if (!(eps < 1.0)) throw DomainError("limit equation needs eps < 1");
    return DelayRHS(Kind::LimitH, 0.0, 0.0, 0.5 * (1.0 + eps), 0.0);
}
DelayRHS DelayRHS::rescaled_h(double eps, double eta) {
    if (!(eps < 1.0)) throw DomainError("rescaled equation needs eps < 1");
    return DelayRHS(Kind::RescaledH, eta, 0.0, 0.5 * (1.0 + eps), 0.0);
}
DelayRHS DelayRHS::linear_g() { return DelayRHS(Kind::LinearG, 0.0, 0.0, 0.5, 0.0); }
DelayRHS DelayRHS::phi_gamma1(double b) {
    if (!(b > 0.0)) throw DomainError("b must be positive");
    return DelayRHS(Kind::PhiGamma1, b, 0.0, 0.5, 0.0);
}
DelayRHS DelayRHS::phi_gamma1_log(double b) {
    if (!(b > 0.0)) throw DomainError("b must be positive");
    return DelayRHS(Kind::PhiGamma1Log, b, 0.0, 1.0, std::log(2.0));
}
DelayRHS DelayRHS::custom(Fn f, double q, double shift) {
    if (!(q > 0.0 && q <= 1.0) || shift < 0.0 || (q == 1.0 && shift == 0.0))
        throw DomainError("delayed argument must lag the current one");
    DelayRHS r(Kind::Custom, 0.0, 0.0, q, shift);
    r.fn_ = std::move(f);
    return r;
}

double DelayRHS::operator()(double t, double u, double ud) const {
    switch (kind_) {
        case Kind::HEquation: return -c1_ * ud * ud + u * u;
        case Kind::PhiEquation: return u - c1_ * ud * ud + u * u;
        case Kind::LimitH: return -ud * ud;
        case Kind::RescaledH: return -ud * ud + c1_ * u * u;
        case Kind::LinearG: return u - 2.0 * ud;
        case Kind::PhiGamma1: return (u * u - ud * ud) / (c1_ * t);
        case Kind::PhiGamma1Log: return (u * u - ud * ud) / c1_;
        case Kind::Custom: return fn_(t, u, ud);
    }
    return 0.0;
}

/* --- initial segments --- */

InitialSegment InitialSegment::point(double value) {
    InitialSegment s;
    s.kind_ = Kind::Point;
    s.c_ = value;
    return s;
}
InitialSegment InitialSegment::series(PowerSeries ps, double switch_at) {
    InitialSegment s;
    s.kind_ = Kind::Series;
    s.series_ = std::move(ps);
    s.switch_at_ = switch_at;
    return s;
}
InitialSegment InitialSegment::constant(double c) {
    InitialSegment s;
    s.kind_ = Kind::Constant;
    s.c_ = c;
    return s;
}
InitialSegment InitialSegment::jump(double value) {
    InitialSegment s;
    s.kind_ = Kind::Jump;
    s.c_ = value;
    return s;
}
InitialSegment InitialSegment::function(std::function<double(double)> f,
                                        std::function<double(double)> df) {
    InitialSegment s;
    s.kind_ = Kind::Function;
    s.f_ = std::move(f);
    s.df_ = std::move(df);
    return s;
}

double InitialSegment::start_value(double start) const {
    switch (kind_) {
        case Kind::Point:
        case Kind::Constant:
        case Kind::Jump: return c_;
        case Kind::Series: return series_eval(series_, start).value;
        case Kind::Function: return f_(start);
    }
    return 0.0;
}

double InitialSegment::value(double t) const {
    switch (kind_) {
        case Kind::Point: throw OutOfRange("no history below the starting point");
        case Kind::Constant: return c_;
        case Kind::Jump: return 0.0;
        case Kind::Series: return series_eval(series_, t).value;
        case Kind::Function: return f_(t);
    }
    return 0.0;
}

double InitialSegment::derivative(double t) const {
    switch (kind_) {
        case Kind::Point: throw OutOfRange("no history below the starting point");
        case Kind::Constant:
        case Kind::Jump: return 0.0;
        case Kind::Series: return series_derivative(series_, t);
        case Kind::Function: {
            if (df_) return df_(t);
            const double h = 1e-6 * std::max(1.0, std::abs(t));
            return (f_(t + h) - f_(t - h)) / (2.0 * h);
        }
    }
    return 0.0;
}

/* --- dense trajectory --- */

namespace {

inline double hermite(double t0, double t1, double u0, double u1, double f0, double f1, double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * u0 + (s3 - 2 * s2 + s) * h * f0 + (-2 * s3 + 3 * s2) * u1 +
           (s3 - s2) * h * f1;
}

inline double hermite_d(double t0, double t1, double u0, double u1, double f0, double f1,
                        double t) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    return (6 * s2 - 6 * s) / h * u0 + (3 * s2 - 4 * s + 1) * f0 + (-6 * s2 + 6 * s) / h * u1 +
           (3 * s2 - 2 * s) * f1;
}

}  // namespace

double DenseTrajectory::eval(double t, Side side) const {
    const double t0 = t_.front();
    if (t < t0 || (t == t0 && side == Side::Left && init_->kind() == InitialSegment::Kind::Jump))
        return init_->value(t);
    const double tn = t_.back();
    if (t >= tn) {
        if (t <= tn + 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(tn)))
            return u_.back();
        throw OutOfRange("evaluation beyond the last node");
    }
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    if (t == t_[i]) return u_[i];
    return hermite(t_[i], t_[i + 1], u_[i], u_[i + 1], dr_[i], dl_[i + 1], t);
}

double DenseTrajectory::derivative(double t) const {
    const double t0 = t_.front();
    if (t < t0) return init_->derivative(t);
    if (t >= t_.back()) {
        if (t <= t_.back() * (1 + 1e-15) + 1e-300) return dl_.back();
        throw OutOfRange("evaluation beyond the last node");
    }
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    return hermite_d(t_[i], t_[i + 1], u_[i], u_[i + 1], dr_[i], dl_[i + 1], t);
}

void DenseTrajectory::write_csv(std::ostream& os, const std::string& xname) const {
    os << xname << ",value,derivative\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < t_.size(); ++i) os << t_[i] << ',' << u_[i] << ',' << dl_[i] << '\n';
}

double eval(const DenseTrajectory& traj, double y) { return traj.eval(y); }

/* --- stepping --- */

class Integrator {
public:
    Integrator(const DelayRHS& rhs, const IntegrateOptions& o, DenseTrajectory& tr)
        : rhs_(rhs), o_(o), tr_(tr) {}

    struct Step {
        double u, f;
        bool ok;
    };

    double lookup(double tau, Side side) const { return tr_.eval(tau, side); }

    // one RK4 step from the last committed node; delayed arguments that fall inside
    // the step are served by a provisional Hermite piece and iterated to consistency
    Step single(double t, double u, double fr, double h) const {
        const bool self = rhs_.delayed(t + h) > t;
        double ue = u + h * fr, fe = fr;
        Step out{u, fr, true};
        const int maxit = self ? 12 : 1;
        for (int it = 0; it < maxit; ++it) {
            auto D = [&](double s, Side side) {
                const double tau = rhs_.delayed(s);
                if (tau <= t) return lookup(tau, side);
                return hermite(t, t + h, u, ue, fr, fe, tau);
            };
            const double tm = t + 0.5 * h, te = t + h;
            const double dm = D(tm, Side::Right);
            const double k2 = rhs_(tm, u + 0.5 * h * fr, dm);
            const double k3 = rhs_(tm, u + 0.5 * h * k2, dm);
            const double de = D(te, Side::Left);
            const double k4 = rhs_(te, u + h * k3, de);
            const double un = u + h / 6.0 * (fr + 2.0 * k2 + 2.0 * k3 + k4);
            const double fn = rhs_(te, un, de);
            out = {un, fn, std::isfinite(un) && std::isfinite(fn)};
            if (!self || !out.ok) return out;
            const double scale = std::max(std::abs(un), o_.scale_floor);
            if (std::abs(un - ue) <= 1e-3 * o_.tol * scale ||
                std::abs(un - ue) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(un))
                return out;
            ue = un;
            fe = fn;
        }
        out.ok = false;
        return out;
    }

    static void seed(DenseTrajectory& tr, const InitialSegment& init, double t, double u, double f) {
        tr.init_ = std::make_shared<const InitialSegment>(init);
        tr.t_.assign(1, t);
        tr.u_.assign(1, u);
        tr.dl_.assign(1, f);
        tr.dr_.assign(1, f);
    }

    void push(double t, double u, double f) {
        tr_.t_.push_back(t);
        tr_.u_.push_back(u);
        tr_.dl_.push_back(f);
        tr_.dr_.push_back(f);
    }
    void pop() {
        tr_.t_.pop_back();
        tr_.u_.pop_back();
        tr_.dl_.pop_back();
        tr_.dr_.pop_back();
    }

    double lipschitz(double t, double u) const {
        const double ud = lookup(rhs_.delayed(t), Side::Left);
        const double f = rhs_(t, u, ud);
        const double du = 1e-7 * std::max(1.0, std::abs(u));
        const double dd = 1e-7 * std::max(1.0, std::abs(ud));
        return std::abs(rhs_(t, u + du, ud) - f) / du + std::abs(rhs_(t, u, ud + dd) - f) / dd;
    }

    void run(double start, double end) {
        const double span = end - start;
        const double hmin = 1e-14 * span;
        const double hmax = o_.h_max > 0.0 ? o_.h_max : span;

        std::vector<double> bps;
        for (double bp : o_.breakpoints)
            if (bp > start && bp < end) bps.push_back(bp);
        std::sort(bps.begin(), bps.end());
        std::size_t next_bp = 0;

        if (!o_.fixed_nodes.empty()) {
            run_fixed(start, end);
            return;
        }

        double t = start, u = tr_.u_.back();
        double fr = rhs_(t, u, lookup(rhs_.delayed(t), Side::Right));
        tr_.dl_.back() = tr_.dr_.back() = fr;
        double h = o_.h_init;
        if (!(h > 0.0)) {
            const double s = std::max(std::abs(u), o_.scale_floor);
            h = 1e-2 * span;
            if (fr != 0.0) h = std::min(h, 1e-2 * s / std::abs(fr));
            h = std::max(h, 1e3 * hmin);
        }

        while (t < end) {
            fr = rhs_(t, u, lookup(rhs_.delayed(t), Side::Right));
            tr_.dr_.back() = fr;
            while (next_bp < bps.size() && bps[next_bp] <= t) ++next_bp;

            for (;;) {
                double hh = std::min(h, hmax);
                double target = t + hh;
                bool clipped = false;
                if (next_bp < bps.size() && target >= bps[next_bp] - 1e-13 * span) {
                    target = bps[next_bp];
                    clipped = true;
                }
                if (target >= end - 1e-13 * span) {
                    target = end;
                    clipped = true;
                }
                hh = target - t;
                if (hh < hmin) throw StepUnderflow(t, "step size underflow at " + std::to_string(t));

                const Step full = single(t, u, fr, hh);
                const Step a = single(t, u, fr, 0.5 * hh);
                push(t + 0.5 * hh, a.u, a.f);
                const Step bstep = single(t + 0.5 * hh, a.u, a.f, 0.5 * hh);
                const bool ok = full.ok && a.ok && bstep.ok;
                const double err = std::abs(bstep.u - full.u) / 15.0;
                const double scale =
                    std::max({std::abs(bstep.u), std::abs(u), o_.scale_floor});
                const double lim = o_.tol * scale;
                if (ok && err <= lim) {
                    push(target, bstep.u, bstep.f);
                    t = target;
                    u = bstep.u;
                    const double grow =
                        err > 0.0 ? std::clamp(0.9 * std::pow(lim / err, 0.2), 0.2, 4.0) : 4.0;
                    h = clipped ? std::max(h, hh * grow) : hh * grow;
                    break;
                }
                pop();
                ++tr_.rejected_;
                h = (ok && err > 0.0) ? hh * std::clamp(0.9 * std::pow(lim / err, 0.2), 0.2, 0.9)
                                      : 0.25 * hh;
            }

            if (!(std::abs(u) <= o_.cap))
                throw BlowUp(t, "trajectory exceeded the cap near " + std::to_string(t));
            tr_.lipschitz_ = std::max(tr_.lipschitz_, lipschitz(t, u));
            if (o_.stop && o_.stop(t, u)) {
                tr_.stopped_ = true;
                return;
            }
        }
    }

    void run_fixed(double start, double end) {
        std::vector<double> nodes;
        for (double x : o_.fixed_nodes)
            if (x > start && x <= end) nodes.push_back(x);
        std::sort(nodes.begin(), nodes.end());
        double t = start, u = tr_.u_.back();
        for (double target : nodes) {
            const double fr = rhs_(t, u, lookup(rhs_.delayed(t), Side::Right));
            tr_.dr_.back() = fr;
            if (tr_.t_.size() == 1) tr_.dl_.back() = fr;
            const Step s = single(t, u, fr, target - t);
            push(target, s.u, s.f);
            t = target;
            u = s.u;
            if (!(std::abs(u) <= o_.cap))
                throw BlowUp(t, "trajectory exceeded the cap near " + std::to_string(t));
            if (o_.stop && o_.stop(t, u)) {
                tr_.stopped_ = true;
                return;
            }
        }
    }

private:
    const DelayRHS& rhs_;
    const IntegrateOptions& o_;
    DenseTrajectory& tr_;
};

DenseTrajectory integrate(const DelayRHS& rhs, const InitialSegment& init,
                          std::pair<double, double> span, const IntegrateOptions& opts) {
    auto [a, b] = span;
    if (!(b > a)) throw DomainError("integration span must be increasing");
    if (!(opts.tol > 0.0)) throw DomainError("tol must be positive");

    double start = a;
    if (init.kind() == InitialSegment::Kind::Series) {
        if (a > init.switch_at()) throw DomainError("series segment does not reach the span start");
        start = std::min(init.switch_at(), b);
    }

    DenseTrajectory tr;
    const double f0 = init.kind() == InitialSegment::Kind::Series ? init.derivative(start) : 0.0;
    Integrator::seed(tr, init, start, init.start_value(start), f0);
    if (start >= b) return tr;

    IntegrateOptions o = opts;
    // derivative jumps propagate from the start when the history does not match the equation
    const auto k = init.kind();
    if (k == InitialSegment::Kind::Jump || k == InitialSegment::Kind::Constant ||
        k == InitialSegment::Kind::Function) {
        double bp = start;
        for (int i = 0; i < 6; ++i) {
            if (rhs.shift() > 0.0 && rhs.q() == 1.0) bp += rhs.shift();
            else if (rhs.shift() == 0.0 && start > 0.0) bp /= rhs.q();
            else break;
            o.breakpoints.push_back(bp);
        }
    }
    Integrator(rhs, o, tr).run(start, b);
    return tr;
}

DenseTrajectory integrate(const DelayRHS& rhs, const InitialSegment& init,
                          std::pair<double, double> span, double tol) {
    IntegrateOptions o;
    o.tol = tol;
    return integrate(rhs, init, span, o);
}

// monotonicity and the upper bound on H

MonotonicityReport monotonicity_and_bound_check(const DenseTrajectory& traj, const ModelParams& p,
                                                double slack, double positivity_floor) {
    MonotonicityReport rep;
    const bool strict = p.sigma > 1.0;
    auto check = [&](double y, double H, double dH) {
        ++rep.checked;
        if (H > positivity_floor) {
            if (strict ? !(dH < 0.0) : !(dH <= 0.0)) {
                rep.ok = false;
                rep.violations.push_back({y, "derivative not negative"});
            }
        }
        const double bound = 1.0 / (1.0 + (p.sigma - 1.0) * y) + slack;
        if (H > bound) {
            rep.ok = false;
            rep.violations.push_back({y, "upper bound exceeded"});
        }
    };
    const double start = traj.start();
    if (traj.initial().kind() == InitialSegment::Kind::Series && start > 0.0) {
        for (int i = 0; i < 64; ++i) {
            const double y = start * i / 64.0;
            check(y, traj.initial().value(y), traj.initial().derivative(y));
        }
    }
    const auto& t = traj.nodes();
    const auto& u = traj.values();
    const auto& du = traj.derivatives();
    for (std::size_t i = 0; i < t.size(); ++i) {
        check(t[i], u[i], du[i]);
        if (i + 1 < t.size()) {
            const double m = 0.5 * (t[i] + t[i + 1]);
            check(m, traj.eval(m), traj.derivative(m));
        }
    }
    return rep;
}

}  // namespace gelshoot
