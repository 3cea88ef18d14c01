#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gelshoot/params.hpp"

namespace gelshoot {

// u'(t) = f(t, u(t), u(tau(t))) with tau(t) = q*t - shift, always tau(t) < t for t > 0
class DelayRHS {
public:
    enum class Kind { HEquation, PhiEquation, LimitH, RescaledH, LinearG, PhiGamma1, PhiGamma1Log, Custom };
    using Fn = std::function<double(double t, double u, double ud)>;

    static DelayRHS h_equation(const ModelParams& p);        // H' = -sigma H(qy)^2 + H^2
    static DelayRHS phi_equation(const ModelParams& p);      // phi' = phi - theta phi(z-d)^2 + phi^2
    static DelayRHS limit_h(double eps);                      // h' = -h(y(1+eps)/2)^2
    static DelayRHS rescaled_h(double eps, double eta);       // h' = -h(x(1+eps)/2)^2 + eta h^2
    static DelayRHS linear_g();                               // phi' = phi - 2 phi(x/2)
    static DelayRHS phi_gamma1(double b);                     // b x Phi' = Phi^2 - Phi(x/2)^2
    static DelayRHS phi_gamma1_log(double b);                 // same in s = ln x
    static DelayRHS custom(Fn f, double q, double shift);

    Kind kind() const { return kind_; }
    double q() const { return q_; }
    double shift() const { return shift_; }
    double delayed(double t) const { return q_ * t - shift_; }
    double operator()(double t, double u, double ud) const;

private:
    DelayRHS(Kind k, double c1, double c2, double q, double shift)
        : kind_(k), c1_(c1), c2_(c2), q_(q), shift_(shift) {}
    Kind kind_;
    double c1_, c2_;
    double q_, shift_;
    Fn fn_;
};

class InitialSegment {
public:
    enum class Kind { Point, Series, Constant, Jump, Function };

    static InitialSegment point(double value);  // no history, only valid when tau(t) >= start
    static InitialSegment series(PowerSeries s, double switch_at);
    static InitialSegment constant(double c);
    static InitialSegment jump(double value);   // value at the start, zero before it
    static InitialSegment function(std::function<double(double)> f,
                                   std::function<double(double)> df = {});

    Kind kind() const { return kind_; }
    double switch_at() const { return switch_at_; }
    const PowerSeries& power_series() const { return series_; }

    // value at the start point of integration
    double start_value(double start) const;
    double value(double t) const;
    double derivative(double t) const;

private:
    Kind kind_ = Kind::Point;
    double c_ = 0.0;
    double switch_at_ = 0.0;
    PowerSeries series_;
    std::function<double(double)> f_, df_;
};

enum class Side { Left, Right };

class DenseTrajectory {
public:
    const std::vector<double>& nodes() const { return t_; }
    const std::vector<double>& values() const { return u_; }
    const std::vector<double>& derivatives() const { return dl_; }
    const InitialSegment& initial() const { return *init_; }

    double start() const { return t_.front(); }
    double end() const { return t_.back(); }
    std::size_t size() const { return t_.size(); }

    // cubic Hermite between nodes; below the first node the initial segment answers
    double eval(double t, Side side = Side::Right) const;
    double derivative(double t) const;

    bool stopped_early() const { return stopped_; }
    double lipschitz_max() const { return lipschitz_; }
    std::size_t rejected_steps() const { return rejected_; }

    void write_csv(std::ostream& os, const std::string& xname = "y") const;

private:
    friend class Integrator;
    std::vector<double> t_, u_, dl_, dr_;
    std::shared_ptr<const InitialSegment> init_;
    bool stopped_ = false;
    double lipschitz_ = 0.0;
    std::size_t rejected_ = 0;
};

struct IntegrateOptions {
    double tol = 1e-10;
    double cap = 1e12;
    double scale_floor = 1.0;  // local error compared against tol*max(|u|, scale_floor)
    double h_init = 0.0;
    double h_max = 0.0;
    std::vector<double> breakpoints;
    std::vector<double> fixed_nodes;  // step through exactly these, no error control
    std::function<bool(double, double)> stop;
};

DenseTrajectory integrate(const DelayRHS& rhs, const InitialSegment& init,
                          std::pair<double, double> span, const IntegrateOptions& opts);
DenseTrajectory integrate(const DelayRHS& rhs, const InitialSegment& init,
                          std::pair<double, double> span, double tol = 1e-10);

double eval(const DenseTrajectory& traj, double y);

struct BoundViolation {
    double y;
    std::string what;
};

struct MonotonicityReport {
    bool ok = true;
    std::size_t checked = 0;
    std::vector<BoundViolation> violations;
};

// H' < 0 while H > positivity_floor and H <= 1/(1+(sigma-1)y) + slack
MonotonicityReport monotonicity_and_bound_check(const DenseTrajectory& traj, const ModelParams& p,
                                                double slack = 1e-9,
                                                double positivity_floor = 1e-9);

}  // namespace gelshoot
