#pragma once

// Hybrid RK4 simulation of the closed loops, trace logging and bound checks.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l1rg/controller.hpp"

namespace l1rg {

/// Piecewise-constant signal: the value of the last breakpoint at or before t.
struct Schedule {
    std::vector<double> times;
    std::vector<Vec> values;

    static Schedule constant(const Vec& value) { return {{0.0}, {value}}; }
    void add(double t, const Vec& value);
    const Vec& at(double t) const;
    bool empty() const { return times.empty(); }
};

struct SimTrace {
    double h = 0.0;
    long stride = 1;  ///< integrator steps between logged rows
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> xn;
    std::vector<Vec> u;
    std::vector<Vec> ub;
    std::vector<Vec> ua;
    std::vector<Vec> v;
    std::vector<Vec> r;
    std::vector<Vec> sigma1;
    std::vector<Vec> sigma2;
    std::vector<Vec> xtilde;
    std::vector<Vec> f;
    std::vector<double> kappa;

    std::size_t rows() const { return t.size(); }
    Eigen::Index n() const { return x.empty() ? 0 : x.front().size(); }
    Eigen::Index m() const { return u.empty() ? 0 : u.front().size(); }
    /// The logged command as a schedule (exact when the stride divides the governor period).
    Schedule command() const;
};

struct SimOptions {
    double horizon = 15.0;
    double h = 0.0;   ///< 0 means T_run / 5
    long stride = 1;
    Vec x0;           ///< defaults to zero
};

/// L1-RG closed loop: plant with true f, predictor, filter, adaptive law at
/// multiples of T_run and governor at multiples of Td.
SimTrace simulate_l1rg(const L1RGController& ctrl, const UncertaintyModel& f, const Schedule& r,
                       const SimOptions& opt);

/// xn' = Am xn + Bv v under a replayed command.
SimTrace simulate_nominal(const Plant& plant, const Schedule& v, const SimOptions& opt);

/// Reference system with the non-implementable ideal input ur = -C(s) f(t, xr).
/// xr is logged in the x columns and ur in the ua columns.
SimTrace simulate_reference(const Plant& plant, const Vec& kf, const UncertaintyModel& f, const Schedule& v,
                            const SimOptions& opt);

/// Governor on the untightened constraints and no adaptive input; the plant still sees f.
SimTrace simulate_plain_rg_baseline(const ProblemSpec& spec, const GovernorDesign& gov, const UncertaintyModel& f,
                                    const Schedule& r, const SimOptions& opt);

struct BoundCheck {
    std::string name;
    double theoretical = 0.0;
    double empirical = 0.0;
    bool satisfied = true;
    bool applicable = true;
    bool certified = true;  ///< false when the bound is only empirical at the run-time T
    double margin = 0.0;
    double worst_time = 0.0;
    std::optional<double> first_violation;
};

struct VerificationReport {
    std::vector<BoundCheck> checks;

    bool passed() const;
    std::string to_table() const;
};

/// Theoretical values the traces are compared with; empty vectors mark a
/// check as not applicable (e.g. a plain-RG run).
struct BoundTargets {
    Vec tilde_rho_i;
    Vec tilde_rho_y_j;
    Vec rho_ua_j;
    double gamma0 = -1.0;
    bool certified = true;
};

BoundTargets targets_of(const L1RGController& ctrl);

VerificationReport verify_bounds(const SimTrace& trace, const BoundTargets& targets, const Box& X, const Box& U,
                                 const Mat& C);

/// Column-wise max |a - b| between two traces on the same grid.
Vec max_state_gap(const SimTrace& a, const SimTrace& b);

void write_csv(std::ostream& os, const SimTrace& trace);
SimTrace read_csv(std::istream& is);

}  // namespace l1rg
