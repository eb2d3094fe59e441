#include "l1rg/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace l1rg {

void Schedule::add(double t, const Vec& value) {
    if (!times.empty() && t < times.back()) {
        throw ParameterError("Schedule: breakpoints must be non-decreasing");
    }
    times.push_back(t);
    values.push_back(value);
}

const Vec& Schedule::at(double t) const {
    if (times.empty()) {
        throw ParameterError("Schedule: empty");
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    auto it = std::upper_bound(times.begin(), times.end(), t + tol);
    if (it == times.begin()) {
        return values.front();
    }
    return values[static_cast<std::size_t>(it - times.begin() - 1)];
}

Schedule SimTrace::command() const {
    Schedule s;
    for (std::size_t k = 0; k < rows(); ++k) {
        if (k == 0 || v[k] != v[k - 1]) {
            s.add(t[k], v[k]);
        }
    }
    return s;
}

namespace {

long ticks(double period, double h, const char* what) {
    const double q = period / h;
    const long k = std::lround(q);
    if (k < 1 || std::abs(q - static_cast<double>(k)) > 1e-6 * q) {
        throw ParameterError(std::string("simulation step h must divide ") + what);
    }
    return k;
}

long steps(double horizon, double h) {
    if (!(horizon > 0) || !(h > 0)) {
        throw ParameterError("simulation: horizon and h must be positive");
    }
    return std::lround(horizon / h);
}

template <class F>
Vec rk4(F&& deriv, double t, const Vec& z, double h) {
    const Vec k1 = deriv(t, z);
    const Vec k2 = deriv(t + h / 2, z + h / 2 * k1);
    const Vec k3 = deriv(t + h / 2, z + h / 2 * k2);
    const Vec k4 = deriv(t + h, z + h * k3);
    return z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

struct Row {
    double t;
    Vec x, xn, u, ub, ua, v, r, sigma1, sigma2, xtilde, f;
    double kappa;
};

void log_row(SimTrace& tr, Row row) {
    tr.t.push_back(row.t);
    tr.x.push_back(std::move(row.x));
    tr.xn.push_back(std::move(row.xn));
    tr.u.push_back(std::move(row.u));
    tr.ub.push_back(std::move(row.ub));
    tr.ua.push_back(std::move(row.ua));
    tr.v.push_back(std::move(row.v));
    tr.r.push_back(std::move(row.r));
    tr.sigma1.push_back(std::move(row.sigma1));
    tr.sigma2.push_back(std::move(row.sigma2));
    tr.xtilde.push_back(std::move(row.xtilde));
    tr.f.push_back(std::move(row.f));
    tr.kappa.push_back(row.kappa);
}

Vec initial_state(const SimOptions& opt, Eigen::Index n) {
    if (opt.x0.size() == 0) {
        return Vec::Zero(n);
    }
    if (opt.x0.size() != n) {
        throw DimensionError("simulation: x0 has the wrong dimension");
    }
    return opt.x0;
}

void check_finite(const Vec& z, double t, const char* who) {
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e12) {
        throw DivergenceError(t, std::string(who) + ": state diverged");
    }
}

}  // namespace

SimTrace simulate_l1rg(const L1RGController& ctrl, const UncertaintyModel& f, const Schedule& r,
                       const SimOptions& opt) {
    const Plant& P = ctrl.spec.plant;
    const auto n = P.n();
    const auto m = P.m();
    const double h = opt.h > 0 ? opt.h : ctrl.T_run / 5;
    const long per_T = ticks(ctrl.T_run, h, "T");
    const long per_Td = ticks(ctrl.gov.Td, h, "Td");
    const long N = steps(opt.horizon, h);
    const long stride = std::max(1L, opt.stride);

    const AdaptiveLaw law = ctrl.adaptive_law();
    const PredictorMatrices M = ctrl.predictor();
    const Vec& kf = ctrl.options.l1.kf;
    const Mat Am = P.Am();
    const Mat Bv = P.Bv();

    Vec x = initial_state(opt, n);
    Vec v = ctrl.spec.v0.size() == m ? ctrl.spec.v0 : Vec::Zero(m);
    AdaptiveState ad{x, Vec::Zero(m), Vec::Zero(n - m), Vec::Zero(m), 0.0};
    GovernorState gs{v, x};
    Vec xn = x;
    double kappa = 1.0;

    SimTrace tr;
    tr.h = h;
    tr.stride = stride;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        const Vec& rk = r.at(t);
        const RuntimeStep rs = runtime_step(ctrl, law, Clocks{k, per_T, per_Td}, x, rk, ad, gs, v);
        if (rs.governor_event) {
            kappa = rs.kappa;
        }
        if (k % stride == 0 || k == N) {
            log_row(tr, {t, x, xn, rs.u, rs.ub, ad.ua, v, rk, ad.sigma1, ad.sigma2, ad.xhat - x, f.evaluate(t, x),
                         kappa});
        }
        if (k == N) {
            break;
        }
        Vec z(3 * n + m);
        z << x, ad.xhat, ad.ua, xn;
        auto deriv = [&](double s, const Vec& w) {
            const Vec xs = w.segment(0, n);
            const Vec xh = w.segment(n, n);
            const Vec uas = w.segment(2 * n, m);
            const Vec u = P.Kx * xs + P.Kv * v + uas;
            Vec d(w.size());
            d << P.A * xs + P.B * (u + f.evaluate(s, xs)),
                predictor_derivative(xh, xs, v, uas, ad.sigma1, ad.sigma2, M),
                control_filter_derivative(uas, ad.sigma1, kf), Am * w.segment(2 * n + m, n) + Bv * v;
            return d;
        };
        z = rk4(deriv, t, z, h);
        check_finite(z, t, "simulate_l1rg");
        x = z.segment(0, n);
        ad.xhat = z.segment(n, n);
        ad.ua = z.segment(2 * n, m);
        xn = z.segment(2 * n + m, n);
    }
    return tr;
}

SimTrace simulate_nominal(const Plant& plant, const Schedule& v, const SimOptions& opt) {
    const auto n = plant.n();
    const auto m = plant.m();
    const double h = opt.h;
    const long N = steps(opt.horizon, h);
    const long stride = std::max(1L, opt.stride);
    const Mat Am = plant.Am();
    const Mat Bv = plant.Bv();
    Vec xn = initial_state(opt, n);

    SimTrace tr;
    tr.h = h;
    tr.stride = stride;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        const Vec& vk = v.at(t);
        if (k % stride == 0 || k == N) {
            const Vec un = plant.Kx * xn + plant.Kv * vk;
            log_row(tr, {t, xn, xn, un, un, Vec::Zero(m), vk, vk, Vec::Zero(m), Vec::Zero(n - m), Vec::Zero(n),
                         Vec::Zero(m), 1.0});
        }
        if (k == N) {
            break;
        }
        xn = rk4([&](double, const Vec& w) { return Vec(Am * w + Bv * vk); }, t, xn, h);
        check_finite(xn, t, "simulate_nominal");
    }
    return tr;
}

SimTrace simulate_reference(const Plant& plant, const Vec& kf, const UncertaintyModel& f, const Schedule& v,
                            const SimOptions& opt) {
    const auto n = plant.n();
    const auto m = plant.m();
    if (kf.size() != m) {
        throw DimensionError("simulate_reference: one bandwidth per input channel");
    }
    const double h = opt.h;
    const long N = steps(opt.horizon, h);
    const long stride = std::max(1L, opt.stride);
    const Mat Am = plant.Am();
    const Mat Bv = plant.Bv();
    Vec xr = initial_state(opt, n);
    Vec ur = Vec::Zero(m);
    Vec xn = xr;

    SimTrace tr;
    tr.h = h;
    tr.stride = stride;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        const Vec& vk = v.at(t);
        if (k % stride == 0 || k == N) {
            const Vec ub = plant.Kx * xr + plant.Kv * vk;
            log_row(tr, {t, xr, xn, ub + ur, ub, ur, vk, vk, Vec::Zero(m), Vec::Zero(n - m), Vec::Zero(n),
                         f.evaluate(t, xr), 1.0});
        }
        if (k == N) {
            break;
        }
        Vec z(2 * n + m);
        z << xr, ur, xn;
        auto deriv = [&](double s, const Vec& w) {
            const Vec xs = w.segment(0, n);
            const Vec us = w.segment(n, m);
            const Vec fs = f.evaluate(s, xs);
            Vec d(w.size());
            d << Am * xs + Bv * vk + plant.B * (us + fs), -kf.cwiseProduct(us + fs),
                Am * w.segment(n + m, n) + Bv * vk;
            return d;
        };
        z = rk4(deriv, t, z, h);
        check_finite(z, t, "simulate_reference");
        xr = z.segment(0, n);
        ur = z.segment(n, m);
        xn = z.segment(n + m, n);
    }
    return tr;
}

SimTrace simulate_plain_rg_baseline(const ProblemSpec& spec, const GovernorDesign& gov, const UncertaintyModel& f,
                                    const Schedule& r, const SimOptions& opt) {
    const Plant& P = spec.plant;
    const auto n = P.n();
    const auto m = P.m();
    const double h = opt.h > 0 ? opt.h : gov.Td / 25;
    const long per_Td = ticks(gov.Td, h, "Td");
    const long N = steps(opt.horizon, h);
    const long stride = std::max(1L, opt.stride);
    const Mat Am = P.Am();
    const Mat Bv = P.Bv();

    Vec x = initial_state(opt, n);
    Vec v = spec.v0.size() == m ? spec.v0 : Vec::Zero(m);
    GovernorState gs{v, x};
    Vec xn = x;
    double kappa = 1.0;

    SimTrace tr;
    tr.h = h;
    tr.stride = stride;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * h;
        const Vec& rk = r.at(t);
        if (k % per_Td == 0) {
            const RgStep st = rg_step(gov, gs, rk);
            gs = nominal_model_step(gov, gs, st.v);
            v = st.v;
            kappa = st.kappa;
        }
        if (k % stride == 0 || k == N) {
            const Vec u = P.Kx * x + P.Kv * v;
            log_row(tr, {t, x, xn, u, u, Vec::Zero(m), v, rk, Vec::Zero(m), Vec::Zero(n - m), Vec::Zero(n),
                         f.evaluate(t, x), kappa});
        }
        if (k == N) {
            break;
        }
        Vec z(2 * n);
        z << x, xn;
        auto deriv = [&](double s, const Vec& w) {
            const Vec xs = w.head(n);
            Vec d(w.size());
            d << P.A * xs + P.B * (P.Kx * xs + P.Kv * v + f.evaluate(s, xs)), Am * w.tail(n) + Bv * v;
            return d;
        };
        z = rk4(deriv, t, z, h);
        check_finite(z, t, "simulate_plain_rg_baseline");
        x = z.head(n);
        xn = z.tail(n);
    }
    return tr;
}

bool VerificationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.applicable || c.satisfied; });
}

std::string VerificationReport::to_table() const {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %14s %14s %14s  %-6s %s\n", "check", "bound", "empirical", "margin",
                  "status", "note");
    os << line;
    for (const auto& c : checks) {
        std::string status = !c.applicable ? "n/a" : c.satisfied ? "pass" : "FAIL";
        std::string note;
        if (c.first_violation) {
            note = "first violation at t = " + std::to_string(*c.first_violation);
        } else if (c.applicable && !c.certified) {
            note = "empirical";
        }
        std::snprintf(line, sizeof line, "%-16s %14.6g %14.6g %14.6g  %-6s %s\n", c.name.c_str(), c.theoretical,
                      c.empirical, c.margin, status.c_str(), note.c_str());
        os << line;
    }
    return os.str();
}

BoundTargets targets_of(const L1RGController& ctrl) {
    const BoundSet& b = ctrl.bounds;
    return {b.tilde_rho_i, b.tilde_rho_y_j, b.rho_ua_j,
            gamma0(ctrl.T_run, b.b_f_Xa, ctrl.options.l1.Ae, ctrl.spec.plant.B), ctrl.certified};
}

namespace {

// Membership of one scalar component in [lo, up] over the trace, up to rounding.
BoundCheck membership(const std::string& name, const SimTrace& tr, const std::vector<Vec>& data, Eigen::Index i,
                      double lo, double up) {
    BoundCheck c;
    c.name = name;
    c.theoretical = std::max(std::abs(lo), std::abs(up));
    c.margin = std::numeric_limits<double>::infinity();
    const double tol = 1e-9 * std::max(1.0, c.theoretical);
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        const double z = data[k](i);
        if (std::abs(z) > c.empirical) {
            c.empirical = std::abs(z);
            c.worst_time = tr.t[k];
        }
        const double slack = std::min(up - z, z - lo);
        c.margin = std::min(c.margin, slack);
        if (slack < -tol && !c.first_violation) {
            c.first_violation = tr.t[k];
        }
    }
    c.satisfied = !c.first_violation;
    return c;
}

template <class Get>
BoundCheck peak(const std::string& name, const SimTrace& tr, Get get, std::optional<double> bound, bool certified) {
    BoundCheck c;
    c.name = name;
    c.applicable = bound.has_value();
    c.certified = certified;
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        const double z = get(k);
        if (z > c.empirical) {
            c.empirical = z;
            c.worst_time = tr.t[k];
        }
        if (bound && z > *bound && !c.first_violation) {
            c.first_violation = tr.t[k];
        }
    }
    c.theoretical = bound.value_or(0.0);
    c.margin = c.theoretical - c.empirical;
    c.satisfied = !c.applicable || !c.first_violation;
    return c;
}

std::optional<double> entry(const Vec& v, Eigen::Index i) {
    return i < v.size() ? std::optional<double>(v(i)) : std::nullopt;
}

}  // namespace

VerificationReport verify_bounds(const SimTrace& tr, const BoundTargets& tg, const Box& X, const Box& U,
                                 const Mat& C) {
    const auto n = tr.n();
    const auto m = tr.m();
    if (tr.rows() == 0) {
        throw DimensionError("verify_bounds: empty trace");
    }
    if (X.dim() != n || U.dim() != m || C.cols() != n) {
        throw DimensionError("verify_bounds: trace dimensions do not match the constraints");
    }
    VerificationReport rep;
    for (Eigen::Index i = 0; i < n; ++i) {
        rep.checks.push_back(membership("x" + std::to_string(i + 1) + " in X", tr, tr.x, i, X.lower(i), X.upper(i)));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        rep.checks.push_back(membership("u" + std::to_string(j + 1) + " in U", tr, tr.u, j, U.lower(j), U.upper(j)));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        rep.checks.push_back(peak(
            "|x" + std::to_string(i + 1) + " - xn" + std::to_string(i + 1) + "|", tr,
            [&](std::size_t k) { return std::abs(tr.x[k](i) - tr.xn[k](i)); }, entry(tg.tilde_rho_i, i), true));
    }
    for (Eigen::Index j = 0; j < C.rows(); ++j) {
        rep.checks.push_back(peak(
            "|y" + std::to_string(j + 1) + " - yn" + std::to_string(j + 1) + "|", tr,
            [&](std::size_t k) { return std::abs(C.row(j).dot(tr.x[k] - tr.xn[k])); }, entry(tg.tilde_rho_y_j, j),
            true));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        rep.checks.push_back(peak(
            "|ua" + std::to_string(j + 1) + "|", tr, [&](std::size_t k) { return std::abs(tr.ua[k](j)); },
            entry(tg.rho_ua_j, j), tg.certified));
    }
    rep.checks.push_back(peak(
        "|xtilde|", tr, [&](std::size_t k) { return tr.xtilde[k].cwiseAbs().maxCoeff(); },
        tg.gamma0 >= 0 ? std::optional<double>(tg.gamma0) : std::nullopt, tg.certified));
    return rep;
}

Vec max_state_gap(const SimTrace& a, const SimTrace& b) {
    if (a.rows() != b.rows() || a.n() != b.n()) {
        throw DimensionError("max_state_gap: traces do not share a grid");
    }
    Vec gap = Vec::Zero(a.n());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        if (std::abs(a.t[k] - b.t[k]) > 1e-9 * std::max(1.0, std::abs(a.t[k]))) {
            throw DimensionError("max_state_gap: traces do not share a grid");
        }
        gap = gap.cwiseMax((a.x[k] - b.x[k]).cwiseAbs());
    }
    return gap;
}

namespace {

void header(std::ostream& os, const char* prefix, Eigen::Index count) {
    for (Eigen::Index i = 1; i <= count; ++i) {
        os << ',' << prefix << i;
    }
}

void values(std::ostream& os, const Vec& v) {
    char buf[32];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, ",%.17g", v(i));
        os << buf;
    }
}

}  // namespace

void write_csv(std::ostream& os, const SimTrace& tr) {
    const auto n = tr.n();
    const auto m = tr.m();
    const auto p = tr.rows() ? tr.sigma2.front().size() : 0;
    os << 't';
    header(os, "x", n);
    header(os, "xn", n);
    header(os, "u", m);
    header(os, "ua", m);
    header(os, "v", m);
    header(os, "r", m);
    header(os, "sigma1_", m);
    header(os, "f", m);
    header(os, "ub", m);
    header(os, "sigma2_", p);
    header(os, "xtilde", n);
    os << ",kappa\n";
    char buf[32];
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", tr.t[k]);
        os << buf;
        values(os, tr.x[k]);
        values(os, tr.xn[k]);
        values(os, tr.u[k]);
        values(os, tr.ua[k]);
        values(os, tr.v[k]);
        values(os, tr.r[k]);
        values(os, tr.sigma1[k]);
        values(os, tr.f[k]);
        values(os, tr.ub[k]);
        values(os, tr.sigma2[k]);
        values(os, tr.xtilde[k]);
        std::snprintf(buf, sizeof buf, ",%.17g\n", tr.kappa[k]);
        os << buf;
    }
}

namespace {

bool numbered(const std::string& name, const std::string& prefix) {
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) {
        return false;
    }
    return std::all_of(name.begin() + static_cast<long>(prefix.size()), name.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

SimTrace read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) {
        throw DimensionError("read_csv: missing header");
    }
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cols.push_back(c);
        }
    }
    auto count = [&](const std::string& prefix) {
        return static_cast<Eigen::Index>(
            std::count_if(cols.begin(), cols.end(), [&](const std::string& c) { return numbered(c, prefix); }));
    };
    const auto n = count("x");
    const auto m = count("u");
    const auto p = count("sigma2_");
    const auto expected = 1 + 3 * n + 7 * m + p + 1;
    if (cols.empty() || cols.front() != "t" || n == 0 || m == 0 ||
        static_cast<Eigen::Index>(cols.size()) != expected) {
        throw DimensionError("read_csv: unexpected header layout");
    }

    SimTrace tr;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<double> vals;
        vals.reserve(cols.size());
        const char* s = line.c_str();
        while (*s) {
            char* end = nullptr;
            vals.push_back(std::strtod(s, &end));
            if (end == s) {
                throw DimensionError("read_csv: bad number on line " + std::to_string(lineno));
            }
            s = end;
            if (*s == ',') {
                ++s;
            }
        }
        if (static_cast<Eigen::Index>(vals.size()) != expected) {
            throw DimensionError("read_csv: wrong column count on line " + std::to_string(lineno));
        }
        std::size_t at = 0;
        auto take = [&](Eigen::Index k) {
            Vec v(k);
            for (Eigen::Index i = 0; i < k; ++i) {
                v(i) = vals[at++];
            }
            return v;
        };
        Row row;
        row.t = vals[at++];
        row.x = take(n);
        row.xn = take(n);
        row.u = take(m);
        row.ua = take(m);
        row.v = take(m);
        row.r = take(m);
        row.sigma1 = take(m);
        row.f = take(m);
        row.ub = take(m);
        row.sigma2 = take(p);
        row.xtilde = take(n);
        row.kappa = vals[at++];
        log_row(tr, std::move(row));
    }
    if (tr.rows() >= 2) {
        tr.h = tr.t[1] - tr.t[0];
    }
    return tr;
}

}  // namespace l1rg
