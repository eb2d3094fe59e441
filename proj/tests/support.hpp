#pragma once

// Fixtures and independent numerical oracles shared by the tests.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "l1rg/config.hpp"

namespace l1rg::testing {

inline std::string config_path(const std::string& name) { return std::string(L1RG_CONFIG_DIR) + "/" + name; }

inline ExperimentConfig f16(const std::string& name = "f16_kf200.json") { return load_config(config_path(name)); }

/// Am = -1, B = Bv = 1, f = 0.1 sin t, X = [-2, 2], U = [-3, 3].
inline ExperimentConfig scalar_toy() {
    ExperimentConfig c;
    c.name = "scalar_toy";
    c.A = Mat::Zero(1, 1);
    c.B = Mat::Ones(1, 1);
    c.C = Mat::Ones(1, 1);
    c.Kx = -Mat::Ones(1, 1);
    c.Kv = Mat::Ones(1, 1);
    c.X = Box::ball(1, 2.0);
    c.U = Box::ball(1, 3.0);
    c.X0 = Box::ball(1, 0.1);
    c.r_bound = 1.0;
    c.v_bound = 1.0;
    c.uncertainty = "tabulated";
    TabulatedUncertainty::Channel ch;
    ch.a = 0.1;
    ch.w = 1.0;
    ch.g = Vec::Zero(1);
    ch.q = Vec::Zero(1);
    c.channels = {ch};
    c.kf = Vec::Constant(1, 50.0);
    c.ae_scale = -10.0;
    c.gamma1 = 0.01;
    c.T = 1e-3;
    c.Td = 0.01;
    c.k_max = 500;
    c.r = Schedule::constant(Vec::Constant(1, 0.8));
    c.horizon = 5.0;
    return c;
}

using Rhs = std::function<Vec(double, const Vec&)>;

/// Classical RK4 from t0 to t1 in `steps` equal steps.
inline Vec rk4_integrate(const Rhs& f, Vec z, double t0, double t1, long steps) {
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * h;
        const Vec k1 = f(t, z);
        const Vec k2 = f(t + h / 2, z + h / 2 * k1);
        const Vec k3 = f(t + h / 2, z + h / 2 * k2);
        const Vec k4 = f(t + h, z + h * k3);
        z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return z;
}

/// Row-wise induced L1 norm from a simulated impulse response:
/// |D| + int_0^horizon |C x(t)| dt with x(0) = B e_j, RK4 and the trapezoid rule.
inline Vec impulse_l1_rows(const StateSpaced& sys, double h, double horizon) {
    const auto p = sys.C.rows();
    Vec rows = sys.D.cwiseAbs().rowwise().sum();
    Mat acc = Mat::Zero(p, sys.B.cols());
    const long N = std::lround(horizon / h);
    for (Eigen::Index j = 0; j < sys.B.cols(); ++j) {
        Vec x = sys.B.col(j);
        Vec prev = (sys.C * x).cwiseAbs();
        for (long k = 0; k < N; ++k) {
            const Vec k1 = sys.A * x;
            const Vec k2 = sys.A * (x + h / 2 * k1);
            const Vec k3 = sys.A * (x + h / 2 * k2);
            const Vec k4 = sys.A * (x + h * k3);
            x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            const Vec cur = (sys.C * x).cwiseAbs();
            acc.col(j) += h / 2 * (prev + cur);
            prev = cur;
        }
    }
    return rows + acc.rowwise().sum();
}

/// Largest kappa in [0, 1] keeping (v_prev + kappa (r - v_prev), xn) in the polytope, by bisection.
inline double kappa_bisection(const Polytope& P, const Vec& v_prev, const Vec& xn, const Vec& r) {
    auto ok = [&](double k) {
        Vec z(v_prev.size() + xn.size());
        z << v_prev + k * (r - v_prev), xn;
        return P.contains(z, 0.0);
    };
    if (ok(1.0)) {
        return 1.0;
    }
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

/// Hit-and-run walk inside {A z <= b} from an interior point. Every other
/// sample is a chord endpoint, so the boundary is exercised too.
inline std::vector<Vec> hit_and_run(const Polytope& P, Vec z, int count, std::uint64_t seed, int thin = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01(0.0, 1.0);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    std::vector<Vec> out;
    for (int step = 0; static_cast<int>(out.size()) < count; ++step) {
        Vec d = Vec::NullaryExpr(P.dim(), [&] { return N01(rng); });
        d.normalize();
        const Vec slack = P.offsets - P.normals * z;
        const Vec rate = P.normals * d;
        double lo = -1e300, hi = 1e300;
        for (Eigen::Index i = 0; i < rate.size(); ++i) {
            if (rate(i) > 1e-14) {
                hi = std::min(hi, std::max(0.0, slack(i)) / rate(i));
            } else if (rate(i) < -1e-14) {
                lo = std::max(lo, -std::max(0.0, slack(i)) / -rate(i));
            }
        }
        if (step % thin == 0 && (step / thin) % 2 == 1) {
            out.push_back(z + (U01(rng) < 0.5 ? lo : hi) * d);
        }
        z += (lo + (hi - lo) * U01(rng)) * d;
        if (step % thin == 0 && (step / thin) % 2 == 0) {
            out.push_back(z);
        }
    }
    return out;
}

}  // namespace l1rg::testing
