#include "l1rg/l1ac.hpp"

#include <cmath>

namespace l1rg {

void Plant::validate() const {
    const auto nn = A.rows();
    const auto mm = B.cols();
    if (A.cols() != nn || B.rows() != nn || C.cols() != nn || Kx.rows() != mm || Kx.cols() != nn ||
        Kv.rows() != mm) {
        throw DimensionError("Plant: inconsistent matrix sizes");
    }
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !Kx.allFinite() || !Kv.allFinite()) {
        throw ParameterError("Plant: non-finite entries");
    }
    if (!is_hurwitz(Am())) {
        throw StabilityError("Plant: A + B Kx is not Hurwitz");
    }
}

namespace {

double inf_norm(const Mat& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

// composite Simpson over samples on a uniform grid (odd count)
double simpson(const std::vector<double>& f, double h) {
    double s = f.front() + f.back();
    for (std::size_t k = 1; k + 1 < f.size(); ++k) {
        s += (k % 2 ? 4.0 : 2.0) * f[k];
    }
    return s * h / 3.0;
}

Mat phi_inverse_times_exp(const Mat& Ae, double T) {
    const Mat Phi = integrated_exponential(Ae, T);
    Eigen::PartialPivLU<Mat> lu(Phi);
    if (!(lu.rcond() > 1e-14) || !Phi.allFinite()) {
        throw NumericError("Phi(T) is numerically singular at T = " + std::to_string(T) +
                           "; use a larger T");
    }
    return lu.solve(expm(Ae, T));
}

double bf_over(const UncertaintyModel& f, const Box& Z) { return f.bounds(Z).b_f; }

Box capped(const Box& Z, const std::optional<Box>& cap) { return cap ? intersect(Z, *cap) : Z; }

double scaled_max(const Vec& rows, Eigen::Index i, double offdiag) {
    double best = 0.0;
    for (Eigen::Index k = 0; k < rows.size(); ++k) {
        best = std::max(best, (k == i ? 1.0 : offdiag) * rows(k));
    }
    return best;
}

}  // namespace

AlphaConstants alpha_constants(const Mat& Ae, const Mat& B, double T, int grid) {
    if (!(T > 0)) {
        throw ParameterError("alpha_constants: T must be positive");
    }
    if (!is_hurwitz(Ae)) {
        throw StabilityError("alpha_constants: Ae is not Hurwitz");
    }
    const int N = std::max(grid, 200) | 1;
    const double h = T / (N - 1);
    const Mat Eh = expm(Ae, h);
    const Mat M = phi_inverse_times_exp(Ae, T);

    std::vector<double> fb(static_cast<std::size_t>(N));
    std::vector<double> fm(static_cast<std::size_t>(N));
    Mat E = Mat::Identity(Ae.rows(), Ae.cols());
    AlphaConstants out;
    for (int k = 0; k < N; ++k) {
        fb[static_cast<std::size_t>(k)] = inf_norm(E * B);
        fm[static_cast<std::size_t>(k)] = inf_norm(E * M);
        out.a1 = std::max(out.a1, inf_norm(E));
        E = Eh * E;
    }
    out.a0 = simpson(fb, h);
    // the inner integral is nondecreasing in t, so its max over [0, T] is at T
    out.a2 = simpson(fm, h);
    return out;
}

double gamma0(double T, double b_f_Xa, const Mat& Ae, const Mat& B) {
    if (b_f_Xa == 0.0) {
        return 0.0;
    }
    const AlphaConstants a = alpha_constants(Ae, B, T);
    return b_f_Xa * a.a0 * (a.a1 + a.a2 + 1.0);
}

LoopNorms loop_norms(const Plant& plant, const Vec& kf) {
    const CascadeData d{plant.Am(), plant.B, plant.Bv(), Mat(), kf};
    LoopNorms out;
    const auto g = l1_norm(realize_cascade(CascadeKind::Gxm, d));
    const auto hv = l1_norm(realize_cascade(CascadeKind::Hxv, d));
    const auto sr = l1_norm(realize_cascade(CascadeKind::STimesResolvent, d));
    out.gxm_rows = g.rows;
    out.hxv_rows = hv.rows;
    out.sres_rows = sr.rows;
    out.gxm = g.total;
    out.hxv = hv.total;
    out.sres = sr.total;
    return out;
}

RhoR find_rho_r(const BoundProblem& prob, const Vec& kf) {
    return find_rho_r(prob, kf, loop_norms(prob.plant, kf));
}

RhoR find_rho_r(const BoundProblem& prob, [[maybe_unused]] const Vec& kf, const LoopNorms& norms) {
    if (prob.f == nullptr) {
        throw ParameterError("find_rho_r: no uncertainty model");
    }
    if (prob.v_bound < 0) {
        throw ParameterError("find_rho_r: negative command bound");
    }
    const auto n = prob.plant.n();
    RhoR out;
    out.gxm_norm = norms.gxm;
    out.hxv_norm = norms.hxv;
    out.rho_in = norms.sres * prob.X0.max_abs().maxCoeff();
    const double base = norms.hxv * prob.v_bound + out.rho_in;

    auto feasible = [&](double rho) {
        const double b = bf_over(*prob.f, capped(Box::ball(n, rho), prob.state_cap));
        return norms.gxm * b < rho - base - prob.margin;
    };

    // b_f grows with rho, so the feasible set need not be an interval: scan
    // upward geometrically for the first feasible point, then bisect.
    double lo = std::max(base, 1e-12);
    double hi = lo;
    while (!feasible(hi)) {
        lo = hi;
        hi *= 1.01;
        if (hi > prob.ceiling) {
            throw DesignError("stability condition |Gxm| b_f(Xr) < rho_r - |Hxv| |v| - rho_in",
                              "filter bandwidth kf (or a smaller command bound)",
                              "no rho_r below " + std::to_string(prob.ceiling));
        }
    }
    while (hi - lo > prob.resolution * hi) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    out.rho_r = hi;
    out.Xr = capped(Box::ball(n, hi), prob.state_cap);
    out.b_f_Xr = bf_over(*prob.f, out.Xr);
    out.Xa = capped(Box::ball(n, hi + prob.gamma1), prob.state_cap);
    out.L_f_Xa = prob.f->bounds(out.Xa).L_f;
    out.stability = {"|Gxm| b_f(Xr) < rho_r - |Hxv| |v| - rho_in", norms.gxm * out.b_f_Xr,
                     hi - base, norms.gxm * out.b_f_Xr < hi - base};
    out.lipschitz = {"|Gxm| L_f(Xa) < 1", norms.gxm * out.L_f_Xa, 1.0, norms.gxm * out.L_f_Xa < 1.0};
    if (!out.lipschitz.holds) {
        throw DesignError(out.lipschitz.name, "filter bandwidth kf",
                          "lhs = " + std::to_string(out.lipschitz.lhs));
    }
    return out;
}

Mat scaling_matrix(Eigen::Index n, Eigen::Index i, double offdiag) {
    if (!(offdiag > 0 && offdiag <= 1)) {
        throw ParameterError("scaling_matrix: off-diagonal entries must lie in (0, 1]");
    }
    Vec d = Vec::Constant(n, offdiag);
    d(i) = 1.0;
    return d.asDiagonal();
}

std::optional<double> scaled_rho_r(const LoopNorms& norms, Eigen::Index i, double offdiag, double b_f,
                                   double v_bound, double x0_max, double margin, double resolution,
                                   double ceiling) {
    const double g = scaled_max(norms.gxm_rows, i, offdiag);
    const double hv = scaled_max(norms.hxv_rows, i, offdiag);
    const double rin = scaled_max(norms.sres_rows, i, offdiag) * x0_max;
    auto feasible = [&](double rho) { return g * b_f < rho - hv * v_bound - rin - margin; };
    if (!feasible(ceiling)) {
        return std::nullopt;
    }
    double lo = 0.0;
    double hi = ceiling;
    while (hi - lo > resolution * hi) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

double sup_command_norm(const LoopNorms& norms, Eigen::Index i, double offdiag, double b_f,
                        double x0_max, double cap, double margin) {
    auto ok = [&](double v) {
        const auto r = scaled_rho_r(norms, i, offdiag, b_f, v, x0_max, margin, 1e-10, 1e6);
        return r && *r <= cap;
    };
    if (!ok(0.0)) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (ok(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9) {
            return hi;
        }
    }
    while (hi - lo > 1e-9 * hi) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

ScaledBounds scaled_state_bounds(const BoundProblem& prob, const RhoR& base,
                                 const LoopNorms& norms, double Tx_offdiag, double tol) {
    const auto n = prob.plant.n();
    const double x0_max = prob.X0.max_abs().maxCoeff();
    ScaledBounds out;
    out.rho_r_i.resize(n);
    out.gxm_scaled.resize(n);
    out.rho_in_i.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.gxm_scaled(i) = scaled_max(norms.gxm_rows, i, Tx_offdiag);
        out.rho_in_i(i) = scaled_max(norms.sres_rows, i, Tx_offdiag) * x0_max;
    }

    double b = base.b_f_Xr;
    for (int it = 0; it < 1000; ++it) {
        out.outer_iterations = it + 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = scaled_rho_r(norms, i, Tx_offdiag, b, prob.v_bound, x0_max, prob.margin,
                                        prob.resolution, prob.ceiling);
            if (r) {
                out.rho_r_i(i) = std::min(*r, base.rho_r);
            } else {
                out.rho_r_i(i) = base.rho_r;
                out.fallback_used = true;
            }
        }
        out.Xr = capped(Box::symmetric(out.rho_r_i), prob.state_cap);
        const double b_new = bf_over(*prob.f, out.Xr);
        if (b - b_new <= tol) {
            break;
        }
        b = b_new;
    }
    out.b_f_Xr = b;
    out.rho_i = out.rho_r_i.array() + prob.gamma1;
    out.tilde_rho_i = out.gxm_scaled * b;
    out.tilde_rho_i.array() += prob.gamma1;
    out.Xa = capped(Box::symmetric(out.rho_i), prob.state_cap);
    out.L_f_Xa = prob.f->bounds(out.Xa).L_f;
    return out;
}

InputBounds input_bounds(const Vec& b_fj_Xr, const Mat& Kx, const Mat& C, const Vec& tilde_rho_i,
                         double gamma2) {
    if (Kx.rows() != b_fj_Xr.size() || Kx.cols() != tilde_rho_i.size() || C.cols() != tilde_rho_i.size()) {
        throw DimensionError("input_bounds: size mismatch");
    }
    InputBounds out;
    // the first-order filter has unit L1 norm in every channel
    out.rho_ua_j = b_fj_Xr.array() + gamma2;
    out.tilde_rho_u_j = out.rho_ua_j + Kx.cwiseAbs() * tilde_rho_i;
    out.tilde_rho_y_j = C.cwiseAbs() * tilde_rho_i;
    return out;
}

double gamma2_of(const Vec& kf, double L_f_Xa, double gamma1, double gamma0_val, const Mat& Ae,
                 const Mat& B) {
    const double filt = l1_norm(first_order_filter(kf)).total;
    double out = filt * L_f_Xa * gamma1;
    if (gamma0_val != 0.0) {
        const CascadeData d{Ae, B, Mat(), Ae, kf};
        out += l1_norm(realize_cascade(CascadeKind::FilterBdagSIminusAe, d)).total * gamma0_val;
    }
    return out;
}

namespace {

double hxm_filter_norm(const Plant& plant, const Vec& kf, const Mat& Ae) {
    const CascadeData d{plant.Am(), plant.B, plant.Bv(), Ae, kf};
    return l1_norm(realize_cascade(CascadeKind::HxmFilterBdagSIminusAe, d)).total;
}

Condition sample_condition(double h, double g0, double gxm_norm, double L_f_Xa, double gamma1) {
    const double denom = 1.0 - gxm_norm * L_f_Xa;
    if (!(denom > 0)) {
        throw DesignError("|Gxm| L_f(Xa) < 1", "filter bandwidth kf", "denominator is not positive");
    }
    const double lhs = h * g0 / denom;
    return {"|Hxm C B^+ (sI-Ae)| gamma0(T) / (1 - |Gxm| L_f) < gamma1", lhs, gamma1, lhs < gamma1};
}

}  // namespace

Condition sample_time_condition(const Plant& plant, const Vec& kf, const Mat& Ae, double L_f_Xa,
                                double b_f_Xa, double gamma1, double T, double gxm_norm) {
    const double h = hxm_filter_norm(plant, kf, Ae);
    return sample_condition(h, gamma0(T, b_f_Xa, Ae, plant.B), gxm_norm, L_f_Xa, gamma1);
}

SampleTimeChoice choose_sample_time(const Plant& plant, const Vec& kf, const Mat& Ae, double L_f_Xa,
                                    double b_f_Xa, double gamma1, double gxm_norm, double T_start) {
    const double h = hxm_filter_norm(plant, kf, Ae);
    for (double T = T_start; T >= 1e-12; T /= 10.0) {
        const double g0 = gamma0(T, b_f_Xa, Ae, plant.B);
        const Condition c = sample_condition(h, g0, gxm_norm, L_f_Xa, gamma1);
        if (c.holds) {
            return {T, g0, c};
        }
    }
    throw DesignError("sample-time condition", "estimation sample time T (or larger gamma1)",
                      "no T down to 1e-12 satisfies it");
}

AdaptiveLaw::AdaptiveLaw(const Mat& Ae, const Mat& B, double T) : m_(B.cols()), T_(T) {
    if (!(T > 0)) {
        throw ParameterError("AdaptiveLaw: T must be positive");
    }
    const auto n = B.rows();
    Bperp_ = orthogonal_complement(B);
    Mat BB(n, n);
    BB << B, Bperp_;
    gain_ = -BB.partialPivLu().solve(phi_inverse_times_exp(Ae, T));
}

std::pair<Vec, Vec> AdaptiveLaw::update(const Vec& xtilde) const {
    const Vec s = gain_ * xtilde;
    return {s.head(m_), s.tail(s.size() - m_)};
}

std::pair<Vec, Vec> adaptive_update(const Vec& xtilde, const Mat& Ae, const Mat& B, const Mat& Bperp,
                                    double T) {
    const auto n = B.rows();
    Mat BB(n, n);
    BB << B, Bperp;
    const Vec s = -BB.partialPivLu().solve(phi_inverse_times_exp(Ae, T) * xtilde);
    return {s.head(B.cols()), s.tail(n - B.cols())};
}

Vec predictor_derivative(const Vec& xhat, const Vec& x, const Vec& v, const Vec& ua, const Vec& sigma1,
                         const Vec& sigma2, const PredictorMatrices& M) {
    Vec d = M.Am * x + M.Bv * v + M.B * (ua + sigma1) + M.Ae * (xhat - x);
    if (sigma2.size() > 0) {
        d += M.Bperp * sigma2;
    }
    return d;
}

Vec control_filter_derivative(const Vec& ua, const Vec& sigma1, const Vec& kf) {
    return -kf.cwiseProduct(ua + sigma1);
}

}  // namespace l1rg
