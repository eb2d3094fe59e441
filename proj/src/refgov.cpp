#include "l1rg/refgov.hpp"

#include <limits>
#include <string>

namespace l1rg {

Vec GovernorDesign::stack(const Vec& v, const Vec& xn) const {
    if (v.size() != m() || xn.size() != n()) {
        throw DimensionError("governor: (v, xn) size mismatch");
    }
    Vec z(m() + n());
    z << v, xn;
    return z;
}

bool GovernorDesign::admissible(const Vec& v, const Vec& xn, double tol) const {
    return tilOinf.contains(stack(v, xn), tol);
}

double inter_sample_margin(const Mat& Am, const Mat& Bv, const Box& Xn, const Box& V, double Td,
                           int samples) {
    if (Td < 0) {
        throw ParameterError("inter_sample_margin: negative Td");
    }
    if (Td == 0) {
        return 0.0;
    }
    Eigen::FullPivLU<Mat> lu(Am);
    if (!lu.isInvertible()) {
        throw ParameterError("inter_sample_margin: Am is singular");
    }
    const auto n = Am.rows();
    const Mat I = Mat::Identity(n, n);
    auto gap = [&](double tau) { return (expm(Am, tau) - I).cwiseAbs().rowwise().sum().maxCoeff(); };

    samples = std::max(samples, 500);
    double best = 0.0;
    double arg = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double tau = Td * k / samples;
        const double g = gap(tau);
        if (g > best) {
            best = g;
            arg = tau;
        }
    }
    // refine around the best sample
    const double w = Td / samples;
    for (int k = 0; k <= 200; ++k) {
        const double tau = std::clamp(arg - w + 2 * w * k / 200.0, 0.0, Td);
        best = std::max(best, gap(tau));
    }

    const Mat M = lu.solve(Bv);
    const Vec xmax = Xn.max_abs();
    const Vec vmax = V.max_abs();
    const double reach = (xmax + M.cwiseAbs() * vmax).maxCoeff();
    return best * reach;
}

SampledBoxes tighten_for_sampling(const Box& Xn, const Box& Un, const Mat& Kx, double nu) {
    if (nu == 0.0) {
        return {Xn, Un};
    }
    const double kx = Kx.cwiseAbs().rowwise().sum().maxCoeff();
    SampledBoxes out{pontryagin_diff_box(Xn, Box::ball(Xn.dim(), nu)),
                     pontryagin_diff_box(Un, Box::ball(Un.dim(), kx * nu))};
    if (out.Xn_hat.empty() || out.Un_hat.empty()) {
        throw DesignError("sampled constraint sets are empty", "governor sampling time Td",
                          "nu = " + std::to_string(nu));
    }
    return out;
}

namespace {

// Rows of y(k) <= up and -y(k) <= -lo, normalized to unit inf-norm normals.
// Rows whose normal is numerically null are dropped: they only restate
// 0 in Yn, and normalizing them would produce astronomically large offsets.
void append_rows(const Mat& Y, const Box& box, std::vector<std::pair<Vec, double>>& out) {
    const double floor = 1e-9 * std::max(1.0, Y.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < Y.rows(); ++j) {
        const Vec a = Y.row(j).transpose();
        const double s = a.cwiseAbs().maxCoeff();
        if (s < floor) {
            if (box.lower(j) > 0 || box.upper(j) < 0) {
                throw DesignError("constraint set excludes the origin", "constraint boxes",
                                  "output " + std::to_string(j));
            }
            continue;
        }
        out.emplace_back(a / s, box.upper(j) / s);
        out.emplace_back(-a / s, -box.lower(j) / s);
    }
}

bool observable(const Mat& A, const Mat& C) {
    const auto n = A.rows();
    Mat O(C.rows() * n, n);
    Mat Ak = Mat::Identity(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        O.middleRows(k * C.rows(), C.rows()) = C * Ak;
        Ak = A * Ak;
    }
    return Eigen::FullPivLU<Mat>(O).rank() == n;
}

}  // namespace

void build_tilde_o_infinity(GovernorDesign& gd, int k_max) {
    const auto n = gd.n();
    const auto m = gd.m();
    const auto p = gd.Cc.rows();
    if (gd.Ahat.cols() != n || gd.Bhat.rows() != n || gd.Cc.cols() != n || gd.Dc.rows() != p ||
        gd.Dc.cols() != m || gd.Yn.dim() != p) {
        throw DimensionError("build_tilde_o_infinity: inconsistent governor data");
    }
    if (!(gd.epsilon > 0 && gd.epsilon < 1)) {
        throw ParameterError("build_tilde_o_infinity: epsilon must lie in (0, 1)");
    }
    if (gd.Yn.empty()) {
        throw DesignError("constrained output set is empty", "constraint tightening", "Yn is empty");
    }
    if (!is_schur(gd.Ahat)) {
        throw StabilityError("build_tilde_o_infinity: Ahat is not Schur");
    }
    if (!observable(gd.Ahat, gd.Cc)) {
        throw DesignError("(Ahat, Cc) is not observable", "constrained outputs", "rank deficient");
    }

    Polytope P(m + n);
    std::vector<std::pair<Vec, double>> rows;

    // steady-state rows on v alone, tightened by (1 - eps)
    const Mat I = Mat::Identity(n, n);
    const Mat Hss = gd.Dc + gd.Cc * (I - gd.Ahat).partialPivLu().solve(gd.Bhat);
    Mat Yss = Mat::Zero(p, m + n);
    Yss.leftCols(m) = Hss;
    const Box shrunk{(1.0 - gd.epsilon) * gd.Yn.lower, (1.0 - gd.epsilon) * gd.Yn.upper};
    append_rows(Yss, shrunk, rows);

    Mat Mx = I;                  // Ahat^k
    Mat Mv = Mat::Zero(n, m);    // sum_{i<k} Ahat^i Bhat
    auto prediction = [&]() {
        Mat Y(p, m + n);
        Y.leftCols(m) = gd.Cc * Mv + gd.Dc;
        Y.rightCols(n) = gd.Cc * Mx;
        return Y;
    };
    append_rows(prediction(), gd.Yn, rows);
    for (const auto& [a, b] : rows) {
        P.add_row(a, b);
    }

    for (int k = 1; k <= k_max + 1; ++k) {
        Mv = gd.Ahat * Mv + gd.Bhat;
        Mx = gd.Ahat * Mx;
        rows.clear();
        append_rows(prediction(), gd.Yn, rows);
        bool all_redundant = true;
        std::vector<std::pair<Vec, double>> fresh;
        for (const auto& [a, b] : rows) {
            if (!is_redundant(a, b, P)) {
                all_redundant = false;
                fresh.emplace_back(a, b);
            }
        }
        if (all_redundant) {
            gd.tilOinf = P;
            gd.k_star = k - 1;
            return;
        }
        for (const auto& [a, b] : fresh) {
            P.add_row(a, b);
        }
    }
    throw DeterminationError("admissible set not finitely determined within k_max = " +
                             std::to_string(k_max) + " (try a larger epsilon or k_max)");
}

GovernorDesign make_governor(const Mat& Am, const Mat& Bv, const Mat& Kx, const Mat& Kv, const Box& Xn_hat,
                             const Box& Un_hat, double Td, double epsilon, double nu, int k_max) {
    const auto n = Am.rows();
    const auto m = Bv.cols();
    if (!(Td > 0)) {
        throw ParameterError("make_governor: Td must be positive");
    }
    GovernorDesign gd;
    const auto d = zoh_discretize(Am, Bv, Td);
    gd.Ahat = d.Ad;
    gd.Bhat = d.Bd;
    gd.Cc.resize(n + Kx.rows(), n);
    gd.Cc << Mat::Identity(n, n), Kx;
    gd.Dc.resize(n + Kv.rows(), m);
    gd.Dc << Mat::Zero(n, m), Kv;
    gd.Yn = Box((Vec(n + Kx.rows()) << Xn_hat.lower, Un_hat.lower).finished(),
                (Vec(n + Kx.rows()) << Xn_hat.upper, Un_hat.upper).finished());
    gd.epsilon = epsilon;
    gd.Td = Td;
    gd.nu = nu;
    build_tilde_o_infinity(gd, k_max);
    return gd;
}

RgStep rg_step(const GovernorDesign& gd, const GovernorState& state, const Vec& r) {
    const auto m = gd.m();
    if (r.size() != m) {
        throw DimensionError("rg_step: reference size mismatch");
    }
    const Vec z = gd.stack(state.v_prev, state.xn);
    const Mat& A = gd.tilOinf.normals;
    const Vec slack = gd.tilOinf.offsets - A * z;
    if (slack.size() > 0 && slack.minCoeff() < -1e-7) {
        Eigen::Index worst;
        slack.minCoeff(&worst);
        throw InvarianceLoss("governor state left the admissible set (row " + std::to_string(worst) +
                             ", violation " + std::to_string(-slack(worst)) + ")");
    }
    const Vec dir = r - state.v_prev;
    const Vec coef = A.leftCols(m) * dir;
    RgStep out;
    for (Eigen::Index i = 0; i < coef.size(); ++i) {
        if (coef(i) > 0) {
            const double k = std::max(0.0, slack(i)) / coef(i);
            if (k < out.kappa) {
                out.kappa = k;
                out.binding_row = static_cast<int>(i);
            }
        }
    }
    out.kappa = std::clamp(out.kappa, 0.0, 1.0);
    out.v = out.kappa == 0.0 ? state.v_prev : Vec(state.v_prev + out.kappa * dir);
    if (out.kappa == 1.0) {
        out.v = r;
    }
    return out;
}

GovernorState nominal_model_step(const GovernorDesign& gd, const GovernorState& state, const Vec& v) {
    return {v, gd.Ahat * state.xn + gd.Bhat * v};
}

}  // namespace l1rg
