#pragma once

// L1 adaptive controller: design-time bounds and run-time components.

#include <optional>
#include <string>
#include <vector>

#include "l1rg/uncertainty.hpp"

namespace l1rg {

/// x' = A x + B (u + f),  u = Kx x + Kv v + ua,  y = C x.
struct Plant {
    Mat A;
    Mat B;
    Mat C;
    Mat Kx;
    Mat Kv;

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }
    Mat Am() const { return A + B * Kx; }
    Mat Bv() const { return B * Kv; }
    void validate() const;
};

struct L1Config {
    Mat Ae;
    Vec kf;
    double T = 1e-5;
    double gamma1 = 0.01;
};

/// A named inequality lhs < rhs with both sides recorded.
struct Condition {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct AlphaConstants {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
};

/// a0 = int_0^T |e^{Ae s} B| ds, a1 = max_[0,T] |e^{Ae t}|,
/// a2 = max_t int_0^t |e^{Ae s} Phi(T)^{-1} e^{Ae T}| ds (inf-norms).
AlphaConstants alpha_constants(const Mat& Ae, const Mat& B, double T, int grid = 400);

double gamma0(double T, double b_f_Xa, const Mat& Ae, const Mat& B);

/// Everything the bound pipeline needs besides the filter.
struct BoundProblem {
    Plant plant;
    const UncertaintyModel* f = nullptr;
    double v_bound = 0.0;
    Box X0;
    std::optional<Box> state_cap;
    double gamma1 = 0.01;
    double margin = 1e-9;
    double resolution = 1e-4;
    double ceiling = 1e6;
};

struct RhoR {
    double rho_in = 0.0;
    double rho_r = 0.0;
    Box Xr;
    Box Xa;
    double b_f_Xr = 0.0;
    double L_f_Xa = 0.0;
    double gxm_norm = 0.0;
    double hxv_norm = 0.0;
    Condition stability;  ///< |Gxm| b_f(Xr) < rho_r - |Hxv| |v| - rho_in
    Condition lipschitz;  ///< |Gxm| L_f(Xa) < 1
};

/// Operator norms shared by every stage of the pipeline.
struct LoopNorms {
    Vec gxm_rows;
    Vec hxv_rows;
    Vec sres_rows;
    double gxm = 0.0;
    double hxv = 0.0;
    double sres = 0.0;
};

LoopNorms loop_norms(const Plant& plant, const Vec& kf);

RhoR find_rho_r(const BoundProblem& prob, const Vec& kf);
RhoR find_rho_r(const BoundProblem& prob, const Vec& kf, const LoopNorms& norms);

struct ScaledBounds {
    Vec rho_r_i;      ///< per-state bound on |x_r,i|
    Vec rho_i;        ///< rho_r_i + gamma1
    Vec tilde_rho_i;  ///< |T_i Gxm| b_f(Xr) + gamma1
    Vec gxm_scaled;   ///< |T_i Gxm| per state
    Vec rho_in_i;
    Box Xr;
    Box Xa;
    double b_f_Xr = 0.0;
    double L_f_Xa = 0.0;
    int outer_iterations = 0;
    bool fallback_used = false;
};

/// Diagonal T_i with 1 at i and `offdiag` elsewhere.
Mat scaling_matrix(Eigen::Index n, Eigen::Index i, double offdiag);

ScaledBounds scaled_state_bounds(const BoundProblem& prob, const RhoR& base,
                                 const LoopNorms& norms, double Tx_offdiag, double tol = 1e-6);

/// Smallest rho satisfying the scaled stability condition for state i with
/// b_f held fixed; nullopt when none exists below `ceiling`.
std::optional<double> scaled_rho_r(const LoopNorms& norms, Eigen::Index i, double offdiag, double b_f,
                                   double v_bound, double x0_max, double margin, double resolution,
                                   double ceiling);

/// Supremum of |v| for which the scaled condition for state i admits a bound
/// no larger than `cap` (found by bisection on |v|).
double sup_command_norm(const LoopNorms& norms, Eigen::Index i, double offdiag, double b_f,
                        double x0_max, double cap, double margin = 1e-9);

struct InputBounds {
    Vec rho_ua_j;
    Vec tilde_rho_u_j;
    Vec tilde_rho_y_j;
};

InputBounds input_bounds(const Vec& b_fj_Xr, const Mat& Kx, const Mat& C, const Vec& tilde_rho_i,
                         double gamma2);

/// |C(s)| L_f(Xa) gamma1 + |C(s) B^+ (sI - Ae)| gamma0.
double gamma2_of(const Vec& kf, double L_f_Xa, double gamma1, double gamma0_val, const Mat& Ae,
                 const Mat& B);

struct SampleTimeChoice {
    double T = 0.0;
    double gamma0 = 0.0;
    Condition condition;  ///< |Hxm C B^+ (sI-Ae)| gamma0 / (1 - |Gxm| L_f) < gamma1
};

/// Sample-time condition evaluated at a given T.
Condition sample_time_condition(const Plant& plant, const Vec& kf, const Mat& Ae, double L_f_Xa,
                                double b_f_Xa, double gamma1, double T, double gxm_norm);

/// Largest T in T_start, T_start/10, ... (down to 1e-12) meeting the sample-time condition.
SampleTimeChoice choose_sample_time(const Plant& plant, const Vec& kf, const Mat& Ae, double L_f_Xa,
                                    double b_f_Xa, double gamma1, double gxm_norm,
                                    double T_start = 1e-2);

struct BoundSet {
    double rho_in = 0.0;
    double rho_r = 0.0;
    double rho = 0.0;
    Vec rho_r_i;
    Vec rho_i;
    Vec tilde_rho_i;
    double rho_ur = 0.0;
    double gamma0 = 0.0;
    double gamma2 = 0.0;
    Vec rho_ua_j;
    Vec tilde_rho_u_j;
    Vec tilde_rho_y_j;
    double b_f_Xr = 0.0;
    Vec b_fj_Xr;
    double L_f_Xa = 0.0;
    double b_f_Xa = 0.0;
    Box Xr;
    Box Xa;
    double T_certified = 0.0;
    double gxm_norm = 0.0;
    Vec gxm_scaled;
    double tilde_rho_unscaled = 0.0;
    std::vector<Condition> conditions;
};

/// Discrete adaptive law sigma = -[B B_perp]^{-1} Phi(T)^{-1} e^{Ae T} xtilde.
class AdaptiveLaw {
public:
    AdaptiveLaw(const Mat& Ae, const Mat& B, double T);

    std::pair<Vec, Vec> update(const Vec& xtilde) const;
    const Mat& Bperp() const { return Bperp_; }
    const Mat& gain() const { return gain_; }
    double T() const { return T_; }

private:
    Eigen::Index m_;
    double T_;
    Mat Bperp_;
    Mat gain_;
};

std::pair<Vec, Vec> adaptive_update(const Vec& xtilde, const Mat& Ae, const Mat& B, const Mat& Bperp,
                                    double T);

struct PredictorMatrices {
    Mat Am;
    Mat Bv;
    Mat B;
    Mat Bperp;
    Mat Ae;
};

Vec predictor_derivative(const Vec& xhat, const Vec& x, const Vec& v, const Vec& ua, const Vec& sigma1,
                         const Vec& sigma2, const PredictorMatrices& M);

/// ua' = -kf .* (ua + sigma1)
Vec control_filter_derivative(const Vec& ua, const Vec& sigma1, const Vec& kf);

struct AdaptiveState {
    Vec xhat;
    Vec sigma1;
    Vec sigma2;
    Vec ua;
    double last_update = 0.0;
};

}  // namespace l1rg
