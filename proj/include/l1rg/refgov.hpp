#pragma once

// Scalar reference governor on a discretized nominal model.

#include "l1rg/sets.hpp"

namespace l1rg {

/// Sampled nominal model xn(k+1) = Ahat xn(k) + Bhat v(k), constrained
/// output y = Cc xn + Dc v in Yn. The admissible set lives in z = (v, xn).
struct GovernorDesign {
    Mat Ahat;
    Mat Bhat;
    Mat Cc;
    Mat Dc;
    Box Yn;
    double epsilon = 0.01;
    double Td = 0.0;
    double nu = 0.0;
    Polytope tilOinf;
    int k_star = 0;

    Eigen::Index n() const { return Ahat.rows(); }
    Eigen::Index m() const { return Bhat.cols(); }
    Vec stack(const Vec& v, const Vec& xn) const;
    bool admissible(const Vec& v, const Vec& xn, double tol = 1e-9) const;
};

struct GovernorState {
    Vec v_prev;
    Vec xn;
};

struct RgStep {
    double kappa = 1.0;
    Vec v;
    int binding_row = -1;  ///< polytope row that limited kappa, -1 if none
};

/// max over tau in [0, Td] of |e^{Am tau} - I| times max over Xn, V of |x + Am^{-1} Bv v|.
double inter_sample_margin(const Mat& Am, const Mat& Bv, const Box& Xn, const Box& V, double Td,
                           int samples = 1000);

struct SampledBoxes {
    Box Xn_hat;
    Box Un_hat;
};

SampledBoxes tighten_for_sampling(const Box& Xn, const Box& Un, const Mat& Kx, double nu);

/// O-infinity intersected with the epsilon-tightened steady-state set, built
/// by adding non-redundant prediction rows until every row at step k+1 is
/// redundant. Fills gd.tilOinf and gd.k_star.
void build_tilde_o_infinity(GovernorDesign& gd, int k_max = 500);

/// Discretizes (Am, Bv), sets Cc = [I; Kx], Dc = [0; Kv], Yn = Xn_hat x Un_hat and builds the set.
GovernorDesign make_governor(const Mat& Am, const Mat& Bv, const Mat& Kx, const Mat& Kv, const Box& Xn_hat,
                             const Box& Un_hat, double Td, double epsilon, double nu, int k_max = 500);

RgStep rg_step(const GovernorDesign& gd, const GovernorState& state, const Vec& r);

GovernorState nominal_model_step(const GovernorDesign& gd, const GovernorState& state, const Vec& v);

}  // namespace l1rg
