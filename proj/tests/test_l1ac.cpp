#include <doctest.h>

#include "support.hpp"

using namespace l1rg;
using namespace l1rg::testing;

TEST_CASE("alpha constants, scalar closed form") {
    const auto a = alpha_constants(Mat::Constant(1, 1, -10.0), Mat::Ones(1, 1), 1e-3);
    CHECK(a.a0 == doctest::Approx((1 - std::exp(-0.01)) / 10).epsilon(1e-6));
    CHECK(a.a0 == doctest::Approx(9.95017e-4).epsilon(1e-6));
    CHECK(a.a1 == doctest::Approx(1.0));
    CHECK(a.a2 == doctest::Approx(std::exp(-0.01)).epsilon(1e-6));
}

TEST_CASE("gamma0 shrinks linearly with the sample time") {
    const ExperimentConfig cfg = f16();
    const Mat Ae = cfg.ae_scale * Mat::Identity(3, 3);
    double prev = gamma0(1e-3, 2.4, Ae, cfg.B);
    for (double T : {5e-4, 2.5e-4, 1.25e-4, 6.25e-5}) {
        const double g = gamma0(T, 2.4, Ae, cfg.B);
        CAPTURE(T);
        CHECK(g > 0.0);
        CHECK(prev / g >= 1.9);
        prev = g;
    }
    CHECK(gamma0(1e-4, 0.0, Ae, cfg.B) == 0.0);
}

TEST_CASE("F-16 loop norms") {
    const ExperimentConfig cfg = f16();
    const LoopNorms n = loop_norms(cfg.plant(), cfg.kf);
    const Vec want = (Vec(3) << 0.004514, 0.183006, 0.013142).finished();
    for (int i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(n.gxm_rows(i) == doctest::Approx(want(i)).epsilon(1e-4));
    }
    CHECK(n.gxm == doctest::Approx(n.gxm_rows.maxCoeff()));
    CHECK(n.hxv > 0.0);

    // the Gxm realization against an independently simulated impulse response
    const CascadeData d{cfg.plant().Am(), cfg.B, cfg.plant().Bv(), cfg.ae_scale * Mat::Identity(3, 3), cfg.kf};
    const StateSpaced g = realize_cascade(CascadeKind::Gxm, d);
    const Vec oracle = impulse_l1_rows(g, 2e-5, 30.0);
    CHECK((n.gxm_rows - oracle).cwiseQuotient(oracle).cwiseAbs().maxCoeff() < 1e-4);

    // a wider filter leaves less of the uncertainty unmatched
    const LoopNorms wide = loop_norms(cfg.plant(), Vec::Constant(2, 1000.0));
    CHECK((wide.gxm_rows.array() < n.gxm_rows.array()).all());
}

TEST_CASE("rho_r search on the F-16 problem") {
    const ExperimentConfig cfg = f16();
    const auto f = cfg.uncertainty_model();
    BoundProblem prob;
    prob.plant = cfg.plant();
    prob.f = f.get();
    prob.v_bound = cfg.v_bound;
    prob.X0 = cfg.X0;
    prob.state_cap = cfg.X;
    prob.gamma1 = cfg.gamma1;
    const RhoR r = find_rho_r(prob, cfg.kf);
    CHECK(r.stability.holds);
    CHECK(r.stability.lhs < r.stability.rhs);
    CHECK(r.lipschitz.holds);
    CHECK(r.rho_r > r.rho_in);
    CHECK(r.b_f_Xr == doctest::Approx(2.4));
    // consistency of the reported condition with the norms it used
    CHECK(r.stability.lhs == doctest::Approx(r.gxm_norm * r.b_f_Xr));

    const LoopNorms norms = loop_norms(cfg.plant(), cfg.kf);
    const ScaledBounds s = scaled_state_bounds(prob, r, norms, cfg.bound_options.Tx_offdiag);
    for (int i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(s.rho_r_i(i) <= r.rho_r + 1e-9);
        CHECK(s.tilde_rho_i(i) == doctest::Approx(s.gxm_scaled(i) * s.b_f_Xr + cfg.gamma1));
        CHECK(s.rho_i(i) == doctest::Approx(s.rho_r_i(i) + cfg.gamma1));
    }
}

TEST_CASE("command-norm supremum sits on the feasibility edge") {
    const ExperimentConfig cfg = f16();
    const LoopNorms norms = loop_norms(cfg.plant(), cfg.kf);
    const double cap = 4.0, x0 = 0.1, off = cfg.bound_options.Tx_offdiag;
    const double sup = sup_command_norm(norms, 2, off, 2.4, x0, cap);
    CHECK(sup > 0.0);
    const auto below = scaled_rho_r(norms, 2, off, 2.4, 0.99 * sup, x0, 1e-9, 1e-10, 1e6);
    REQUIRE(below);
    CHECK(*below <= cap);
    const auto above = scaled_rho_r(norms, 2, off, 2.4, 1.01 * sup, x0, 1e-9, 1e-10, 1e6);
    CHECK((!above || *above > cap));
}

TEST_CASE("input bounds") {
    Mat Kx(2, 3), C = Mat::Identity(3, 3);
    Kx << 1, -2, 0, 0, 0.5, 3;
    const Vec bj = (Vec(2) << 2.4, 0.9).finished();
    const Vec rho = (Vec(3) << 0.1, 0.2, 0.3).finished();
    const InputBounds ib = input_bounds(bj, Kx, C, rho, 0.05);
    CHECK(ib.rho_ua_j(0) == doctest::Approx(2.45));
    CHECK(ib.rho_ua_j(1) == doctest::Approx(0.95));
    CHECK(ib.tilde_rho_u_j(0) == doctest::Approx(2.45 + 0.1 + 0.4));
    CHECK(ib.tilde_rho_u_j(1) == doctest::Approx(0.95 + 0.1 + 0.9));
    CHECK((ib.tilde_rho_y_j - rho).norm() < 1e-15);
    CHECK_THROWS_AS(input_bounds(bj, Kx, C, Vec::Ones(2), 0.0), DimensionError);
}

TEST_CASE("sample-time search") {
    const ExperimentConfig cfg = f16();
    const Mat Ae = cfg.ae_scale * Mat::Identity(3, 3);
    const LoopNorms n = loop_norms(cfg.plant(), cfg.kf);
    const auto ch = choose_sample_time(cfg.plant(), cfg.kf, Ae, 0.8, 2.4, cfg.gamma1, n.gxm, 1e-3);
    CHECK(ch.condition.holds);
    CHECK(ch.condition.lhs < cfg.gamma1);
    // one decade up fails, otherwise the search would have stopped there
    const Condition up = sample_time_condition(cfg.plant(), cfg.kf, Ae, 0.8, 2.4, cfg.gamma1, 10 * ch.T, n.gxm);
    CHECK_FALSE(up.holds);
    CHECK(ch.gamma0 == doctest::Approx(gamma0(ch.T, 2.4, Ae, cfg.B)));
}

TEST_CASE("adaptive law cancels the prediction error in one period") {
    // x' = Am x + Bv v + B ua (no uncertainty), predictor with piecewise constant sigma
    const ExperimentConfig cfg = f16();
    const Plant P = cfg.plant();
    const double T = 1e-3;
    const Mat Ae = cfg.ae_scale * Mat::Identity(3, 3);
    const AdaptiveLaw law(Ae, P.B, T);
    CHECK((law.Bperp().transpose() * P.B).norm() < 1e-12);

    const PredictorMatrices M{P.Am(), P.Bv(), P.B, law.Bperp(), Ae};
    const Vec x0 = (Vec(3) << 0.3, -0.1, 0.05).finished();
    const Vec xhat0 = x0 + (Vec(3) << 0.02, -0.04, 0.01).finished();
    const auto [s1, s2] = law.update(xhat0 - x0);
    const auto [a1, a2] = adaptive_update(xhat0 - x0, Ae, P.B, law.Bperp(), T);
    CHECK((s1 - a1).norm() < 1e-12);
    CHECK((s2 - a2).norm() < 1e-12);

    const Vec v = (Vec(2) << 1.0, 0.5).finished();
    const Vec ua = (Vec(2) << -0.2, 0.1).finished();
    const Rhs rhs = [&](double, const Vec& z) -> Vec {
        const Vec x = z.head(3), xh = z.tail(3);
        Vec d(6);
        d << P.Am() * x + P.Bv() * v + P.B * ua, predictor_derivative(xh, x, v, ua, s1, s2, M);
        return d;
    };
    Vec z(6);
    z << x0, xhat0;
    const Vec zT = rk4_integrate(rhs, z, 0.0, T, 4000);
    const double err0 = (xhat0 - x0).lpNorm<Eigen::Infinity>();
    CHECK((zT.tail(3) - zT.head(3)).lpNorm<Eigen::Infinity>() < 1e-9 * err0 + 1e-14);
}

TEST_CASE("control filter derivative") {
    const Vec d = control_filter_derivative((Vec(2) << 1.0, 0.0).finished(), (Vec(2) << 0.5, -1.0).finished(),
                                            (Vec(2) << 10.0, 20.0).finished());
    CHECK(d(0) == doctest::Approx(-15.0));
    CHECK(d(1) == doctest::Approx(20.0));
}

TEST_CASE("alpha constants in the small-T limit and against a refined grid") {
    const auto tiny = alpha_constants(Mat::Constant(1, 1, -10.0), Mat::Ones(1, 1), 1e-9);
    CHECK(tiny.a0 < 1e-8);
    CHECK(tiny.a1 == doctest::Approx(1.0));

    const ExperimentConfig cfg = f16();
    const Mat Ae = -10.0 * Mat::Identity(3, 3);
    const auto coarse = alpha_constants(Ae, cfg.B, 1e-5, 400);
    const auto fine = alpha_constants(Ae, cfg.B, 1e-5, 4000);
    CHECK(coarse.a0 == doctest::Approx(fine.a0).epsilon(1e-8));
    CHECK(coarse.a1 == doctest::Approx(fine.a1).epsilon(1e-8));
    CHECK(coarse.a2 == doctest::Approx(fine.a2).epsilon(1e-8));
    CHECK_THROWS_AS(alpha_constants(Ae, cfg.B, 0.0), ParameterError);
}

TEST_CASE("gamma0 scalar value") {
    const double g = gamma0(1e-3, 2.4, Mat::Constant(1, 1, -10.0), Mat::Ones(1, 1));
    CHECK(g == doctest::Approx(2.4 * 9.9502e-4 * (1 + 0.99005 + 1)).epsilon(1e-4));
    CHECK(g == doctest::Approx(7.141e-3).epsilon(1e-3));
}

TEST_CASE("rho_r without uncertainty") {
    const ExperimentConfig cfg = f16();
    const auto f = zero_uncertainty(3, 2);
    BoundProblem prob;
    prob.plant = cfg.plant();
    prob.f = f.get();
    prob.v_bound = cfg.v_bound;
    prob.X0 = cfg.X0;
    prob.gamma1 = cfg.gamma1;
    const RhoR r = find_rho_r(prob, cfg.kf);
    CHECK(r.b_f_Xr == 0.0);
    CHECK(r.rho_r == doctest::Approx(r.hxv_norm * cfg.v_bound + r.rho_in).epsilon(2e-4));
    CHECK(r.rho_r > r.hxv_norm * cfg.v_bound + r.rho_in);
}

TEST_CASE("identity scaling reproduces the unscaled bound") {
    const ExperimentConfig cfg = f16();
    const auto f = cfg.uncertainty_model();
    BoundProblem prob;
    prob.plant = cfg.plant();
    prob.f = f.get();
    prob.v_bound = cfg.v_bound;
    prob.X0 = cfg.X0;
    prob.state_cap = cfg.X;
    prob.gamma1 = cfg.gamma1;
    const LoopNorms norms = loop_norms(cfg.plant(), cfg.kf);
    const RhoR r = find_rho_r(prob, cfg.kf, norms);
    const ScaledBounds s = scaled_state_bounds(prob, r, norms, 1.0);
    const double unscaled = norms.gxm * r.b_f_Xr + cfg.gamma1;
    for (int i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(std::abs(s.tilde_rho_i(i) - unscaled) <= 1e-9);
    }
}

TEST_CASE("input bounds and gamma2 edge cases") {
    const InputBounds ib = input_bounds((Vec(2) << 1.0, 2.0).finished(), Mat::Zero(2, 3), Mat::Identity(3, 3),
                                        Vec::Constant(3, 0.5), 0.0);
    CHECK(ib.tilde_rho_u_j(0) == 1.0);
    CHECK(ib.tilde_rho_u_j(1) == 2.0);

    const Mat Ae = -10.0 * Mat::Identity(3, 3);
    const ExperimentConfig cfg = f16();
    CHECK(gamma2_of(cfg.kf, 0.8, 0.0, 0.0, Ae, cfg.B) == 0.0);
    CHECK(gamma2_of(cfg.kf, 0.0, 5.0, 0.0, Ae, cfg.B) == 0.0);

    // the tightened input bound decomposes back into gamma2
    const BoundSet b = compute_bounds(cfg.problem(), cfg.design_options().l1, cfg.bound_options);
    for (int j = 0; j < 2; ++j) {
        CAPTURE(j);
        const double back = b.tilde_rho_u_j(j) - cfg.Kx.row(j).cwiseAbs().dot(b.tilde_rho_i) - b.b_fj_Xr(j);
        CHECK(back == doctest::Approx(b.gamma2).epsilon(1e-12));
    }
}

TEST_CASE("bound set identities") {
    const ExperimentConfig cfg = f16();
    const BoundSet b = compute_bounds(cfg.problem(), cfg.design_options().l1, cfg.bound_options);
    CHECK(b.rho == b.rho_r + cfg.gamma1);
    CHECK((b.rho_r_i.array() <= b.rho_r).all());
    CHECK((b.tilde_rho_i.array() <= b.rho_i.array() + 1e-12).all());
    CHECK((b.tilde_rho_i.array() >= 0).all());
    CHECK(b.gamma0 >= 0.0);
    CHECK(b.gamma2 >= 0.0);
}

TEST_CASE("sample-time condition at the tabulated sample times") {
    const Mat Ae = -10.0 * Mat::Identity(3, 3);
    SUBCASE("kf = 200, T = 1e-5") {
        const ExperimentConfig cfg = f16();
        const BoundSet b = compute_bounds(cfg.problem(), cfg.design_options().l1, cfg.bound_options);
        const Condition c =
            sample_time_condition(cfg.plant(), cfg.kf, Ae, b.L_f_Xa, b.b_f_Xa, 0.01, 1e-5, b.gxm_norm);
        INFO("lhs " << c.lhs << " rhs " << c.rhs);
        CHECK(c.holds);
    }
    SUBCASE("kf = 1000, T = 1e-7") {
        const ExperimentConfig cfg = f16("f16_kf1000.json");
        const BoundSet b = compute_bounds(cfg.problem(), cfg.design_options().l1, cfg.bound_options);
        const Condition c =
            sample_time_condition(cfg.plant(), cfg.kf, Ae, b.L_f_Xa, b.b_f_Xa, 2e-4, 1e-7, b.gxm_norm);
        INFO("lhs " << c.lhs << " rhs " << c.rhs);
        CHECK(c.holds);
    }
    SUBCASE("a vacuous gamma1 accepts the first candidate") {
        const ExperimentConfig cfg = f16();
        const auto ch = choose_sample_time(cfg.plant(), cfg.kf, Ae, 0.8, 2.4, 1e9, 0.2);
        CHECK(ch.T == 1e-2);
    }
}

TEST_CASE("monotonicity in bandwidth and sample time") {
    const ExperimentConfig cfg = f16();
    const BoundSet b = compute_bounds(cfg.problem(), cfg.design_options().l1, cfg.bound_options);
    L1Config wider = cfg.design_options().l1;
    wider.kf *= 2.0;
    const BoundSet w = compute_bounds(cfg.problem(), wider, cfg.bound_options);
    for (int i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(w.tilde_rho_i(i) <= b.tilde_rho_i(i) + 1e-12);
    }
    const Mat Ae = -10.0 * Mat::Identity(3, 3);
    for (double T : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        CAPTURE(T);
        CHECK(gamma0(T / 10, 2.4, Ae, cfg.B) <= gamma0(T, 2.4, Ae, cfg.B));
    }
}

TEST_CASE("adaptive update examples") {
    const Mat Ae = Mat::Constant(1, 1, -10.0), B = Mat::Ones(1, 1), Bp(1, 0);
    const auto [z1, z2] = adaptive_update(Vec::Zero(1), Ae, B, Bp, 1e-3);
    CHECK(z1(0) == 0.0);
    CHECK(z2.size() == 0);
    const auto [s1, s2] = adaptive_update(Vec::Constant(1, 0.01), Ae, B, Bp, 1e-3);
    const double phi = (1 - std::exp(-0.01)) / 10;
    CHECK(s1(0) == doctest::Approx(-std::exp(-0.01) * 0.01 / phi).epsilon(1e-10));
    CHECK(s1(0) == doctest::Approx(-9.9502).epsilon(2e-5));

    // predictor-only scalar loop with a constant disturbance d
    const double T = 1e-4, d = 0.7;
    const AdaptiveLaw law(Ae, B, T);
    double x = 0.0, xh = 0.0, sigma = 0.0;
    for (int k = 0; k < 10; ++k) {
        sigma = law.update(Vec::Constant(1, xh - x)).first(0);
        const Rhs rhs = [&](double, const Vec& z) -> Vec {
            Vec dz(2);
            dz << -z(0) + d, -z(0) + sigma - 10.0 * (z(1) - z(0));
            return dz;
        };
        const Vec z = rk4_integrate(rhs, (Vec(2) << x, xh).finished(), 0.0, T, 50);
        x = z(0);
        xh = z(1);
    }
    CHECK(std::abs(sigma - d) <= 0.02 * d);
}

TEST_CASE("predictor and filter examples") {
    const ExperimentConfig cfg = f16();
    const Plant P = cfg.plant();
    const Mat Ae = -10.0 * Mat::Identity(3, 3);
    const AdaptiveLaw law(Ae, P.B, 1e-3);
    const PredictorMatrices M{P.Am(), P.Bv(), P.B, law.Bperp(), Ae};
    CHECK(predictor_derivative(Vec::Zero(3), Vec::Zero(3), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(1), M)
              .isZero(0));
    const Vec x = (Vec(3) << 0.3, -1.0, 2.0).finished();
    const Vec v = (Vec(2) << 9.0, 6.5).finished();
    const Vec fx = cfg.uncertainty_model()->evaluate(0.7, x);
    const Vec d = predictor_derivative(x, x, v, -fx, fx, Vec::Zero(1), M);
    CHECK((d - (P.Am() * x + P.Bv() * v)).cwiseAbs().maxCoeff() < 1e-12);

    const Vec kf = cfg.kf;
    CHECK(control_filter_derivative(Vec::Zero(2), Vec::Zero(2), kf).isZero(0));
    const Vec c = (Vec(2) << 1.5, -0.4).finished();
    const Rhs rhs = [&](double, const Vec& ua) -> Vec { return control_filter_derivative(ua, c, kf); };
    for (double t : {0.001, 0.01, 0.1}) {
        const Vec ua = rk4_integrate(rhs, Vec::Zero(2), 0.0, t, 20000);
        for (int j = 0; j < 2; ++j) {
            CHECK(std::abs(ua(j) + c(j) * (1 - std::exp(-kf(j) * t))) < 1e-8);
        }
    }
    CHECK((rk4_integrate(rhs, Vec::Zero(2), 0.0, 1.0, 20000) + c).cwiseAbs().maxCoeff() < 1e-12);
}
