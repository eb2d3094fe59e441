#include "l1rg/controller.hpp"

#include <cmath>

namespace l1rg {

void ProblemSpec::validate() const {
    plant.validate();
    const auto n = plant.n();
    const auto m = plant.m();
    if (!f) {
        throw ParameterError("ProblemSpec: missing uncertainty model");
    }
    if (f->states() != n || f->channels() != m) {
        throw DimensionError("ProblemSpec: uncertainty model has the wrong dimensions");
    }
    if (X.dim() != n || X0.dim() != n || U.dim() != m) {
        throw DimensionError("ProblemSpec: constraint boxes have the wrong dimensions");
    }
    if (v0.size() != 0 && v0.size() != m) {
        throw DimensionError("ProblemSpec: v0 has the wrong dimension");
    }
    if (X.empty() || U.empty() || X0.empty()) {
        throw ParameterError("ProblemSpec: empty constraint box");
    }
    if (r_bound < 0 || v_bound < 0) {
        throw ParameterError("ProblemSpec: negative command bound");
    }
}

namespace {

Vec initial_command(const ProblemSpec& spec) {
    return spec.v0.size() == spec.plant.m() ? spec.v0 : Vec::Zero(spec.plant.m());
}

Box capped(const Box& Z, const Box& cap) { return intersect(Z, cap); }

}  // namespace

BoundSet compute_bounds(const ProblemSpec& spec, const L1Config& l1, const BoundOptions& opt) {
    spec.validate();
    const Plant& P = spec.plant;
    const auto n = P.n();
    if (l1.kf.size() != P.m()) {
        throw DimensionError("compute_bounds: one filter bandwidth per input channel");
    }
    if (!(l1.gamma1 > 0) || !(l1.T > 0)) {
        throw ParameterError("compute_bounds: gamma1 and T must be positive");
    }
    const LoopNorms norms = loop_norms(P, l1.kf);
    BoundProblem bp;
    bp.plant = P;
    bp.f = spec.f.get();
    bp.v_bound = spec.v_bound;
    bp.X0 = spec.X0;
    bp.state_cap = spec.X;
    bp.gamma1 = l1.gamma1;
    const RhoR rr = find_rho_r(bp, l1.kf, norms);

    BoundSet bs;
    bs.rho_in = rr.rho_in;
    bs.rho_r = rr.rho_r;
    bs.rho = rr.rho_r + l1.gamma1;
    bs.gxm_norm = norms.gxm;
    bs.tilde_rho_unscaled = norms.gxm * rr.b_f_Xr + l1.gamma1;
    bs.conditions.push_back(rr.stability);

    if (opt.scaling) {
        std::vector<double> grid{opt.Tx_offdiag};
        if (opt.tx_search) {
            grid = {1.0, 0.1, 0.01, 0.001};
        }
        bool first = true;
        for (double c : grid) {
            const ScaledBounds sb = scaled_state_bounds(bp, rr, norms, c);
            if (first) {
                bs.rho_r_i = sb.rho_r_i;
                bs.tilde_rho_i = sb.tilde_rho_i;
                bs.gxm_scaled = sb.gxm_scaled;
                bs.b_f_Xr = sb.b_f_Xr;
                first = false;
                continue;
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                if (sb.tilde_rho_i(i) < bs.tilde_rho_i(i)) {
                    bs.tilde_rho_i(i) = sb.tilde_rho_i(i);
                    bs.gxm_scaled(i) = sb.gxm_scaled(i);
                }
                bs.rho_r_i(i) = std::min(bs.rho_r_i(i), sb.rho_r_i(i));
            }
            bs.b_f_Xr = std::max(bs.b_f_Xr, sb.b_f_Xr);
        }
        bs.Xr = capped(Box::symmetric(bs.rho_r_i), spec.X);
    } else {
        bs.rho_r_i = Vec::Constant(n, rr.rho_r);
        bs.tilde_rho_i = Vec::Constant(n, bs.tilde_rho_unscaled);
        bs.gxm_scaled = Vec::Constant(n, norms.gxm);
        bs.b_f_Xr = rr.b_f_Xr;
        bs.Xr = rr.Xr;
    }
    if ((bs.rho_r_i.array() > rr.rho_r * (1 + 1e-12)).any()) {
        throw NumericError("per-state bound exceeds the unscaled rho_r");
    }
    bs.rho_i = bs.rho_r_i.array() + l1.gamma1;
    bs.Xa = capped(Box::symmetric(bs.rho_i), spec.X);
    const AggregateBounds fa = spec.f->bounds(bs.Xa);
    bs.b_f_Xa = fa.b_f;
    bs.L_f_Xa = fa.L_f;
    const Condition lip{"|Gxm| L_f(Xa) < 1", norms.gxm * bs.L_f_Xa, 1.0, norms.gxm * bs.L_f_Xa < 1.0};
    bs.conditions.push_back(lip);
    if (!lip.holds) {
        throw DesignError(lip.name, "filter bandwidth kf", "lhs = " + std::to_string(lip.lhs));
    }

    if (opt.choose_sample_time) {
        const SampleTimeChoice st =
            choose_sample_time(P, l1.kf, l1.Ae, bs.L_f_Xa, bs.b_f_Xa, l1.gamma1, norms.gxm, l1.T);
        bs.T_certified = st.T;
        bs.gamma0 = st.gamma0;
        bs.conditions.push_back(st.condition);
    } else {
        bs.T_certified = l1.T;
        bs.gamma0 = gamma0(l1.T, bs.b_f_Xa, l1.Ae, P.B);
        bs.conditions.push_back(
            sample_time_condition(P, l1.kf, l1.Ae, bs.L_f_Xa, bs.b_f_Xa, l1.gamma1, l1.T, norms.gxm));
    }
    bs.gamma2 = gamma2_of(l1.kf, bs.L_f_Xa, l1.gamma1, bs.gamma0, l1.Ae, P.B);
    bs.b_fj_Xr = spec.f->channel_bounds(bs.Xr);
    bs.rho_ur = bs.b_f_Xr;
    const InputBounds ib = input_bounds(bs.b_fj_Xr, P.Kx, P.C, bs.tilde_rho_i, bs.gamma2);
    bs.rho_ua_j = ib.rho_ua_j;
    bs.tilde_rho_u_j = ib.tilde_rho_u_j;
    bs.tilde_rho_y_j = ib.tilde_rho_y_j;
    return bs;
}

PredictorMatrices L1RGController::predictor() const {
    const Plant& P = spec.plant;
    return {P.Am(), P.Bv(), P.B, orthogonal_complement(P.B), options.l1.Ae};
}

L1RGController design(const ProblemSpec& spec, const DesignOptions& options) {
    L1RGController c;
    c.spec = spec;
    c.options = options;
    c.bounds = compute_bounds(spec, options.l1, options.bounds);
    c.conditions = c.bounds.conditions;
    const Plant& P = spec.plant;

    c.tildeX = Box::symmetric(c.bounds.tilde_rho_i);
    c.tildeU = Box::symmetric(c.bounds.tilde_rho_u_j);
    c.Xn = pontryagin_diff_box(spec.X, c.tildeX);
    c.Un = pontryagin_diff_box(spec.U, c.tildeU);
    if (c.Xn.empty()) {
        throw DesignError("initial-condition assumption violated: Xn_hat empty",
                          "filter bandwidth kf or gamma1", "state tube exceeds X");
    }
    if (c.Un.empty()) {
        throw DesignError("initial-condition assumption violated: Un_hat empty",
                          "filter bandwidth kf or gamma1", "input tube exceeds U");
    }

    c.nu = options.practical_sampling ? 0.0
                                      : inter_sample_margin(P.Am(), P.Bv(), c.Xn, spec.V(), options.Td);
    const SampledBoxes sb = tighten_for_sampling(c.Xn, c.Un, P.Kx, c.nu);
    c.Xn_hat = sb.Xn_hat;
    c.Un_hat = sb.Un_hat;
    if (!c.Xn_hat.interior_contains(Vec::Zero(P.n())) || !c.Un_hat.interior_contains(Vec::Zero(P.m()))) {
        throw DesignError("initial-condition assumption violated: Un_hat empty",
                          "filter bandwidth kf, gamma1 or Td", "tightened sets lose the origin");
    }
    c.gov = make_governor(P.Am(), P.Bv(), P.Kx, P.Kv, c.Xn_hat, c.Un_hat, options.Td, options.epsilon, c.nu,
                          options.k_max);

    // every vertex of X0 must be admissible together with v(0)
    const Vec v0 = initial_command(spec);
    const auto n = P.n();
    for (long mask = 0; mask < (1L << n); ++mask) {
        Vec x0(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x0(i) = (mask >> i) & 1 ? spec.X0.upper(i) : spec.X0.lower(i);
        }
        if (!c.gov.admissible(v0, x0)) {
            throw DesignError("initial-condition assumption violated: (v(0), x0) outside the admissible set",
                              "initial set X0 or v(0)", "vertex mask " + std::to_string(mask));
        }
    }

    const double T_base = options.T_practical > 0 ? options.T_practical : c.bounds.T_certified;
    const double k = std::ceil(options.Td / T_base - 1e-9);
    c.T_run = options.Td / k;
    c.certified = c.T_run <= c.bounds.T_certified * (1 + 1e-12);
    return c;
}

GovernorDesign design_plain_governor(const ProblemSpec& spec, double Td, double epsilon, int k_max) {
    const Plant& P = spec.plant;
    return make_governor(P.Am(), P.Bv(), P.Kx, P.Kv, spec.X, spec.U, Td, epsilon, 0.0, k_max);
}

RuntimeStep runtime_step(const L1RGController& ctrl, const AdaptiveLaw& law, const Clocks& clocks,
                         const Vec& x_meas, const Vec& r_k, AdaptiveState& adaptive, GovernorState& gov,
                         Vec& v) {
    const Plant& P = ctrl.spec.plant;
    RuntimeStep out;
    if (clocks.tick % clocks.ticks_per_T == 0) {
        auto [s1, s2] = law.update(adaptive.xhat - x_meas);
        adaptive.sigma1 = std::move(s1);
        adaptive.sigma2 = std::move(s2);
        adaptive.last_update = static_cast<double>(clocks.tick);
        out.adaptive_event = true;
    }
    if (clocks.tick % clocks.ticks_per_Td == 0) {
        const RgStep st = rg_step(ctrl.gov, gov, r_k);
        gov = nominal_model_step(ctrl.gov, gov, st.v);
        v = st.v;
        out.kappa = st.kappa;
        out.binding_row = st.binding_row;
        out.governor_event = true;
    }
    out.v = v;
    out.ub = P.Kx * x_meas + P.Kv * v;
    out.u = out.ub + adaptive.ua;
    return out;
}

}  // namespace l1rg
