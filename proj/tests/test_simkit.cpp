#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace l1rg;
using namespace l1rg::testing;

namespace {

const BoundCheck& check_named(const VerificationReport& rep, const std::string& name) {
    for (const auto& c : rep.checks) {
        if (c.name == name) {
            return c;
        }
    }
    throw std::runtime_error("no check " + name);
}

struct ScalarRun {
    ExperimentConfig cfg;
    L1RGController ctrl;
    SimTrace trace;
};

const ScalarRun& scalar_run() {
    static const ScalarRun run = [] {
        ScalarRun r;
        r.cfg = scalar_toy();
        r.ctrl = design(r.cfg.problem(), r.cfg.design_options());
        r.trace = simulate_l1rg(r.ctrl, *r.cfg.uncertainty_model(), r.cfg.r, r.cfg.sim_options());
        return r;
    }();
    return run;
}

}  // namespace

TEST_CASE("schedule lookup") {
    Schedule s = Schedule::constant(Vec::Constant(1, 1.0));
    s.add(2.0, Vec::Constant(1, 3.0));
    CHECK(s.at(0.0)(0) == 1.0);
    CHECK(s.at(1.999)(0) == 1.0);
    CHECK(s.at(2.0)(0) == 3.0);
    CHECK(s.at(2.0 - 1e-12)(0) == 3.0);
    CHECK(s.at(-1.0)(0) == 1.0);
    CHECK(s.at(100.0)(0) == 3.0);
    CHECK_THROWS_AS(s.add(1.0, Vec::Zero(1)), ParameterError);
    CHECK_THROWS_AS(Schedule{}.at(0.0), ParameterError);
}

TEST_CASE("nominal simulation against the closed-form step response") {
    const Plant P{Mat::Zero(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1), -Mat::Ones(1, 1), Mat::Ones(1, 1)};
    const SimOptions o{3.0, 1e-3, 10, Vec()};
    const SimTrace tr = simulate_nominal(P, Schedule::constant(Vec::Constant(1, 0.8)), o);
    CHECK(tr.rows() == 301);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        worst = std::max(worst, std::abs(tr.x[k](0) - 0.8 * (1 - std::exp(-tr.t[k]))));
    }
    CHECK(worst < 1e-12);
    CHECK(tr.t.back() == doctest::Approx(3.0));
}

TEST_CASE("divergent runs are reported") {
    const Plant P{Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1), Mat::Ones(1, 1)};
    const SimOptions o{40.0, 1e-2, 1, Vec::Constant(1, 1.0)};
    try {
        simulate_nominal(P, Schedule::constant(Vec::Zero(1)), o);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.last_good_time() > 20.0);
        CHECK(e.last_good_time() < 40.0);
    }
}

TEST_CASE("scalar L1-RG closed loop") {
    const ScalarRun& r = scalar_run();
    const SimTrace& tr = r.trace;
    CHECK(tr.h == doctest::Approx(r.ctrl.T_run / 5));
    CHECK(tr.rows() == static_cast<std::size_t>(std::lround(r.cfg.horizon / tr.h)) + 1);

    const VerificationReport rep = verify_bounds(tr, targets_of(r.ctrl), r.cfg.X, r.cfg.U, r.cfg.C);
    INFO(rep.to_table());
    CHECK(rep.passed());

    // the command settles on the reference and the state follows within the tube
    CHECK(tr.v.back()(0) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(std::abs(tr.x.back()(0) - 0.8) <= r.ctrl.bounds.tilde_rho_i(0) + 1e-3);
    CHECK(std::abs(tr.xn.back()(0) - 0.8) <= 0.8 * std::exp(-r.cfg.horizon) + 1e-9);
    for (double k : tr.kappa) {
        CHECK((k >= 0.0 && k <= 1.0));
    }
}

TEST_CASE("replays and reference system share the grid") {
    const ScalarRun& r = scalar_run();
    SimOptions o = r.cfg.sim_options();
    o.h = r.trace.h;
    const Schedule v = r.trace.command();
    const SimTrace nom = simulate_nominal(r.ctrl.spec.plant, v, o);
    const Vec gap = max_state_gap(r.trace, nom);
    CHECK(gap(0) <= r.ctrl.bounds.tilde_rho_i(0));
    // the logged xn column is the same nominal model
    double diff = 0.0;
    for (std::size_t k = 0; k < nom.rows(); ++k) {
        diff = std::max(diff, std::abs(nom.x[k](0) - r.trace.xn[k](0)));
    }
    CHECK(diff < 1e-9);

    const SimTrace ref = simulate_reference(r.ctrl.spec.plant, r.ctrl.options.l1.kf, *r.cfg.uncertainty_model(), v, o);
    CHECK(max_state_gap(r.trace, ref)(0) <= r.cfg.gamma1);
    SimOptions shorter = o;
    shorter.horizon = 1.0;
    CHECK_THROWS_AS(max_state_gap(r.trace, simulate_nominal(r.ctrl.spec.plant, v, shorter)), DimensionError);
}

TEST_CASE("CSV round trip") {
    const ScalarRun& r = scalar_run();
    std::stringstream ss;
    write_csv(ss, r.trace);
    const std::string text = ss.str();
    CHECK(text.rfind("t,x1,", 0) == 0);
    const SimTrace back = read_csv(ss);
    REQUIRE(back.rows() == r.trace.rows());
    CHECK(back.n() == 1);
    CHECK(back.m() == 1);
    for (std::size_t k = 0; k < back.rows(); k += 97) {
        CHECK(back.t[k] == r.trace.t[k]);
        CHECK(back.x[k] == r.trace.x[k]);
        CHECK(back.ua[k] == r.trace.ua[k]);
        CHECK(back.xtilde[k] == r.trace.xtilde[k]);
        CHECK(back.kappa[k] == r.trace.kappa[k]);
    }
}

TEST_CASE("verification flags a corrupted row with its time") {
    const ExperimentConfig cfg = f16();
    const L1RGController ctrl = design(cfg.problem(), cfg.design_options());
    SimOptions o = cfg.sim_options();
    o.horizon = 0.5;
    SimTrace tr = simulate_l1rg(ctrl, *cfg.uncertainty_model(), cfg.r, o);
    const BoundTargets tg = targets_of(ctrl);
    CHECK(verify_bounds(tr, tg, cfg.X, cfg.U, cfg.C).passed());

    std::stringstream ss;
    write_csv(ss, tr);
    SimTrace bad = read_csv(ss);
    const std::size_t k = bad.rows() / 2;
    bad.x[k](2) = 5.0;
    const VerificationReport rep = verify_bounds(bad, tg, cfg.X, cfg.U, cfg.C);
    CHECK_FALSE(rep.passed());
    const BoundCheck& alpha = check_named(rep, "x3 in X");
    CHECK_FALSE(alpha.satisfied);
    REQUIRE(alpha.first_violation);
    CHECK(*alpha.first_violation == doctest::Approx(bad.t[k]));
    CHECK(alpha.empirical == 5.0);
    CHECK_FALSE(check_named(rep, "|x3 - xn3|").satisfied);
    CHECK(check_named(rep, "x1 in X").satisfied);
    CHECK(rep.to_table().find("first violation") != std::string::npos);
}

TEST_CASE("plain-RG targets are not applicable") {
    const ScalarRun& r = scalar_run();
    const VerificationReport rep = verify_bounds(r.trace, BoundTargets{}, r.cfg.X, r.cfg.U, r.cfg.C);
    CHECK_FALSE(check_named(rep, "|x1 - xn1|").applicable);
    CHECK(rep.passed());
    CHECK_THROWS_AS(verify_bounds(r.trace, BoundTargets{}, Box::ball(2, 1.0), r.cfg.U, r.cfg.C), DimensionError);
}

namespace {

const L1RGController& f16_controller() {
    static const L1RGController c = [] {
        const ExperimentConfig cfg = f16();
        return design(cfg.problem(), cfg.design_options());
    }();
    return c;
}

}  // namespace

TEST_CASE("without uncertainty the plant follows the nominal model") {
    const ExperimentConfig cfg = f16();
    const L1RGController& c = f16_controller();
    SimOptions o = cfg.sim_options();
    o.h = 2e-4;
    o.horizon = 15.0;
    o.stride = 25;
    const SimTrace tr = simulate_l1rg(c, *zero_uncertainty(3, 2), cfg.r, o);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        worst = std::max(worst, (tr.x[k] - tr.xn[k]).lpNorm<Eigen::Infinity>());
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("nominal, reference and baseline collapse without uncertainty") {
    const ExperimentConfig cfg = f16();
    const L1RGController& c = f16_controller();
    const Plant P = c.spec.plant;
    SimOptions o = cfg.sim_options();
    o.h = 2e-4;
    o.horizon = 3.0;

    const Vec v = (Vec(2) << 2.0, -1.0).finished();
    const SimTrace nom = simulate_nominal(P, Schedule::constant(v), o);
    const Vec xs = -P.Am().partialPivLu().solve(P.Bv() * v);
    const Vec exact = xs - expm(P.Am(), o.horizon) * xs;
    CHECK((nom.x.back() - exact).cwiseAbs().maxCoeff() < 1e-9);
    const SimTrace rest = simulate_nominal(P, Schedule::constant(Vec::Zero(2)), o);
    CHECK(rest.x.back().isZero(0));

    const SimTrace ref = simulate_reference(P, c.options.l1.kf, *zero_uncertainty(3, 2), Schedule::constant(v), o);
    CHECK(max_state_gap(ref, nom).maxCoeff() < 1e-12);

    const GovernorDesign gd = design_plain_governor(c.spec, cfg.Td, cfg.epsilon, cfg.k_max);
    const SimTrace base = simulate_plain_rg_baseline(c.spec, gd, *zero_uncertainty(3, 2), cfg.r, o);
    double worst = 0.0;
    for (std::size_t k = 0; k < base.rows(); ++k) {
        worst = std::max(worst, (base.x[k] - base.xn[k]).lpNorm<Eigen::Infinity>());
        CHECK(base.ua[k].isZero(0));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("fourth-order convergence in the step size") {
    const ExperimentConfig cfg = f16();
    const L1RGController& c = f16_controller();
    std::vector<Vec> ends;
    for (double h : {2e-4, 1e-4, 5e-5}) {
        SimOptions o = cfg.sim_options();
        o.h = h;
        o.horizon = 0.5;
        o.stride = std::lround(0.5 / h);
        ends.push_back(simulate_l1rg(c, *cfg.uncertainty_model(), cfg.r, o).x.back());
    }
    const double e1 = (ends[0] - ends[1]).lpNorm<Eigen::Infinity>();
    const double e2 = (ends[1] - ends[2]).lpNorm<Eigen::Infinity>();
    INFO("e1 " << e1 << " e2 " << e2);
    CHECK(e1 / e2 >= 8.0);
}

// With Ae a multiple of the identity and only matched uncertainty, the
// prediction error stays in range(B) and sigma2 is zero up to round-off.
TEST_CASE("sigma2 stays at round-off for both estimation periods") {
    ExperimentConfig cfg = f16();
    std::vector<double> peaks;
    for (double T : {1e-3, 1e-4}) {
        cfg.T_practical = T;
        const L1RGController c = design(cfg.problem(), cfg.design_options());
        SimOptions o = cfg.sim_options();
        o.h = 0.0;
        o.horizon = 1.0;
        const SimTrace tr = simulate_l1rg(c, *cfg.uncertainty_model(), cfg.r, o);
        double peak = 0.0;
        for (const Vec& s : tr.sigma2) {
            peak = std::max(peak, s.lpNorm<Eigen::Infinity>());
        }
        peaks.push_back(peak);
    }
    INFO("peaks " << peaks[0] << " " << peaks[1]);
    CHECK(peaks[0] <= 1e-9);
    CHECK(peaks[1] <= 1e-9);
}

TEST_CASE("F-16 tracking and uncertainty estimation") {
    const ExperimentConfig cfg = f16();
    const L1RGController& c = f16_controller();
    SimOptions o = cfg.sim_options();
    o.horizon = 7.5;
    const SimTrace tr = simulate_l1rg(c, *cfg.uncertainty_model(), cfg.r, o);

    const std::size_t k74 = static_cast<std::size_t>(std::lround(7.4 / (tr.h * tr.stride)));
    const Vec y = cfg.C * tr.x[k74];
    CHECK(std::abs(y(0) - 9.0) <= 0.3);
    CHECK(std::abs(y(1) - 6.5) <= 0.3);

    Vec err = Vec::Zero(2);
    int count = 0;
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        if (tr.t[k] >= 1.0 && tr.t[k] <= 7.0) {
            err += (tr.sigma1[k] - tr.f[k]).cwiseAbs();
            ++count;
        }
    }
    err /= count;
    INFO("mean estimation error " << err.transpose());
    CHECK(err.maxCoeff() <= 0.1);

    // the baseline part of u recomputed from the logs
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        worst = std::max(worst, (tr.ub[k] - (cfg.Kx * tr.x[k] + cfg.Kv * tr.v[k])).lpNorm<Eigen::Infinity>());
    }
    CHECK(worst <= 1e-12);
}
