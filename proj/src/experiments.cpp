#include "l1rg/experiments.hpp"

#include <cstdio>
#include <future>
#include <sstream>

namespace l1rg {

ScenarioTraces run_scenario(const ExperimentConfig& cfg, const L1RGController& ctrl, const SimOptions& opt) {
    const auto f = cfg.uncertainty_model();
    const GovernorDesign plain_gov = design_plain_governor(ctrl.spec, ctrl.options.Td, ctrl.options.epsilon,
                                                           ctrl.options.k_max);
    SimOptions o = opt;
    if (!(o.h > 0)) {
        o.h = ctrl.T_run / 5;
    }
    auto a = std::async(std::launch::async, [&] { return simulate_l1rg(ctrl, *f, cfg.r, o); });
    auto b = std::async(std::launch::async,
                        [&] { return simulate_plain_rg_baseline(ctrl.spec, plain_gov, *f, cfg.r, o); });
    ScenarioTraces out;
    out.l1rg = a.get();
    out.plain = b.get();

    const Schedule v = out.l1rg.command();
    auto c = std::async(std::launch::async, [&] { return simulate_nominal(ctrl.spec.plant, v, o); });
    auto d = std::async(std::launch::async,
                        [&] { return simulate_reference(ctrl.spec.plant, ctrl.options.l1.kf, *f, v, o); });
    out.nominal = c.get();
    out.reference = d.get();
    return out;
}

Table2 table2(const std::vector<ExperimentConfig>& configs) {
    if (configs.empty()) {
        throw ParameterError("table2: no configurations");
    }
    std::vector<std::future<Table2Entry>> jobs;
    for (const auto& cfg : configs) {
        for (bool scaling : {false, true}) {
            jobs.push_back(std::async(std::launch::async, [&cfg, scaling] {
                DesignOptions o = cfg.design_options();
                o.bounds.scaling = scaling;
                o.bounds.choose_sample_time = false;
                Table2Entry e;
                e.config = cfg.name;
                e.scaling = scaling;
                e.gamma1 = o.l1.gamma1;
                e.T = o.l1.T;
                e.kf = o.l1.kf;
                e.bounds = compute_bounds(cfg.problem(), o.l1, o.bounds);
                e.expected = cfg.expected;
                return e;
            }));
        }
    }
    Table2 t;
    for (auto& j : jobs) {
        t.entries.push_back(j.get());
    }

    const ExperimentConfig& first = configs.front();
    const Plant P = first.plant();
    const LoopNorms norms = loop_norms(P, first.kf);
    Eigen::Index i = 0;
    const Vec caps = first.X.max_abs();
    caps.minCoeff(&i);
    const BoundSet& scaled = t.entries.at(1).bounds;
    t.sweep.config = first.name;
    t.sweep.state = i;
    t.sweep.cap = caps(i);
    t.sweep.sup_v = sup_command_norm(norms, i, first.bound_options.Tx_offdiag, scaled.b_f_Xr,
                                     first.X0.max_abs().maxCoeff(), caps(i));
    return t;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string fmt(const Vec& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + fmt(v(i));
    }
    return s + "]";
}

// Expected vectors for an entry; empty when not provided.
std::pair<Vec, Vec> expected_of(const Table2Entry& e) {
    if (!e.expected) {
        return {};
    }
    if (e.scaling) {
        return {e.expected->tilde_rho, e.expected->tilde_rho_u};
    }
    const auto n = e.bounds.tilde_rho_i.size();
    return {e.expected->tilde_rho_unscaled > 0 ? Vec::Constant(n, e.expected->tilde_rho_unscaled) : Vec(),
            e.expected->tilde_rho_u_unscaled};
}

Vec deviation(const Vec& got, const Vec& want) {
    if (want.size() != got.size()) {
        return {};
    }
    return (got - want).cwiseQuotient(want);
}

}  // namespace

std::string table2_text(const Table2& t) {
    std::ostringstream os;
    for (const auto& e : t.entries) {
        const auto [rho, rho_u] = expected_of(e);
        os << e.config << (e.scaling ? "  with scaling" : "  without scaling") << "  (kf = " << fmt(e.kf(0))
           << ", T = " << fmt(e.T) << ")\n";
        for (const auto& c : e.bounds.conditions) {
            os << "  " << (c.holds ? "holds   " : "VIOLATED") << "  " << c.name << ": " << fmt(c.lhs) << " vs "
               << fmt(c.rhs) << "\n";
        }
        os << "  gamma1 / b_f_Xr : " << fmt(e.gamma1) << " / " << fmt(e.bounds.b_f_Xr);
        if (e.expected) {
            os << "   expected " << fmt(e.expected->gamma1) << " / " << fmt(e.expected->b_f_Xr);
        }
        os << "\n  tilde_rho       : " << fmt(e.bounds.tilde_rho_i);
        if (rho.size()) {
            os << "   expected " << fmt(rho) << "   rel. dev. " << fmt(deviation(e.bounds.tilde_rho_i, rho));
        }
        os << "\n  tilde_rho_u     : " << fmt(e.bounds.tilde_rho_u_j);
        if (rho_u.size()) {
            os << "   expected " << fmt(rho_u) << "   rel. dev. " << fmt(deviation(e.bounds.tilde_rho_u_j, rho_u));
        }
        os << "\n";
    }
    os << "sup |v| keeping the scaled condition feasible for x" << t.sweep.state + 1 << " (cap " << fmt(t.sweep.cap)
       << ", " << t.sweep.config << "): " << fmt(t.sweep.sup_v) << "\n";
    return os.str();
}

std::string table2_csv(const Table2& t) {
    std::ostringstream os;
    os << "config,scaling,quantity,index,value,expected,rel_dev\n";
    char buf[64];
    auto row = [&](const Table2Entry& e, const char* q, Eigen::Index i, double v, const Vec& want) {
        os << e.config << ',' << (e.scaling ? 1 : 0) << ',' << q << ',' << i + 1 << ',';
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << ',';
        if (i < want.size()) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", want(i), (v - want(i)) / want(i));
            os << buf;
        } else {
            os << ',';
        }
        os << '\n';
    };
    for (const auto& e : t.entries) {
        const auto [rho, rho_u] = expected_of(e);
        Vec g1, bf;
        if (e.expected) {
            g1 = Vec::Constant(1, e.expected->gamma1);
            bf = Vec::Constant(1, e.expected->b_f_Xr);
        }
        row(e, "gamma1", 0, e.gamma1, g1);
        row(e, "b_f_Xr", 0, e.bounds.b_f_Xr, bf);
        for (Eigen::Index i = 0; i < e.bounds.tilde_rho_i.size(); ++i) {
            row(e, "tilde_rho", i, e.bounds.tilde_rho_i(i), rho);
        }
        for (Eigen::Index j = 0; j < e.bounds.tilde_rho_u_j.size(); ++j) {
            row(e, "tilde_rho_u", j, e.bounds.tilde_rho_u_j(j), rho_u);
        }
    }
    std::snprintf(buf, sizeof buf, "%.17g", t.sweep.sup_v);
    os << t.sweep.config << ",1,sup_v," << t.sweep.state + 1 << ',' << buf << ",,\n";
    return os.str();
}

}  // namespace l1rg
