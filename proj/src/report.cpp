#include "l1rg/report.hpp"

#include <json.hpp>

namespace l1rg {

using json = nlohmann::json;

namespace {

json arr(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json arr(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        rows.push_back(arr(Vec(M.row(i).transpose())));
    }
    return rows;
}

json box(const Box& b) { return {{"lower", arr(b.lower)}, {"upper", arr(b.upper)}}; }

Vec vec(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Box box_of(const json& j) { return {vec(j.at("lower")), vec(j.at("upper"))}; }

json conditions(const std::vector<Condition>& cs) {
    json out = json::array();
    for (const auto& c : cs) {
        out.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
    }
    return out;
}

json bounds_json(const BoundSet& b) {
    return {{"rho_in", b.rho_in},
            {"rho_r", b.rho_r},
            {"rho", b.rho},
            {"rho_r_i", arr(b.rho_r_i)},
            {"rho_i", arr(b.rho_i)},
            {"tilde_rho_i", arr(b.tilde_rho_i)},
            {"tilde_rho_unscaled", b.tilde_rho_unscaled},
            {"rho_ur", b.rho_ur},
            {"gamma0", b.gamma0},
            {"gamma2", b.gamma2},
            {"rho_ua_j", arr(b.rho_ua_j)},
            {"tilde_rho_u_j", arr(b.tilde_rho_u_j)},
            {"tilde_rho_y_j", arr(b.tilde_rho_y_j)},
            {"b_f_Xr", b.b_f_Xr},
            {"b_fj_Xr", arr(b.b_fj_Xr)},
            {"b_f_Xa", b.b_f_Xa},
            {"L_f_Xa", b.L_f_Xa},
            {"Xr", box(b.Xr)},
            {"Xa", box(b.Xa)},
            {"T_certified", b.T_certified},
            {"gxm_norm", b.gxm_norm},
            {"gxm_scaled", arr(b.gxm_scaled)},
            {"conditions", conditions(b.conditions)}};
}

}  // namespace

std::string bounds_report(const BoundSet& bounds) {
    json j{{"schema_version", kReportSchemaVersion}, {"bounds", bounds_json(bounds)}};
    return j.dump(2) + "\n";
}

std::string design_report(const L1RGController& c) {
    const Plant& P = c.spec.plant;
    const char* status = c.certified ? "certified" : "empirical";
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["plant"] = {{"A", arr(P.A)}, {"B", arr(P.B)}, {"C", arr(P.C)}, {"Kx", arr(P.Kx)}, {"Kv", arr(P.Kv)}};
    j["constraints"] = {{"X", box(c.spec.X)}, {"U", box(c.spec.U)}, {"X0", box(c.spec.X0)},
                        {"r_bound", c.spec.r_bound}, {"v_bound", c.spec.v_bound}};
    j["l1"] = {{"kf", arr(c.options.l1.kf)}, {"Ae", arr(c.options.l1.Ae)}, {"gamma1", c.options.l1.gamma1},
               {"T_requested", c.options.l1.T}};
    j["bounds"] = bounds_json(c.bounds);
    j["tightening"] = {{"tildeX", box(c.tildeX)}, {"tildeU", box(c.tildeU)}, {"Xn", box(c.Xn)},
                       {"Un", box(c.Un)},         {"Xn_hat", box(c.Xn_hat)}, {"Un_hat", box(c.Un_hat)},
                       {"nu", c.nu}};
    j["governor"] = {{"Td", c.gov.Td},
                     {"epsilon", c.gov.epsilon},
                     {"practical_sampling", c.options.practical_sampling},
                     {"k_star", c.gov.k_star},
                     {"rows", c.gov.tilOinf.rows()},
                     {"polytope", c.gov.tilOinf.to_text()}};
    j["sampling"] = {{"T_certified", c.bounds.T_certified},
                     {"T_run", c.T_run},
                     {"gamma0_run", gamma0(c.T_run, c.bounds.b_f_Xa, c.options.l1.Ae, P.B)},
                     {"certified", c.certified}};
    j["bound_status"] = {{"tilde_rho_i", "certified"},
                         {"tilde_rho_u_j", "certified"},
                         {"rho_ua_j", status},
                         {"gamma0_run", status}};
    j["conditions"] = conditions(c.conditions);
    return j.dump(2) + "\n";
}

std::string verification_report(const VerificationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json e{{"name", c.name},
               {"theoretical", c.theoretical},
               {"empirical", c.empirical},
               {"margin", c.margin},
               {"satisfied", c.satisfied},
               {"applicable", c.applicable},
               {"certified", c.certified},
               {"worst_time", c.worst_time}};
        e["first_violation"] = c.first_violation ? json(*c.first_violation) : json(nullptr);
        checks.push_back(std::move(e));
    }
    json j{{"schema_version", kReportSchemaVersion}, {"passed", rep.passed()}, {"checks", checks}};
    return j.dump(2) + "\n";
}

ReportView read_design_report(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw ParameterError("design report: unsupported schema_version");
        }
        const json& b = j.at("bounds");
        ReportView r;
        r.targets.tilde_rho_i = vec(b.at("tilde_rho_i"));
        r.targets.tilde_rho_y_j = vec(b.at("tilde_rho_y_j"));
        r.targets.rho_ua_j = vec(b.at("rho_ua_j"));
        r.targets.gamma0 = j.at("sampling").at("gamma0_run").get<double>();
        r.targets.certified = j.at("sampling").at("certified").get<bool>();
        r.X = box_of(j.at("constraints").at("X"));
        r.U = box_of(j.at("constraints").at("U"));
        const auto rows = j.at("plant").at("C");
        r.C.resize(static_cast<Eigen::Index>(rows.size()), r.X.dim());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            r.C.row(static_cast<Eigen::Index>(i)) = vec(rows[i]).transpose();
        }
        r.T_run = j.at("sampling").at("T_run").get<double>();
        r.Td = j.at("governor").at("Td").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw ParameterError(std::string("design report: ") + e.what());
    }
}

}  // namespace l1rg
