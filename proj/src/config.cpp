#include "l1rg/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace l1rg {

using json = nlohmann::json;

namespace {

const json& member(const json& j, const std::string& path, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(path + "." + key, "missing field");
    }
    return j.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw ConfigError(path, "expected a number");
    }
    return j.get<double>();
}

double number_or(const json& j, const std::string& path, const std::string& key, double fallback) {
    return j.contains(key) ? number(j.at(key), path + "." + key) : fallback;
}

bool flag_or(const json& j, const std::string& path, const std::string& key, bool fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_boolean()) {
        throw ConfigError(path + "." + key, "expected true or false");
    }
    return j.at(key).get<bool>();
}

Vec vec(const json& j, const std::string& path) {
    if (!j.is_array()) {
        throw ConfigError(path, "expected an array of numbers");
    }
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
    }
    return v;
}

Mat mat(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(path, "expected a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    Mat M;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const std::string rp = path + "[" + std::to_string(i) + "]";
        const Vec row = vec(j[static_cast<std::size_t>(i)], rp);
        if (i == 0) {
            M.resize(rows, row.size());
        } else if (row.size() != M.cols()) {
            throw ConfigError(rp, "row length differs from the first row");
        }
        M.row(i) = row.transpose();
    }
    return M;
}

Box box(const json& j, const std::string& path) {
    Vec lo = vec(member(j, path, "lower"), path + ".lower");
    Vec up = vec(member(j, path, "upper"), path + ".upper");
    if (lo.size() != up.size()) {
        throw ConfigError(path, "lower and upper differ in length");
    }
    return {std::move(lo), std::move(up)};
}

json to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        rows.push_back(to_json(Vec(M.row(i).transpose())));
    }
    return rows;
}

json to_json(const Box& b) { return {{"lower", to_json(b.lower)}, {"upper", to_json(b.upper)}}; }

void check_shapes(const ExperimentConfig& c) {
    const auto n = c.A.rows();
    const auto m = c.B.cols();
    auto need = [](bool ok, const char* field, const char* what) {
        if (!ok) {
            throw ConfigError(field, what);
        }
    };
    need(c.A.cols() == n, "plant.A", "must be square");
    need(c.B.rows() == n, "plant.B", "row count must match A");
    need(c.C.cols() == n, "plant.C", "column count must match A");
    need(c.Kx.rows() == m && c.Kx.cols() == n, "plant.Kx", "must be m x n");
    need(c.Kv.rows() == m && c.Kv.cols() == m, "plant.Kv", "must be m x m");
    need(c.X.dim() == n, "constraints.X", "dimension must match the state");
    need(c.X0.dim() == n, "constraints.X0", "dimension must match the state");
    need(c.U.dim() == m, "constraints.U", "dimension must match the input");
    need(c.v0.size() == 0 || c.v0.size() == m, "constraints.v0", "dimension must match the input");
    need(c.kf.size() == m, "l1.kf", "one bandwidth per input channel");
    need(c.x0.size() == 0 || c.x0.size() == n, "scenario.x0", "dimension must match the state");
    for (const auto& v : c.r.values) {
        need(v.size() == m, "scenario.r", "each value must match the input dimension");
    }
    for (const auto& ch : c.channels) {
        need(ch.g.size() == n && ch.q.size() == n, "uncertainty.channels", "g and q must match the state");
    }
    need(c.uncertainty != "tabulated" || static_cast<Eigen::Index>(c.channels.size()) == m,
         "uncertainty.channels", "one channel per input");
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

}  // namespace

std::shared_ptr<const UncertaintyModel> ExperimentConfig::uncertainty_model() const {
    if (uncertainty == "f16") {
        return f16_uncertainty();
    }
    if (uncertainty == "zero") {
        return zero_uncertainty(A.rows(), B.cols());
    }
    return std::make_shared<TabulatedUncertainty>(A.rows(), channels);
}

ProblemSpec ExperimentConfig::problem() const {
    return {plant(), uncertainty_model(), X, U, X0, r_bound, v_bound, v0};
}

DesignOptions ExperimentConfig::design_options() const {
    DesignOptions o;
    o.l1 = {ae_scale * Mat::Identity(A.rows(), A.rows()), kf, T, gamma1};
    o.bounds = bound_options;
    o.Td = Td;
    o.epsilon = epsilon;
    o.practical_sampling = practical_sampling;
    o.k_max = k_max;
    o.T_practical = T_practical;
    return o;
}

SimOptions ExperimentConfig::sim_options() const { return {horizon, h, log_stride, x0}; }

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("line " + std::to_string(line_of(text, e.byte)), e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("$", "top level must be an object");
    }
    ExperimentConfig c;
    c.name = j.value("name", std::string{});

    const json& p = member(j, "$", "plant");
    c.A = mat(member(p, "plant", "A"), "plant.A");
    c.B = mat(member(p, "plant", "B"), "plant.B");
    c.C = mat(member(p, "plant", "C"), "plant.C");
    c.Kx = mat(member(p, "plant", "Kx"), "plant.Kx");
    c.Kv = mat(member(p, "plant", "Kv"), "plant.Kv");

    const json& k = member(j, "$", "constraints");
    c.X = box(member(k, "constraints", "X"), "constraints.X");
    c.U = box(member(k, "constraints", "U"), "constraints.U");
    c.X0 = box(member(k, "constraints", "X0"), "constraints.X0");
    c.r_bound = number_or(k, "constraints", "r_bound", c.r_bound);
    c.v_bound = number_or(k, "constraints", "v_bound", c.v_bound);
    if (k.contains("v0")) {
        c.v0 = vec(k.at("v0"), "constraints.v0");
    }

    if (j.contains("uncertainty")) {
        const json& u = j.at("uncertainty");
        c.uncertainty = u.value("model", std::string("f16"));
        if (c.uncertainty == "tabulated") {
            const json& chs = member(u, "uncertainty", "channels");
            if (!chs.is_array()) {
                throw ConfigError("uncertainty.channels", "expected an array");
            }
            for (std::size_t i = 0; i < chs.size(); ++i) {
                const std::string cp = "uncertainty.channels[" + std::to_string(i) + "]";
                const json& ch = chs[i];
                TabulatedUncertainty::Channel t;
                t.c = number_or(ch, cp, "c", 0.0);
                t.a = number_or(ch, cp, "a", 0.0);
                t.w = number_or(ch, cp, "w", 0.0);
                t.phi = number_or(ch, cp, "phi", 0.0);
                t.g = ch.contains("g") ? vec(ch.at("g"), cp + ".g") : Vec::Zero(c.A.rows());
                t.q = ch.contains("q") ? vec(ch.at("q"), cp + ".q") : Vec::Zero(c.A.rows());
                c.channels.push_back(std::move(t));
            }
        } else if (c.uncertainty != "f16" && c.uncertainty != "zero") {
            throw ConfigError("uncertainty.model", "expected \"f16\", \"zero\" or \"tabulated\"");
        }
    }

    const json& l = member(j, "$", "l1");
    c.kf = vec(member(l, "l1", "kf"), "l1.kf");
    c.ae_scale = number_or(l, "l1", "ae_scale", c.ae_scale);
    c.gamma1 = number_or(l, "l1", "gamma1", c.gamma1);
    c.T = number_or(l, "l1", "T", c.T);
    c.T_practical = number_or(l, "l1", "T_practical", c.T_practical);
    c.bound_options.scaling = flag_or(l, "l1", "scaling", c.bound_options.scaling);
    c.bound_options.Tx_offdiag = number_or(l, "l1", "Tx_offdiag", c.bound_options.Tx_offdiag);
    c.bound_options.tx_search = flag_or(l, "l1", "tx_search", c.bound_options.tx_search);
    c.bound_options.choose_sample_time = flag_or(l, "l1", "choose_sample_time", c.bound_options.choose_sample_time);

    if (j.contains("governor")) {
        const json& g = j.at("governor");
        c.Td = number_or(g, "governor", "Td", c.Td);
        c.epsilon = number_or(g, "governor", "epsilon", c.epsilon);
        c.practical_sampling = flag_or(g, "governor", "practical_sampling", c.practical_sampling);
        c.k_max = static_cast<int>(number_or(g, "governor", "k_max", c.k_max));
    }

    if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        if (s.contains("x0")) {
            c.x0 = vec(s.at("x0"), "scenario.x0");
        }
        if (s.contains("r")) {
            const json& r = s.at("r");
            if (!r.is_array()) {
                throw ConfigError("scenario.r", "expected an array of {t, value}");
            }
            for (std::size_t i = 0; i < r.size(); ++i) {
                const std::string rp = "scenario.r[" + std::to_string(i) + "]";
                try {
                    c.r.add(number(member(r[i], rp, "t"), rp + ".t"), vec(member(r[i], rp, "value"), rp + ".value"));
                } catch (const ParameterError& e) {
                    throw ConfigError(rp, e.what());
                }
            }
        }
        c.horizon = number_or(s, "scenario", "horizon", c.horizon);
        c.h = number_or(s, "scenario", "h", c.h);
        c.log_stride = static_cast<long>(number_or(s, "scenario", "log_stride", static_cast<double>(c.log_stride)));
    }
    if (c.r.empty()) {
        c.r = Schedule::constant(Vec::Zero(c.B.cols()));
    }
    c.output_dir = j.value("output_dir", c.output_dir);

    if (j.contains("expected")) {
        const json& e = j.at("expected");
        ExpectedBounds x;
        x.gamma1 = number_or(e, "expected", "gamma1", 0.0);
        x.b_f_Xr = number_or(e, "expected", "b_f_Xr", 0.0);
        x.tilde_rho = vec(member(e, "expected", "tilde_rho"), "expected.tilde_rho");
        x.tilde_rho_u = vec(member(e, "expected", "tilde_rho_u"), "expected.tilde_rho_u");
        x.tilde_rho_unscaled = number_or(e, "expected", "tilde_rho_unscaled", 0.0);
        if (e.contains("tilde_rho_u_unscaled")) {
            x.tilde_rho_u_unscaled = vec(e.at("tilde_rho_u_unscaled"), "expected.tilde_rho_u_unscaled");
        }
        c.expected = std::move(x);
    }
    check_shapes(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path, "cannot open config file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["plant"] = {{"A", to_json(c.A)}, {"B", to_json(c.B)}, {"C", to_json(c.C)}, {"Kx", to_json(c.Kx)},
                  {"Kv", to_json(c.Kv)}};
    j["constraints"] = {{"X", to_json(c.X)},
                        {"U", to_json(c.U)},
                        {"X0", to_json(c.X0)},
                        {"r_bound", c.r_bound},
                        {"v_bound", c.v_bound}};
    if (c.v0.size() > 0) {
        j["constraints"]["v0"] = to_json(c.v0);
    }
    j["uncertainty"] = {{"model", c.uncertainty}};
    if (c.uncertainty == "tabulated") {
        json chs = json::array();
        for (const auto& ch : c.channels) {
            chs.push_back({{"c", ch.c}, {"a", ch.a}, {"w", ch.w}, {"phi", ch.phi}, {"g", to_json(ch.g)},
                           {"q", to_json(ch.q)}});
        }
        j["uncertainty"]["channels"] = chs;
    }
    j["l1"] = {{"kf", to_json(c.kf)},
               {"ae_scale", c.ae_scale},
               {"gamma1", c.gamma1},
               {"T", c.T},
               {"T_practical", c.T_practical},
               {"scaling", c.bound_options.scaling},
               {"Tx_offdiag", c.bound_options.Tx_offdiag},
               {"tx_search", c.bound_options.tx_search},
               {"choose_sample_time", c.bound_options.choose_sample_time}};
    j["governor"] = {{"Td", c.Td}, {"epsilon", c.epsilon}, {"practical_sampling", c.practical_sampling},
                     {"k_max", c.k_max}};
    json r = json::array();
    for (std::size_t i = 0; i < c.r.times.size(); ++i) {
        r.push_back({{"t", c.r.times[i]}, {"value", to_json(c.r.values[i])}});
    }
    j["scenario"] = {{"r", r}, {"horizon", c.horizon}, {"h", c.h}, {"log_stride", c.log_stride}};
    if (c.x0.size() > 0) {
        j["scenario"]["x0"] = to_json(c.x0);
    }
    j["output_dir"] = c.output_dir;
    if (c.expected) {
        const auto& e = *c.expected;
        j["expected"] = {{"gamma1", e.gamma1},
                         {"b_f_Xr", e.b_f_Xr},
                         {"tilde_rho", to_json(e.tilde_rho)},
                         {"tilde_rho_u", to_json(e.tilde_rho_u)},
                         {"tilde_rho_unscaled", e.tilde_rho_unscaled}};
        if (e.tilde_rho_u_unscaled.size() > 0) {
            j["expected"]["tilde_rho_u_unscaled"] = to_json(e.tilde_rho_u_unscaled);
        }
    }
    return j.dump(2) + "\n";
}

}  // namespace l1rg
