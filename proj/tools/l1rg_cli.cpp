#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "l1rg/experiments.hpp"
#include "l1rg/report.hpp"
#include "l1rg/svg.hpp"

namespace fs = std::filesystem;
using namespace l1rg;

namespace {

enum Exit { kOk = 0, kInput = 1, kInfeasible = 2, kDiverged = 3, kVerifyFailed = 4 };

struct Args {
    std::vector<std::string> configs;
    std::string out;
    std::optional<bool> practical;
    std::optional<double> horizon;
    std::optional<double> step;
    std::string report;
    std::string trace;
};

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path().empty() ? fs::path(".") : p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw ParameterError("cannot write " + p.string());
    }
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path, "cannot open file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig config_from(const Args& a) {
    if (a.configs.empty()) {
        throw ConfigError("--config", "required");
    }
    ExperimentConfig cfg = load_config(a.configs.front());
    if (a.practical) cfg.practical_sampling = *a.practical;
    if (a.horizon) cfg.horizon = *a.horizon;
    if (a.step) cfg.h = *a.step;
    return cfg;
}

fs::path out_dir(const Args& a, const ExperimentConfig& cfg) { return a.out.empty() ? cfg.output_dir : a.out; }

L1RGController design_and_report(const ExperimentConfig& cfg, const fs::path& dir) {
    const L1RGController ctrl = design(cfg.problem(), cfg.design_options());
    write_file(dir / "design_report.json", design_report(ctrl));
    write_file(dir / "governor_polytope.txt", ctrl.gov.tilOinf.to_text());
    return ctrl;
}

int cmd_design(const Args& a) {
    const ExperimentConfig cfg = config_from(a);
    const fs::path dir = out_dir(a, cfg);
    const L1RGController ctrl = design_and_report(cfg, dir);
    std::cout << "design ok: k* = " << ctrl.gov.k_star << ", " << ctrl.gov.tilOinf.rows()
              << " rows, T certified = " << ctrl.bounds.T_certified << ", T run = " << ctrl.T_run
              << (ctrl.certified ? " (certified)" : " (empirical)") << "\n"
              << "report: " << (dir / "design_report.json").string() << "\n";
    return kOk;
}

void write_trace(const fs::path& p, const SimTrace& tr) {
    std::ostringstream os;
    write_csv(os, tr);
    write_file(p, os.str());
}

int cmd_simulate(const Args& a) {
    const ExperimentConfig cfg = config_from(a);
    const fs::path dir = out_dir(a, cfg);
    const L1RGController ctrl = design_and_report(cfg, dir);
    const ScenarioTraces tr = run_scenario(cfg, ctrl, cfg.sim_options());
    write_trace(dir / "l1rg.csv", tr.l1rg);
    write_trace(dir / "plain_rg.csv", tr.plain);
    write_trace(dir / "nominal.csv", tr.nominal);
    write_trace(dir / "reference.csv", tr.reference);
    for (const auto& [name, svg] : standard_figures(ctrl, tr.l1rg, tr.plain)) {
        write_file(dir / name, svg);
    }
    std::cout << "simulated " << tr.l1rg.rows() << " rows at h = " << tr.l1rg.h << " into " << dir.string() << "\n";
    return kOk;
}

// No adaptive signal at all: a plain-RG run, for which only the constraint rows apply.
bool adaptive_free(const SimTrace& tr) {
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        if (!tr.ua[k].isZero(0) || !tr.sigma1[k].isZero(0) || !tr.xtilde[k].isZero(0) ||
            (k < tr.sigma2.size() && !tr.sigma2[k].isZero(0))) {
            return false;
        }
    }
    return true;
}

int cmd_verify(const Args& a) {
    if (a.report.empty() || a.trace.empty()) {
        throw ConfigError("--report/--trace", "both are required");
    }
    const ReportView rv = read_design_report(read_file(a.report));
    std::istringstream csv(read_file(a.trace));
    const SimTrace tr = read_csv(csv);
    const bool plain = adaptive_free(tr);
    const VerificationReport rep = verify_bounds(tr, plain ? BoundTargets{} : rv.targets, rv.X, rv.U, rv.C);
    if (plain) {
        std::cout << "trace carries no adaptive signal: bound rows not applicable\n";
    }
    std::cout << rep.to_table();
    const fs::path out = a.out.empty() ? fs::path(a.trace).replace_extension(".verify.json")
                                       : fs::path(a.out) / "verification.json";
    write_file(out, verification_report(rep));
    std::cout << (rep.passed() ? "all checks passed" : "verification FAILED") << "\n";
    return rep.passed() ? kOk : kVerifyFailed;
}

int cmd_table2(const Args& a) {
    std::vector<std::string> paths = a.configs;
    if (paths.empty()) {
        const fs::path base = L1RG_CONFIG_DIR;
        paths = {(base / "f16_kf200.json").string(), (base / "f16_kf1000.json").string()};
    }
    std::vector<ExperimentConfig> cfgs;
    for (const auto& p : paths) {
        cfgs.push_back(load_config(p));
    }
    const Table2 t = table2(cfgs);
    std::cout << table2_text(t);
    write_file(fs::path(a.out.empty() ? "." : a.out) / "table2.csv", table2_csv(t));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"L1 adaptive control with a reference governor"};
    app.require_subcommand(1);
    Args a;
    auto common = [&](CLI::App* sub, bool many) {
        if (many) {
            sub->add_option("--config", a.configs, "experiment config (JSON), repeatable");
        } else {
            sub->add_option("--config", a.configs, "experiment config (JSON)")->expected(1);
        }
        sub->add_option("--out", a.out, "output directory");
    };
    auto* design_cmd = app.add_subcommand("design", "compute bounds, tighten constraints, build the governor");
    common(design_cmd, false);
    design_cmd->add_option("--practical-sampling", a.practical, "skip inter-sample tightening (true/false)");
    auto* sim_cmd = app.add_subcommand("simulate", "design, then run L1-RG, plain RG, nominal and reference");
    common(sim_cmd, false);
    sim_cmd->add_option("--practical-sampling", a.practical, "skip inter-sample tightening (true/false)");
    sim_cmd->add_option("--horizon", a.horizon, "simulation horizon [s]");
    sim_cmd->add_option("--step", a.step, "integrator step h [s]");
    auto* verify_cmd = app.add_subcommand("verify", "check a trace against a design report");
    verify_cmd->add_option("--report", a.report, "design_report.json")->required();
    verify_cmd->add_option("--trace", a.trace, "trace CSV")->required();
    verify_cmd->add_option("--out", a.out, "directory for verification.json");
    auto* table_cmd = app.add_subcommand("table2", "bound table with and without scaling");
    common(table_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInput;
    }

    try {
        if (*design_cmd) return cmd_design(a);
        if (*sim_cmd) return cmd_simulate(a);
        if (*verify_cmd) return cmd_verify(a);
        return cmd_table2(a);
    } catch (const ConfigError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const DimensionError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    } catch (const DesignError& e) {
        std::cerr << "design infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const DeterminationError& e) {
        std::cerr << "design infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const DivergenceError& e) {
        std::cerr << "simulation diverged: " << e.what() << "\n";
        return kDiverged;
    } catch (const InvarianceLoss& e) {
        std::cerr << "simulation diverged: " << e.what() << "\n";
        return kDiverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInput;
    }
}
