#pragma once

// Experiment configuration documents (JSON).

#include <optional>
#include <string>

#include "l1rg/simkit.hpp"

namespace l1rg {

/// Parse or validation failure in a config document; `field` is a JSON path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Reference values a bound-table run is compared against.
struct ExpectedBounds {
    double gamma1 = 0.0;
    double b_f_Xr = 0.0;
    Vec tilde_rho;
    Vec tilde_rho_u;
    double tilde_rho_unscaled = 0.0;
    Vec tilde_rho_u_unscaled;
};

struct ExperimentConfig {
    std::string name;
    Mat A, B, C, Kx, Kv;
    Box X, U, X0;
    double r_bound = 10.0;
    double v_bound = 10.0;
    Vec v0;

    /// "f16", "zero" or "tabulated"
    std::string uncertainty = "f16";
    std::vector<TabulatedUncertainty::Channel> channels;

    Vec kf;
    double ae_scale = -10.0;  ///< Ae = ae_scale * I
    double gamma1 = 0.01;
    double T = 1e-5;
    double T_practical = 0.0;
    BoundOptions bound_options;

    double Td = 0.005;
    double epsilon = 0.01;
    bool practical_sampling = true;
    int k_max = 500;

    Vec x0;
    Schedule r;
    double horizon = 15.0;
    double h = 0.0;
    long log_stride = 1;
    std::string output_dir = "out";

    std::optional<ExpectedBounds> expected;

    Plant plant() const { return {A, B, C, Kx, Kv}; }
    std::shared_ptr<const UncertaintyModel> uncertainty_model() const;
    ProblemSpec problem() const;
    DesignOptions design_options() const;
    SimOptions sim_options() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace l1rg
