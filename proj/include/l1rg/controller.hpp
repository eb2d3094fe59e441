#pragma once

// Integrated design (tightening from L1 bounds, governor on the tightened
// nominal problem) and the run-time control law.

#include <memory>

#include "l1rg/l1ac.hpp"
#include "l1rg/refgov.hpp"

namespace l1rg {

struct ProblemSpec {
    Plant plant;
    std::shared_ptr<const UncertaintyModel> f;
    Box X;
    Box U;
    Box X0;
    double r_bound = 10.0;
    double v_bound = 10.0;  ///< |v| entering the stability condition
    Vec v0;                 ///< command at t = 0 (defaults to zero)

    Box V() const { return Box::ball(plant.m(), r_bound); }
    void validate() const;
};

struct BoundOptions {
    double Tx_offdiag = 0.01;
    bool scaling = true;
    bool tx_search = false;        ///< try {1, 0.1, 0.01, 0.001} per state
    bool choose_sample_time = true;  ///< search T downward from the configured T
};

/// The bound pipeline alone: rho_r, per-state scaling, sample time, input bounds.
BoundSet compute_bounds(const ProblemSpec& spec, const L1Config& l1, const BoundOptions& opt);

struct DesignOptions {
    L1Config l1;
    BoundOptions bounds;
    double Td = 0.005;
    double epsilon = 0.01;
    bool practical_sampling = true;
    int k_max = 500;
    double T_practical = 0.0;  ///< run-time T; 0 means use the certified T
};

struct L1RGController {
    ProblemSpec spec;
    DesignOptions options;
    BoundSet bounds;
    GovernorDesign gov;
    Box tildeX;
    Box tildeU;
    Box Xn;
    Box Un;
    Box Xn_hat;
    Box Un_hat;
    double nu = 0.0;
    double T_run = 0.0;
    bool certified = false;  ///< run-time T no larger than the certified T
    std::vector<Condition> conditions;

    PredictorMatrices predictor() const;
    AdaptiveLaw adaptive_law() const { return AdaptiveLaw(options.l1.Ae, spec.plant.B, T_run); }
};

L1RGController design(const ProblemSpec& spec, const DesignOptions& options);

/// Governor on the untightened constraints, as used by a plain RG.
GovernorDesign design_plain_governor(const ProblemSpec& spec, double Td, double epsilon, int k_max);

/// Integer tick counters of the integrator grid.
struct Clocks {
    long tick = 0;
    long ticks_per_T = 1;
    long ticks_per_Td = 1;
};

struct RuntimeStep {
    Vec u;
    Vec ub;
    Vec v;
    double kappa = 1.0;
    int binding_row = -1;
    bool governor_event = false;
    bool adaptive_event = false;
};

/// Applies the events due at this tick (adaptive update at multiples of T,
/// governor update at multiples of Td) and returns u = Kx x + Kv v + ua.
/// `v` holds the current command between governor events.
RuntimeStep runtime_step(const L1RGController& ctrl, const AdaptiveLaw& law, const Clocks& clocks,
                         const Vec& x_meas, const Vec& r_k, AdaptiveState& adaptive, GovernorState& gov,
                         Vec& v);

}  // namespace l1rg
