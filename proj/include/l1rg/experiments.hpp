#pragma once

// Multi-run workflows shared by the command line and the acceptance checks.

#include <string>
#include <vector>

#include "l1rg/config.hpp"

namespace l1rg {

struct ScenarioTraces {
    SimTrace l1rg;
    SimTrace plain;
    SimTrace nominal;
    SimTrace reference;
};

/// L1-RG and plain-RG runs, then nominal and reference replays of the
/// L1-RG command. Independent runs execute concurrently.
ScenarioTraces run_scenario(const ExperimentConfig& cfg, const L1RGController& ctrl, const SimOptions& opt);

struct Table2Entry {
    std::string config;
    bool scaling = false;
    double gamma1 = 0.0;
    double T = 0.0;
    Vec kf;
    BoundSet bounds;
    std::optional<ExpectedBounds> expected;
};

struct CommandSweep {
    std::string config;
    Eigen::Index state = 0;
    double cap = 0.0;
    double sup_v = 0.0;
};

struct Table2 {
    std::vector<Table2Entry> entries;
    CommandSweep sweep;
};

/// Every config with and without scaling at its configured T (the sample-time
/// condition is recorded, not enforced), evaluated concurrently, plus the
/// largest command norm keeping the scaled condition feasible for the most
/// tightly constrained state of the first config.
Table2 table2(const std::vector<ExperimentConfig>& configs);

std::string table2_text(const Table2& t);
std::string table2_csv(const Table2& t);

}  // namespace l1rg
