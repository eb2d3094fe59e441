#pragma once

// JSON design and verification reports.

#include <string>

#include "l1rg/simkit.hpp"

namespace l1rg {

inline constexpr int kReportSchemaVersion = 1;

std::string design_report(const L1RGController& ctrl);
std::string bounds_report(const BoundSet& bounds);
std::string verification_report(const VerificationReport& rep);

/// What `verify` needs back from a design report.
struct ReportView {
    BoundTargets targets;
    Box X;
    Box U;
    Mat C;
    double T_run = 0.0;
    double Td = 0.0;
};

ReportView read_design_report(const std::string& text);

}  // namespace l1rg
