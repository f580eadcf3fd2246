#pragma once

#include <string>

#include <json.hpp>

#include "ellab/branch.hpp"
#include "ellab/config.hpp"

namespace ellab {

inline constexpr const char* kToolName = "ellab";
inline constexpr const char* kToolVersion = "0.1.0";

/// JSON-safe number: finite values stay numbers, infinities become strings.
nlohmann::ordered_json json_number(double v);

/// Common preamble: tool identity, subcommand, seed, config echo.
nlohmann::ordered_json report_header(const ExperimentConfig& cfg, const std::string& subcommand,
                                     bool stable);

void attach_window(nlohmann::ordered_json& report, const WindowTriple& window);

/// Norms, energy and residuals of one state at one lambda.
nlohmann::ordered_json state_summary(const Problem& pb, const StateVector& s, double lambda);

/// Branch rows in the fixed CSV schema
/// lambda,sigma,energy,E_norm,grad_norm,Vp_norm,hp_norm,residual.
std::string branch_csv(const Branch& branch);

std::string sweep_csv(const MuSweep& sweep);

void write_text(const std::string& path, const std::string& text);

}  // namespace ellab
