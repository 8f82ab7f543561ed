#pragma once

#include <string>

#include "robustssm/simlab.hpp"

namespace robustssm {

/// Parses a scenario document. An empty or whitespace-only document yields
/// the defaults. Unknown keys at any level are rejected; parse and
/// validation problems throw std::invalid_argument with a line-anchored
/// message.
Scenario scenario_from_text(const std::string& text);

/// Reads and parses a scenario file; missing files throw.
Scenario load_scenario(const std::string& path);

/// Serializes a scenario back to its document form.
std::string scenario_to_text(const Scenario& sc);

}  // namespace robustssm
