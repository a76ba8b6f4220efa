#pragma once

#include <string>

#include "xsim/sim.hpp"

namespace xsim {

// JSON with // and /* */ comments. Unknown keys and malformed values throw ModelError("parse").
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& sc);

}  // namespace xsim
