#pragma once

#include <string>

#include "audit/audit.hpp"

namespace audit {

// Loads an AuditConfig from a TOML file. Supported subset: [section]
// headers (ignored for key lookup), key = value with strings, integers,
// floats, booleans, and flat arrays; # comments. Unknown keys are an error,
// as is any value of the wrong type.
AuditConfig load_config(const std::string& path);

void save_config(const AuditConfig& cfg, const std::string& path);

}  // namespace audit
