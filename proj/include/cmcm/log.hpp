#pragma once

#include <functional>
#include <string>

namespace cmcm {

using WarningHandler = std::function<void(const std::string&)>;

/// Emits a non-fatal diagnostic through the installed handler (stderr by default).
void warn(const std::string& message);

/// Installs a handler and returns the previous one. Passing nullptr restores stderr.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace cmcm
