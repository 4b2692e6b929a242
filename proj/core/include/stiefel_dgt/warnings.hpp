#pragma once

#include <functional>
#include <string>

namespace stiefel_dgt {

using WarningHandler = std::function<void(const std::string&)>;

// Non-fatal diagnostics (iterate left the safety region, step size above the
// theoretical bound, ...). Default handler writes to stderr.
void warn(const std::string& message);
void set_warning_handler(WarningHandler handler);

}  // namespace stiefel_dgt
