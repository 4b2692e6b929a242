#include "stiefel_dgt/warnings.hpp"

#include <iostream>
#include <mutex>

namespace stiefel_dgt {

namespace {
std::mutex g_mutex;
WarningHandler g_handler;
}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (g_handler)
    g_handler(message);
  else
    std::cerr << "[warning] " << message << "\n";
}

void set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_handler = std::move(handler);
}

}  // namespace stiefel_dgt
