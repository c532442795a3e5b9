#include "wot/common.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace wot {
namespace {
std::atomic<bool> g_warnings{true};
std::mutex g_warn_mutex;
}  // namespace

void warn(std::string_view message) {
  if (!g_warnings.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

bool warnings_enabled() { return g_warnings.load(); }

}  // namespace wot
