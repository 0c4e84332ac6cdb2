#include "adafgl/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace adafgl::log {
namespace {
std::atomic<bool> g_quiet{false};
std::mutex g_mutex;
} // namespace

void warn(std::string_view message) {
    if (g_quiet.load()) {
        return;
    }
    std::lock_guard lock(g_mutex);
    std::cerr << "warning: " << message << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }
bool quiet() { return g_quiet.load(); }

} // namespace adafgl::log
