#pragma once

#include <string_view>

namespace adafgl::log {

/// Warnings go to stderr unless silenced (tests and the acceptance suite
/// silence them).
void warn(std::string_view message);
void set_quiet(bool quiet);
bool quiet();

} // namespace adafgl::log
