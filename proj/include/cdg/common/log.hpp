#pragma once

#include <cstddef>
#include <string_view>

namespace cdg::log {

enum class Level { debug = 0, info = 1, warning = 2, error = 3, quiet = 4 };

void set_level(Level level);
Level level();

void debug(std::string_view message);
void info(std::string_view message);
void warning(std::string_view message);
void error(std::string_view message);

// Number of warnings emitted on this thread since the last reset. Tests use it
// to observe diagnostics that do not throw.
std::size_t warning_count();
void reset_warning_count();

}  // namespace cdg::log
