#include "cdg/common/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace cdg::log {
namespace {

std::atomic<Level> g_level{Level::info};
thread_local std::size_t t_warnings = 0;
std::mutex g_mutex;

void emit(Level lvl, std::string_view tag, std::string_view message) {
  if (lvl < g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[" << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level lvl) { g_level.store(lvl); }
Level level() { return g_level.load(); }

void debug(std::string_view message) { emit(Level::debug, "debug", message); }
void info(std::string_view message) { emit(Level::info, "info", message); }

void warning(std::string_view message) {
  ++t_warnings;
  emit(Level::warning, "warning", message);
}

void error(std::string_view message) { emit(Level::error, "error", message); }

std::size_t warning_count() { return t_warnings; }
void reset_warning_count() { t_warnings = 0; }

}  // namespace cdg::log
