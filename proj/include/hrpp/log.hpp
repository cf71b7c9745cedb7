// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>

namespace hrpp {

enum class LogLevel { Info, Warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Writes to std::clog.
inline LogSink default_log_sink() {
  return [](LogLevel level, const std::string& msg) {
    std::clog << (level == LogLevel::Warning ? "[hrpp warning] " : "[hrpp] ") << msg << '\n';
  };
}

namespace detail {
inline LogSink& log_sink() {
  static LogSink sink = default_log_sink();
  return sink;
}
}  // namespace detail

/// Replaces the process-wide log sink. Pass an empty function to silence output.
inline void set_log_sink(LogSink sink) { detail::log_sink() = std::move(sink); }

inline void log(LogLevel level, const std::string& msg) {
  if (auto& sink = detail::log_sink()) sink(level, msg);
}

inline void log_warning(const std::string& msg) { log(LogLevel::Warning, msg); }
inline void log_info(const std::string& msg) { log(LogLevel::Info, msg); }

}  // namespace hrpp
