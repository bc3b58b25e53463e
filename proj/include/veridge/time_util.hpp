/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace veridge {

using TimePoint = std::chrono::system_clock::time_point;

/// UTC ISO-8601 with microsecond precision, e.g. "2026-08-10T12:34:56.000123Z".
std::string to_iso8601(TimePoint tp);
TimePoint parse_iso8601(std::string_view text);

inline double ms_between(TimePoint from, TimePoint to) {
  return std::chrono::duration<double, std::milli>(to - from).count();
}

}  // namespace veridge
