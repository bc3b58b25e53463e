/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/time_util.hpp"

#include <cstdio>
#include <ctime>

#include "veridge/errors.hpp"

namespace veridge {

std::string to_iso8601(TimePoint tp) {
  using namespace std::chrono;
  auto micros = duration_cast<microseconds>(tp.time_since_epoch());
  std::time_t secs = static_cast<std::time_t>(micros.count() / 1000000);
  long frac = static_cast<long>(micros.count() % 1000000);
  if (frac < 0) {  // pre-epoch timestamps never occur in practice
    secs -= 1;
    frac += 1000000;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06ldZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, frac);
  return buf;
}

TimePoint parse_iso8601(std::string_view text) {
  std::tm tm{};
  long frac = 0;
  int consumed = 0;
  std::string s(text);
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%6ldZ%n", &tm.tm_year, &tm.tm_mon,
                      &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &frac, &consumed);
  if (n != 7 || consumed != static_cast<int>(s.size())) {
    throw Error("bad-timestamp", "cannot parse ISO-8601 timestamp: " + s);
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  std::time_t secs = timegm(&tm);
  return TimePoint(std::chrono::seconds(secs) + std::chrono::microseconds(frac));
}

}  // namespace veridge
