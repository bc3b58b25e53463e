/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "veridge/errors.hpp"

namespace veridge {

using Bytes = std::vector<std::uint8_t>;
using Digest32 = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex(std::string_view hex) {
  Bytes raw = from_hex(hex);
  if (raw.size() != N) {
    throw Error("bad-length", "expected " + std::to_string(N) + " bytes, got " +
                                  std::to_string(raw.size()));
  }
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

inline std::string to_hex(const Bytes& data) {
  return to_hex(std::span<const std::uint8_t>(data.data(), data.size()));
}

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& data) {
  return to_hex(std::span<const std::uint8_t>(data.data(), N));
}

/// Deterministic binary message builder for everything that gets signed.
/// Layout: raw tag bytes, then length-prefixed fields in append order.
class MessageBuffer {
 public:
  explicit MessageBuffer(std::string_view tag);

  MessageBuffer& append(std::span<const std::uint8_t> data);
  MessageBuffer& append(std::string_view text);
  MessageBuffer& append_u32(std::uint32_t value);

  const Bytes& bytes() const noexcept { return buf_; }

 private:
  Bytes buf_;
};

}  // namespace veridge
