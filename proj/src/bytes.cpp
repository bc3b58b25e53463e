/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/bytes.hpp"

namespace veridge {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error("bad-hex", "hex string has odd length " + std::to_string(hex.size()));
  }
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error("bad-hex", "invalid hex digit at offset " + std::to_string(i));
    }
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

MessageBuffer::MessageBuffer(std::string_view tag) {
  buf_.assign(tag.begin(), tag.end());
}

MessageBuffer& MessageBuffer::append(std::span<const std::uint8_t> data) {
  append_u32(static_cast<std::uint32_t>(data.size()));
  buf_.insert(buf_.end(), data.begin(), data.end());
  return *this;
}

MessageBuffer& MessageBuffer::append(std::string_view text) {
  return append(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

MessageBuffer& MessageBuffer::append_u32(std::uint32_t value) {
  buf_.push_back(static_cast<std::uint8_t>(value));
  buf_.push_back(static_cast<std::uint8_t>(value >> 8));
  buf_.push_back(static_cast<std::uint8_t>(value >> 16));
  buf_.push_back(static_cast<std::uint8_t>(value >> 24));
  return *this;
}

}  // namespace veridge
