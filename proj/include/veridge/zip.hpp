/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include "veridge/bytes.hpp"

namespace veridge::zip {

struct Entry {
  std::string name;
  Bytes data;

  bool operator==(const Entry&) const = default;
};

/// Deterministic ZIP archive: stored (uncompressed) entries in the given
/// order, zeroed timestamps. Packing the same entries twice yields
/// byte-identical archives.
Bytes pack(std::span<const Entry> entries);

/// Entries in central-directory order. Throws on malformed input.
std::vector<Entry> unpack(std::span<const std::uint8_t> archive);

}  // namespace veridge::zip
