/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/zip.hpp"

#include <zlib.h>

#include <cstring>

#include "veridge/errors.hpp"

namespace veridge::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kVersion = 20;

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint16_t get_u16(std::span<const std::uint8_t> data, std::size_t off) {
  if (off + 2 > data.size()) {
    throw Error("bad-zip", "truncated archive");
  }
  return static_cast<std::uint16_t>(data[off] | data[off + 1] << 8);
}

std::uint32_t get_u32(std::span<const std::uint8_t> data, std::size_t off) {
  if (off + 4 > data.size()) {
    throw Error("bad-zip", "truncated archive");
  }
  return static_cast<std::uint32_t>(data[off]) | static_cast<std::uint32_t>(data[off + 1]) << 8 |
         static_cast<std::uint32_t>(data[off + 2]) << 16 |
         static_cast<std::uint32_t>(data[off + 3]) << 24;
}

std::uint32_t crc_of(const Bytes& data) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace

Bytes pack(std::span<const Entry> entries) {
  Bytes out;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> crcs;

  for (const Entry& entry : entries) {
    if (entry.name.empty() || entry.name.size() > 0xffff) {
      throw Error("bad-zip", "entry name empty or too long");
    }
    offsets.push_back(static_cast<std::uint32_t>(out.size()));
    std::uint32_t crc = crc_of(entry.data);
    crcs.push_back(crc);
    put_u32(out, kLocalSig);
    put_u16(out, kVersion);
    put_u16(out, 0);  // flags
    put_u16(out, 0);  // method: stored
    put_u16(out, 0);  // mod time (zeroed)
    put_u16(out, 0);  // mod date (zeroed)
    put_u32(out, crc);
    put_u32(out, static_cast<std::uint32_t>(entry.data.size()));
    put_u32(out, static_cast<std::uint32_t>(entry.data.size()));
    put_u16(out, static_cast<std::uint16_t>(entry.name.size()));
    put_u16(out, 0);  // extra length
    out.insert(out.end(), entry.name.begin(), entry.name.end());
    out.insert(out.end(), entry.data.begin(), entry.data.end());
  }

  const std::uint32_t central_offset = static_cast<std::uint32_t>(out.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& entry = entries[i];
    put_u32(out, kCentralSig);
    put_u16(out, kVersion);  // version made by
    put_u16(out, kVersion);  // version needed
    put_u16(out, 0);         // flags
    put_u16(out, 0);         // method
    put_u16(out, 0);         // mod time
    put_u16(out, 0);         // mod date
    put_u32(out, crcs[i]);
    put_u32(out, static_cast<std::uint32_t>(entry.data.size()));
    put_u32(out, static_cast<std::uint32_t>(entry.data.size()));
    put_u16(out, static_cast<std::uint16_t>(entry.name.size()));
    put_u16(out, 0);  // extra length
    put_u16(out, 0);  // comment length
    put_u16(out, 0);  // disk number
    put_u16(out, 0);  // internal attrs
    put_u32(out, 0);  // external attrs
    put_u32(out, offsets[i]);
    out.insert(out.end(), entry.name.begin(), entry.name.end());
  }
  const std::uint32_t central_size = static_cast<std::uint32_t>(out.size()) - central_offset;

  put_u32(out, kEndSig);
  put_u16(out, 0);  // disk number
  put_u16(out, 0);  // central dir start disk
  put_u16(out, static_cast<std::uint16_t>(entries.size()));
  put_u16(out, static_cast<std::uint16_t>(entries.size()));
  put_u32(out, central_size);
  put_u32(out, central_offset);
  put_u16(out, 0);  // comment length
  return out;
}

std::vector<Entry> unpack(std::span<const std::uint8_t> archive) {
  if (archive.size() < 22) {
    throw Error("bad-zip", "archive smaller than end record");
  }
  // End-of-central-directory: scan backwards past a possible comment.
  std::size_t end_off = archive.size();
  bool found = false;
  for (std::size_t i = archive.size() - 22 + 1; i-- > 0;) {
    if (get_u32(archive, i) == kEndSig) {
      end_off = i;
      found = true;
      break;
    }
  }
  if (!found) {
    throw Error("bad-zip", "end-of-central-directory record not found");
  }
  const std::uint16_t count = get_u16(archive, end_off + 10);
  std::size_t pos = get_u32(archive, end_off + 16);

  std::vector<Entry> entries;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (get_u32(archive, pos) != kCentralSig) {
      throw Error("bad-zip", "bad central directory signature");
    }
    const std::uint16_t method = get_u16(archive, pos + 10);
    const std::uint32_t crc = get_u32(archive, pos + 16);
    const std::uint32_t csize = get_u32(archive, pos + 20);
    const std::uint32_t usize = get_u32(archive, pos + 24);
    const std::uint16_t name_len = get_u16(archive, pos + 28);
    const std::uint16_t extra_len = get_u16(archive, pos + 30);
    const std::uint16_t comment_len = get_u16(archive, pos + 32);
    const std::uint32_t local_off = get_u32(archive, pos + 42);
    if (method != 0 || csize != usize) {
      throw Error("bad-zip", "unsupported compression method");
    }
    if (pos + 46 + name_len > archive.size()) {
      throw Error("bad-zip", "truncated central directory entry");
    }
    std::string name(reinterpret_cast<const char*>(archive.data() + pos + 46), name_len);
    pos += 46 + name_len + extra_len + comment_len;

    if (get_u32(archive, local_off) != kLocalSig) {
      throw Error("bad-zip", "bad local header signature for '" + name + "'");
    }
    const std::uint16_t lname_len = get_u16(archive, local_off + 26);
    const std::uint16_t lextra_len = get_u16(archive, local_off + 28);
    const std::size_t data_off = local_off + 30 + lname_len + lextra_len;
    if (data_off + usize > archive.size()) {
      throw Error("bad-zip", "truncated entry data for '" + name + "'");
    }
    Entry entry;
    entry.name = std::move(name);
    entry.data.assign(archive.begin() + static_cast<std::ptrdiff_t>(data_off),
                      archive.begin() + static_cast<std::ptrdiff_t>(data_off + usize));
    if (crc_of(entry.data) != crc) {
      throw Error("bad-zip", "CRC mismatch for '" + entry.name + "'");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace veridge::zip
