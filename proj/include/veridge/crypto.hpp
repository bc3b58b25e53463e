/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "veridge/bytes.hpp"

namespace veridge::crypto {

inline constexpr std::string_view kHashAlgId = "sha-256";

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;
using Signature = std::array<std::uint8_t, 64>;
using SymmetricKey = std::array<std::uint8_t, 32>;

/// Idempotent, thread-safe; every other function in this header calls it.
void init();

Digest32 sha256(std::span<const std::uint8_t> data);

void random_fill(std::span<std::uint8_t> out);
Digest32 random_digest();
SymmetricKey random_key();

struct SigningKeypair {
  PublicKey pub{};
  SecretKey sec{};

  static SigningKeypair generate();
};

Signature sign(const SecretKey& key, std::span<const std::uint8_t> message);
bool verify(const Signature& sig, const PublicKey& key, std::span<const std::uint8_t> message);

/// Minimal certificate: issuer's signature over (subject, issuer, subject key).
/// Not X.509; the canonical JSON encoding is the byte-comparison unit the
/// enrollment workflow relies on.
struct Certificate {
  std::string subject;
  std::string issuer;
  PublicKey public_key{};
  Signature signature{};

  Bytes signed_message() const;
  bool verify(const PublicKey& issuer_key) const;
  /// Canonical JSON encoding (sorted keys, lowercase hex); byte-stable.
  std::string encoded() const;

  bool operator==(const Certificate&) const = default;
};

void to_json(nlohmann::json& j, const Certificate& cert);
void from_json(const nlohmann::json& j, Certificate& cert);

class CertificateAuthority {
 public:
  explicit CertificateAuthority(std::string name);

  Certificate issue(const std::string& subject, const PublicKey& subject_key) const;
  const PublicKey& public_key() const noexcept { return key_.pub; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
  SigningKeypair key_;
};

/// Authenticated encryption; blob layout is nonce || ciphertext+tag.
Bytes aead_seal(const SymmetricKey& key, std::span<const std::uint8_t> plaintext);
/// nullopt on authentication failure or malformed blob.
std::optional<Bytes> aead_open(const SymmetricKey& key, std::span<const std::uint8_t> blob);

SymmetricKey xor_keys(const SymmetricKey& a, const SymmetricKey& b);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

}  // namespace veridge::crypto
