/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include <nlohmann/json.hpp>

#include "veridge/errors.hpp"

namespace veridge::crypto {

void init() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) {
      throw Error("crypto-init", "libsodium initialization failed");
    }
  });
}

Digest32 sha256(std::span<const std::uint8_t> data) {
  init();
  static_assert(crypto_hash_sha256_BYTES == 32);
  Digest32 out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

void random_fill(std::span<std::uint8_t> out) {
  init();
  randombytes_buf(out.data(), out.size());
}

Digest32 random_digest() {
  Digest32 out{};
  random_fill(out);
  return out;
}

SymmetricKey random_key() {
  SymmetricKey out{};
  random_fill(out);
  return out;
}

SigningKeypair SigningKeypair::generate() {
  init();
  static_assert(crypto_sign_PUBLICKEYBYTES == 32 && crypto_sign_SECRETKEYBYTES == 64);
  SigningKeypair kp;
  crypto_sign_keypair(kp.pub.data(), kp.sec.data());
  return kp;
}

Signature sign(const SecretKey& key, std::span<const std::uint8_t> message) {
  init();
  static_assert(crypto_sign_BYTES == 64);
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
  return sig;
}

bool verify(const Signature& sig, const PublicKey& key, std::span<const std::uint8_t> message) {
  init();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

Bytes Certificate::signed_message() const {
  MessageBuffer msg("veridge.cert.v1");
  msg.append(subject);
  msg.append(issuer);
  msg.append(std::span<const std::uint8_t>(public_key.data(), public_key.size()));
  return msg.bytes();
}

bool Certificate::verify(const PublicKey& issuer_key) const {
  return crypto::verify(signature, issuer_key, signed_message());
}

std::string Certificate::encoded() const {
  nlohmann::json j = *this;
  return j.dump();
}

void to_json(nlohmann::json& j, const Certificate& cert) {
  j = nlohmann::json{{"v", 1},
                     {"subject", cert.subject},
                     {"issuer", cert.issuer},
                     {"public_key", to_hex(cert.public_key)},
                     {"signature", to_hex(cert.signature)}};
}

void from_json(const nlohmann::json& j, Certificate& cert) {
  cert.subject = j.at("subject").get<std::string>();
  cert.issuer = j.at("issuer").get<std::string>();
  cert.public_key = array_from_hex<32>(j.at("public_key").get<std::string>());
  cert.signature = array_from_hex<64>(j.at("signature").get<std::string>());
}

CertificateAuthority::CertificateAuthority(std::string name)
    : name_(std::move(name)), key_(SigningKeypair::generate()) {}

Certificate CertificateAuthority::issue(const std::string& subject,
                                        const PublicKey& subject_key) const {
  Certificate cert;
  cert.subject = subject;
  cert.issuer = name_;
  cert.public_key = subject_key;
  cert.signature = sign(key_.sec, cert.signed_message());
  return cert;
}

Bytes aead_seal(const SymmetricKey& key, std::span<const std::uint8_t> plaintext) {
  init();
  static_assert(crypto_aead_xchacha20poly1305_ietf_KEYBYTES == 32);
  Bytes blob(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES + plaintext.size() +
             crypto_aead_xchacha20poly1305_ietf_ABYTES);
  randombytes_buf(blob.data(), crypto_aead_xchacha20poly1305_ietf_NPUBBYTES);
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(
      blob.data() + crypto_aead_xchacha20poly1305_ietf_NPUBBYTES, &clen, plaintext.data(),
      plaintext.size(), nullptr, 0, nullptr, blob.data(), key.data());
  blob.resize(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES + clen);
  return blob;
}

std::optional<Bytes> aead_open(const SymmetricKey& key, std::span<const std::uint8_t> blob) {
  init();
  const std::size_t overhead = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES +
                               crypto_aead_xchacha20poly1305_ietf_ABYTES;
  if (blob.size() < overhead) {
    return std::nullopt;
  }
  Bytes plain(blob.size() - overhead);
  unsigned long long plen = 0;
  int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
      plain.data(), &plen, nullptr, blob.data() + crypto_aead_xchacha20poly1305_ietf_NPUBBYTES,
      blob.size() - crypto_aead_xchacha20poly1305_ietf_NPUBBYTES, nullptr, 0, blob.data(),
      key.data());
  if (rc != 0) {
    return std::nullopt;
  }
  plain.resize(plen);
  return plain;
}

SymmetricKey xor_keys(const SymmetricKey& a, const SymmetricKey& b) {
  SymmetricKey out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a[i] ^ b[i];
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  init();
  std::string out(sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(out.find('\0') == std::string::npos ? out.size() : out.find('\0'));
  return out;
}

Bytes base64_decode(std::string_view text) {
  init();
  Bytes out(text.size());
  std::size_t written = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written,
                        nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error("bad-base64", "invalid base64 payload");
  }
  out.resize(written);
  return out;
}

}  // namespace veridge::crypto
