/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/tpm.hpp"

#include <nlohmann/json.hpp>

#include "veridge/errors.hpp"

namespace veridge::tpm {

namespace {

void check_index(unsigned index) {
  if (index >= kPcrCount) {
    throw Error("pcr-out-of-range",
                "PCR index " + std::to_string(index) + " not in 0-" + std::to_string(kPcrCount - 1));
  }
}

}  // namespace

PcrBank::PcrBank() = default;

void PcrBank::extend(unsigned index, const Digest32& digest) {
  check_index(index);
  Bytes concat;
  concat.reserve(64);
  concat.insert(concat.end(), registers_[index].begin(), registers_[index].end());
  concat.insert(concat.end(), digest.begin(), digest.end());
  registers_[index] = crypto::sha256(concat);
  history_.push_back({PcrEvent::Kind::Extend, index, digest});
}

void PcrBank::reset(unsigned index) {
  check_index(index);
  registers_[index] = Digest32{};
  history_.push_back({PcrEvent::Kind::Reset, index, Digest32{}});
}

const Digest32& PcrBank::value(unsigned index) const {
  check_index(index);
  return registers_[index];
}

PcrBank PcrBank::replay(std::span<const PcrEvent> events) {
  PcrBank bank;
  for (const PcrEvent& e : events) {
    if (e.kind == PcrEvent::Kind::Extend) {
      bank.extend(e.index, e.digest);
    } else {
      bank.reset(e.index);
    }
  }
  return bank;
}

Digest32 composite_digest(const PcrBank& bank, std::span<const unsigned> selection) {
  if (selection.empty()) {
    throw Error("empty-selection", "PCR selection must be nonempty");
  }
  Bytes concat;
  concat.reserve(selection.size() * 32);
  for (unsigned index : selection) {
    const Digest32& v = bank.value(index);
    concat.insert(concat.end(), v.begin(), v.end());
  }
  return crypto::sha256(concat);
}

EndorsementIdentity generate_endorsement(const std::string& device_id,
                                         const crypto::CertificateAuthority& manufacturer) {
  if (device_id.empty()) {
    throw Error("bad-device-id", "device id must be nonempty");
  }
  EndorsementIdentity identity;
  identity.device_id = device_id;
  identity.ek = crypto::SigningKeypair::generate();
  identity.ek_cert = manufacturer.issue("ek:" + device_id, identity.ek.pub);
  return identity;
}

namespace {

Bytes ak_binding_message(const crypto::PublicKey& ak_pub) {
  MessageBuffer msg("veridge.ak-binding.v1");
  msg.append(std::span<const std::uint8_t>(ak_pub.data(), ak_pub.size()));
  return msg.bytes();
}

Bytes possession_message(const Digest32& nonce) {
  MessageBuffer msg("veridge.possession.v1");
  msg.append(std::span<const std::uint8_t>(nonce.data(), nonce.size()));
  return msg.bytes();
}

}  // namespace

AttestationKey make_attestation_key(const crypto::SigningKeypair& ek) {
  AttestationKey ak;
  ak.key = crypto::SigningKeypair::generate();
  ak.binding_sig = crypto::sign(ek.sec, ak_binding_message(ak.key.pub));
  return ak;
}

bool verify_ak_binding(const crypto::PublicKey& ak_pub, const crypto::Signature& binding_sig,
                       const crypto::PublicKey& ek_pub) {
  return crypto::verify(binding_sig, ek_pub, ak_binding_message(ak_pub));
}

PossessionProof prove_possession(const EndorsementIdentity& identity, const Digest32& nonce) {
  PossessionProof proof;
  proof.nonce = nonce;
  proof.signature = crypto::sign(identity.ek.sec, possession_message(nonce));
  return proof;
}

bool verify_possession(const PossessionProof& proof, const crypto::Certificate& ek_cert,
                       const Digest32& expected_nonce) {
  if (proof.nonce != expected_nonce) {
    return false;
  }
  return crypto::verify(proof.signature, ek_cert.public_key, possession_message(proof.nonce));
}

void to_json(nlohmann::json& j, const PossessionProof& proof) {
  j = nlohmann::json{
      {"v", 1}, {"nonce", to_hex(proof.nonce)}, {"signature", to_hex(proof.signature)}};
}

void from_json(const nlohmann::json& j, PossessionProof& proof) {
  proof.nonce = array_from_hex<32>(j.at("nonce").get<std::string>());
  proof.signature = array_from_hex<64>(j.at("signature").get<std::string>());
}

Bytes Quote::signed_message() const {
  MessageBuffer msg("veridge.quote.v1");
  msg.append(hash_alg);
  msg.append(std::span<const std::uint8_t>(nonce.data(), nonce.size()));
  msg.append_u32(static_cast<std::uint32_t>(pcr_selection.size()));
  for (unsigned index : pcr_selection) {
    msg.append_u32(index);
  }
  msg.append(std::span<const std::uint8_t>(composite.data(), composite.size()));
  return msg.bytes();
}

void to_json(nlohmann::json& j, const Quote& q) {
  j = nlohmann::json{{"v", 1},
                     {"hash_alg", q.hash_alg},
                     {"nonce", to_hex(q.nonce)},
                     {"pcr_selection", q.pcr_selection},
                     {"composite", to_hex(q.composite)},
                     {"signature", to_hex(q.signature)}};
}

void from_json(const nlohmann::json& j, Quote& q) {
  q.hash_alg = j.at("hash_alg").get<std::string>();
  q.nonce = array_from_hex<32>(j.at("nonce").get<std::string>());
  q.pcr_selection = j.at("pcr_selection").get<std::vector<unsigned>>();
  q.composite = array_from_hex<32>(j.at("composite").get<std::string>());
  q.signature = array_from_hex<64>(j.at("signature").get<std::string>());
}

Quote make_quote(const PcrBank& bank, const AttestationKey& ak, const Digest32& nonce,
                 std::span<const unsigned> selection) {
  Quote q;
  q.nonce = nonce;
  q.pcr_selection.assign(selection.begin(), selection.end());
  q.composite = composite_digest(bank, selection);
  q.signature = crypto::sign(ak.key.sec, q.signed_message());
  return q;
}

bool verify_quote(const Quote& quote, const crypto::PublicKey& ak_pub,
                  const crypto::Signature& ak_binding, const crypto::PublicKey& ek_pub,
                  const Digest32& expected_nonce) {
  if (!verify_ak_binding(ak_pub, ak_binding, ek_pub)) {
    return false;
  }
  if (!crypto::verify(quote.signature, ak_pub, quote.signed_message())) {
    return false;
  }
  return quote.nonce == expected_nonce;
}

}  // namespace veridge::tpm
