/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "veridge/crypto.hpp"

namespace veridge::tpm {

inline constexpr unsigned kPcrCount = 24;

/// One entry of a bank's mutation history; reset entries carry a zero digest.
struct PcrEvent {
  enum class Kind { Extend, Reset };
  Kind kind;
  unsigned index;
  Digest32 digest{};
};

/// 24 registers of 32 bytes each. Value type: copies are independent banks.
/// Registers change only through extend/reset, both recorded in history.
class PcrBank {
 public:
  PcrBank();

  /// new value = H(old value || digest)
  void extend(unsigned index, const Digest32& digest);
  void reset(unsigned index);

  const Digest32& value(unsigned index) const;
  const std::vector<PcrEvent>& history() const noexcept { return history_; }

  /// Fresh bank with the given history applied.
  static PcrBank replay(std::span<const PcrEvent> events);

  bool operator==(const PcrBank&) const = default;

 private:
  std::array<Digest32, kPcrCount> registers_{};
  std::vector<PcrEvent> history_;
};

/// Digest over the selected register values concatenated in selection order.
Digest32 composite_digest(const PcrBank& bank, std::span<const unsigned> selection);

struct EndorsementIdentity {
  std::string device_id;
  crypto::SigningKeypair ek;
  crypto::Certificate ek_cert;
};

/// Fresh EK keypair with a manufacturer-signed certificate over it.
EndorsementIdentity generate_endorsement(const std::string& device_id,
                                         const crypto::CertificateAuthority& manufacturer);

/// Quote-signing key, bound to the EK so the EK itself stays identity-only.
struct AttestationKey {
  crypto::SigningKeypair key;
  crypto::Signature binding_sig{};
};

AttestationKey make_attestation_key(const crypto::SigningKeypair& ek);
bool verify_ak_binding(const crypto::PublicKey& ak_pub, const crypto::Signature& binding_sig,
                       const crypto::PublicKey& ek_pub);

struct PossessionProof {
  Digest32 nonce{};
  crypto::Signature signature{};
};

PossessionProof prove_possession(const EndorsementIdentity& identity, const Digest32& nonce);
/// Valid iff the proof is bound to exactly `expected_nonce` and signed by the
/// key the certificate vouches for. Does NOT check the certificate chain.
bool verify_possession(const PossessionProof& proof, const crypto::Certificate& ek_cert,
                       const Digest32& expected_nonce);

void to_json(nlohmann::json& j, const PossessionProof& proof);
void from_json(const nlohmann::json& j, PossessionProof& proof);

struct Quote {
  std::string hash_alg{crypto::kHashAlgId};
  Digest32 nonce{};
  std::vector<unsigned> pcr_selection;
  Digest32 composite{};
  crypto::Signature signature{};

  Bytes signed_message() const;
};

void to_json(nlohmann::json& j, const Quote& q);
void from_json(const nlohmann::json& j, Quote& q);

Quote make_quote(const PcrBank& bank, const AttestationKey& ak, const Digest32& nonce,
                 std::span<const unsigned> selection);

/// Signature under AK, AK binding under EK, and nonce freshness. Composite
/// correctness against an event log is the reference check's job.
bool verify_quote(const Quote& quote, const crypto::PublicKey& ak_pub,
                  const crypto::Signature& ak_binding, const crypto::PublicKey& ek_pub,
                  const Digest32& expected_nonce);

}  // namespace veridge::tpm
