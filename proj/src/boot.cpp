/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/boot.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "veridge/errors.hpp"

namespace veridge::boot {

std::string_view to_string(BootStage stage) {
  switch (stage) {
    case BootStage::Crtm: return "crtm";
    case BootStage::Firmware: return "firmware";
    case BootStage::Bootloader: return "bootloader";
    case BootStage::Kernel: return "kernel";
    case BootStage::Keys: return "keys";
  }
  throw Error("bad-stage", "unknown boot stage value");
}

BootStage stage_from_string(std::string_view name) {
  for (BootStage stage : kBootChain) {
    if (to_string(stage) == name) {
      return stage;
    }
  }
  throw Error("bad-stage", "unknown boot stage: " + std::string(name));
}

void to_json(nlohmann::json& j, const BootEventLog& log) {
  j = nlohmann::json::array();
  for (const BootEvent& e : log.entries) {
    j.push_back({{"stage", std::string(to_string(e.stage))},
                 {"name", e.name},
                 {"digest", to_hex(e.digest)},
                 {"pcr", e.pcr}});
  }
}

void from_json(const nlohmann::json& j, BootEventLog& log) {
  log.entries.clear();
  for (const auto& item : j) {
    BootEvent e;
    e.stage = stage_from_string(item.at("stage").get<std::string>());
    e.name = item.at("name").get<std::string>();
    e.digest = array_from_hex<32>(item.at("digest").get<std::string>());
    e.pcr = item.at("pcr").get<unsigned>();
    log.entries.push_back(std::move(e));
  }
}

BootResult simulate_boot(std::span<const BootComponent> components, tpm::PcrBank bank,
                         const PcrAllocation& allocation) {
  if (components.empty()) {
    throw Error("empty-boot-chain", "boot requires at least one component");
  }
  BootResult result;
  result.bank = std::move(bank);
  BootStage previous = BootStage::Crtm;
  bool first = true;
  for (const BootComponent& component : components) {
    if (!first && component.stage < previous) {
      throw Error("boot-order",
                  "stage " + std::string(to_string(component.stage)) + " after " +
                      std::string(to_string(previous)));
    }
    previous = component.stage;
    first = false;
    unsigned pcr = allocation.pcr(component.stage);
    result.bank.extend(pcr, component.content_digest);
    result.log.entries.push_back({component.stage, component.name, component.content_digest, pcr});
  }
  return result;
}

std::map<unsigned, Digest32> replay_event_log(const BootEventLog& log) {
  tpm::PcrBank bank;
  for (const BootEvent& e : log.entries) {
    bank.extend(e.pcr, e.digest);
  }
  std::map<unsigned, Digest32> registers;
  for (unsigned i = 0; i < tpm::kPcrCount; ++i) {
    registers[i] = bank.value(i);
  }
  return registers;
}

void ReferenceState::validate() const {
  for (BootStage stage : kBootChain) {
    auto it = allowed.find(stage);
    if (it == allowed.end() || it->second.empty()) {
      throw Error("bad-reference",
                  "reference state: stage '" + std::string(to_string(stage)) +
                      "' has no allowed digests");
    }
  }
  if (pcr_selection.empty()) {
    throw Error("bad-reference", "reference state: pcr_selection is empty");
  }
  for (unsigned index : pcr_selection) {
    if (index >= tpm::kPcrCount) {
      throw Error("bad-reference",
                  "reference state: pcr_selection index " + std::to_string(index) +
                      " out of range");
    }
  }
}

nlohmann::json reference_state_to_json(const ReferenceState& reference) {
  nlohmann::json allowed = nlohmann::json::object();
  for (const auto& [stage, digests] : reference.allowed) {
    nlohmann::json list = nlohmann::json::array();
    for (const Digest32& d : digests) {
      list.push_back(to_hex(d));
    }
    allowed[std::string(to_string(stage))] = std::move(list);
  }
  return nlohmann::json{{"allowed", std::move(allowed)},
                        {"pcr_selection", reference.pcr_selection}};
}

std::string serialize_reference_state(const ReferenceState& reference) {
  return reference_state_to_json(reference).dump();
}

ReferenceState reference_state_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw Error("bad-reference", "reference state: document is not an object");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "allowed" && key != "pcr_selection") {
      throw Error("bad-reference", "reference state: unknown field '" + key + "'");
    }
  }
  if (!j.contains("allowed")) {
    throw Error("bad-reference", "reference state: missing field 'allowed'");
  }
  if (!j.contains("pcr_selection")) {
    throw Error("bad-reference", "reference state: missing field 'pcr_selection'");
  }
  const nlohmann::json& allowed = j.at("allowed");
  if (!allowed.is_object()) {
    throw Error("bad-reference", "reference state: 'allowed' is not an object");
  }
  ReferenceState reference;
  for (const auto& [key, value] : allowed.items()) {
    BootStage stage;
    try {
      stage = stage_from_string(key);
    } catch (const Error&) {
      throw Error("bad-reference", "reference state: unknown stage 'allowed." + key + "'");
    }
    if (!value.is_array()) {
      throw Error("bad-reference", "reference state: 'allowed." + key + "' is not an array");
    }
    std::set<Digest32> digests;
    for (const auto& item : value) {
      if (!item.is_string()) {
        throw Error("bad-reference",
                    "reference state: 'allowed." + key + "' entry is not a string");
      }
      const std::string hex = item.get<std::string>();
      if (std::any_of(hex.begin(), hex.end(), [](char c) { return c >= 'A' && c <= 'F'; })) {
        throw Error("bad-reference",
                    "reference state: 'allowed." + key + "' digest must be lowercase hex");
      }
      try {
        digests.insert(array_from_hex<32>(hex));
      } catch (const Error& e) {
        throw Error("bad-reference",
                    "reference state: 'allowed." + key + "' digest invalid: " + e.what());
      }
    }
    reference.allowed[stage] = std::move(digests);
  }
  for (BootStage stage : kBootChain) {
    if (!reference.allowed.contains(stage)) {
      throw Error("bad-reference",
                  "reference state: missing stage 'allowed." +
                      std::string(to_string(stage)) + "'");
    }
  }
  const nlohmann::json& selection = j.at("pcr_selection");
  if (!selection.is_array()) {
    throw Error("bad-reference", "reference state: 'pcr_selection' is not an array");
  }
  for (const auto& item : selection) {
    if (!item.is_number_unsigned()) {
      throw Error("bad-reference",
                  "reference state: 'pcr_selection' entry is not an unsigned integer");
    }
    reference.pcr_selection.push_back(item.get<unsigned>());
  }
  reference.validate();
  return reference;
}

ReferenceState parse_reference_state(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) {
    throw Error("bad-reference", "reference state: malformed JSON");
  }
  return reference_state_from_json(j);
}

std::string_view to_string(VerdictReason reason) {
  switch (reason) {
    case VerdictReason::DigestNotAllowed: return "digest-not-allowed";
    case VerdictReason::PcrMismatch: return "pcr-mismatch";
    case VerdictReason::BadSignature: return "bad-signature";
    case VerdictReason::StaleNonce: return "stale-nonce";
    case VerdictReason::LogReplayMismatch: return "log-replay-mismatch";
    case VerdictReason::AgentUnreachable: return "agent-unreachable";
  }
  throw Error("bad-reason", "unknown verdict reason value");
}

VerdictReason verdict_reason_from_string(std::string_view name) {
  for (VerdictReason reason :
       {VerdictReason::DigestNotAllowed, VerdictReason::PcrMismatch, VerdictReason::BadSignature,
        VerdictReason::StaleNonce, VerdictReason::LogReplayMismatch,
        VerdictReason::AgentUnreachable}) {
    if (to_string(reason) == name) {
      return reason;
    }
  }
  throw Error("bad-reason", "unknown verdict reason: " + std::string(name));
}

std::string AttestationVerdict::describe() const {
  if (passed) {
    return "passed";
  }
  std::string out(reason ? to_string(*reason) : "failed");
  if (failing_stage) {
    out += ":";
    out += to_string(*failing_stage);
  }
  return out;
}

void to_json(nlohmann::json& j, const AttestationVerdict& verdict) {
  j = nlohmann::json{{"passed", verdict.passed}};
  if (verdict.failing_stage) {
    j["failing_stage"] = std::string(to_string(*verdict.failing_stage));
  }
  if (verdict.reason) {
    j["reason"] = std::string(to_string(*verdict.reason));
  }
}

void from_json(const nlohmann::json& j, AttestationVerdict& verdict) {
  verdict.passed = j.at("passed").get<bool>();
  verdict.failing_stage.reset();
  verdict.reason.reset();
  if (j.contains("failing_stage")) {
    verdict.failing_stage = stage_from_string(j.at("failing_stage").get<std::string>());
  }
  if (j.contains("reason")) {
    verdict.reason = verdict_reason_from_string(j.at("reason").get<std::string>());
  }
}

AttestationVerdict check_reference(const BootEventLog& log, const tpm::Quote& quote,
                                   const ReferenceState& reference,
                                   const crypto::PublicKey& ak_pub,
                                   const crypto::Signature& ak_binding,
                                   const crypto::PublicKey& ek_pub, const Digest32& nonce) {
  reference.validate();

  if (!tpm::verify_ak_binding(ak_pub, ak_binding, ek_pub) ||
      !crypto::verify(quote.signature, ak_pub, quote.signed_message())) {
    return AttestationVerdict::fail(VerdictReason::BadSignature);
  }

  if (quote.nonce != nonce) {
    return AttestationVerdict::fail(VerdictReason::StaleNonce);
  }

  if (quote.pcr_selection != reference.pcr_selection) {
    return AttestationVerdict::fail(VerdictReason::PcrMismatch);
  }
  tpm::PcrBank replayed;
  for (const BootEvent& e : log.entries) {
    if (e.pcr >= tpm::kPcrCount) {
      return AttestationVerdict::fail(VerdictReason::LogReplayMismatch, e.stage);
    }
    replayed.extend(e.pcr, e.digest);
  }
  if (tpm::composite_digest(replayed, reference.pcr_selection) != quote.composite) {
    return AttestationVerdict::fail(VerdictReason::LogReplayMismatch);
  }

  for (const BootEvent& e : log.entries) {
    auto it = reference.allowed.find(e.stage);
    if (it == reference.allowed.end() || !it->second.contains(e.digest)) {
      return AttestationVerdict::fail(VerdictReason::DigestNotAllowed, e.stage);
    }
  }

  return AttestationVerdict::pass();
}

}  // namespace veridge::boot
