/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/registrar.hpp"

namespace veridge::registrar {

void to_json(nlohmann::json& j, const DeviceRecord& record) {
  j = nlohmann::json{{"device_id", record.device_id},
                     {"ek_cert", record.ek_cert},
                     {"ak_public", to_hex(record.ak_public)},
                     {"ak_binding", to_hex(record.ak_binding)},
                     {"agent_address", record.agent_address},
                     {"registered_at", to_iso8601(record.registered_at)}};
}

void from_json(const nlohmann::json& j, DeviceRecord& record) {
  record.device_id = j.at("device_id").get<std::string>();
  record.ek_cert = j.at("ek_cert").get<crypto::Certificate>();
  record.ak_public = array_from_hex<32>(j.at("ak_public").get<std::string>());
  record.ak_binding = array_from_hex<64>(j.at("ak_binding").get<std::string>());
  record.agent_address = j.at("agent_address").get<std::string>();
  record.registered_at = parse_iso8601(j.at("registered_at").get<std::string>());
}

RegistrarService::RegistrarService(cluster::ClusterApi& cluster,
                                   const crypto::PublicKey& manufacturer_ca,
                                   RegistrarConfig config)
    : cluster_(cluster), manufacturer_ca_(manufacturer_ca), config_(config) {
  route("begin-registration", [this](const nlohmann::json& req) {
    Digest32 nonce = begin_registration(
        req.at("device_id").get<std::string>(), req.at("ek_cert").get<crypto::Certificate>(),
        array_from_hex<32>(req.at("ak_public").get<std::string>()),
        array_from_hex<64>(req.at("ak_binding").get<std::string>()),
        req.at("agent_address").get<std::string>());
    return nlohmann::json{{"nonce", to_hex(nonce)}};
  });
  route("complete-registration", [this](const nlohmann::json& req) {
    DeviceRecord record = complete_registration(req.at("device_id").get<std::string>(),
                                                req.at("proof").get<tpm::PossessionProof>());
    return nlohmann::json{{"device_id", record.device_id},
                          {"registered_at", to_iso8601(record.registered_at)}};
  });
  route("lookup-device", [this](const nlohmann::json& req) {
    DeviceRecord record = lookup_device(req.at("device_id").get<std::string>());
    return nlohmann::json{{"record", record}};
  });
}

RegistrarService::~RegistrarService() { stop(); }

void RegistrarService::start() {
  std::lock_guard lock(mu_);
  if (started_) {
    return;
  }
  started_ = true;
  watch_ = cluster_.watch_edge_nodes();
  watch_thread_ = std::thread([this] { watch_loop(); });
}

void RegistrarService::stop() {
  {
    std::lock_guard lock(mu_);
    if (!started_) {
      return;
    }
    started_ = false;
  }
  watch_->close();
  if (watch_thread_.joinable()) {
    watch_thread_.join();
  }
}

void RegistrarService::watch_loop() {
  while (auto event = watch_->next()) {
    if (event->change != cluster::WatchEvent::Change::Applied) {
      continue;
    }
    bool pending;
    {
      std::lock_guard lock(mu_);
      pending = pending_patch_.erase(event->resource.name) > 0;
    }
    if (pending) {
      try_patch_registered(event->resource.name);
    }
  }
}

void RegistrarService::try_patch_registered(const std::string& device_id) {
  try {
    cluster::EdgeNodeResource resource = cluster_.get_edge_node(device_id);
    if (resource.status.phase == cluster::Phase::Unregistered) {
      cluster_.patch_status(device_id,
                            cluster::NodeStatus{cluster::Phase::Registered, "identity verified"});
    }
  } catch (const Error&) {
    // Resource disappeared between the watch event and the patch; the next
    // apply re-queues it.
    std::lock_guard lock(mu_);
    pending_patch_.insert(device_id);
  }
}

Digest32 RegistrarService::begin_registration(const std::string& device_id,
                                              const crypto::Certificate& ek_cert,
                                              const crypto::PublicKey& ak_public,
                                              const crypto::Signature& ak_binding,
                                              const std::string& agent_address) {
  if (device_id.empty()) {
    throw Error("bad-request", "device_id must be nonempty");
  }
  if (!ek_cert.verify(manufacturer_ca_)) {
    throw Error("bad-cert", "EK certificate does not verify under the manufacturer CA");
  }
  if (!tpm::verify_ak_binding(ak_public, ak_binding, ek_cert.public_key)) {
    throw Error("bad-binding", "AK binding signature does not verify under the EK");
  }
  Challenge challenge;
  challenge.nonce = crypto::random_digest();
  challenge.issued = std::chrono::steady_clock::now();
  challenge.candidate =
      DeviceRecord{device_id, ek_cert, ak_public, ak_binding, agent_address, TimePoint{}};
  std::lock_guard lock(mu_);
  outstanding_[device_id] = std::move(challenge);  // a new begin invalidates the previous nonce
  return outstanding_[device_id].nonce;
}

DeviceRecord RegistrarService::complete_registration(const std::string& device_id,
                                                     const tpm::PossessionProof& proof) {
  DeviceRecord record;
  bool node_exists;
  {
    std::lock_guard lock(mu_);
    auto it = outstanding_.find(device_id);
    if (it == outstanding_.end()) {
      throw Error("no-challenge", "no outstanding challenge for '" + device_id + "'");
    }
    if (std::chrono::steady_clock::now() - it->second.issued > config_.challenge_ttl) {
      outstanding_.erase(it);
      throw Error("challenge-expired", "challenge for '" + device_id + "' expired");
    }
    if (!tpm::verify_possession(proof, it->second.candidate.ek_cert, it->second.nonce)) {
      throw Error("bad-proof", "possession proof for '" + device_id + "' does not verify");
    }
    record = it->second.candidate;
    record.registered_at = std::chrono::system_clock::now();
    outstanding_.erase(it);  // single-use
    records_[device_id] = record;
    node_exists = cluster_.has_edge_node(device_id);
    if (!node_exists) {
      pending_patch_.insert(device_id);
    }
  }
  if (node_exists) {
    try_patch_registered(device_id);
  } else if (cluster_.has_edge_node(device_id)) {
    // The resource was applied between the check and the pending insert; the
    // watch thread may already have passed the Applied event.
    bool still_pending;
    {
      std::lock_guard lock(mu_);
      still_pending = pending_patch_.erase(device_id) > 0;
    }
    if (still_pending) {
      try_patch_registered(device_id);
    }
  }
  return record;
}

DeviceRecord RegistrarService::lookup_device(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(device_id);
  if (it == records_.end()) {
    throw Error("unknown-device", "no device record for '" + device_id + "'");
  }
  return it->second;
}

Digest32 RegistrarClient::begin_registration(const std::string& device_id,
                                             const crypto::Certificate& ek_cert,
                                             const crypto::PublicKey& ak_public,
                                             const crypto::Signature& ak_binding,
                                             const std::string& agent_address) {
  nlohmann::json response = endpoint_->call("begin-registration",
                                            {{"v", rpc::kSchemaVersion},
                                             {"device_id", device_id},
                                             {"ek_cert", ek_cert},
                                             {"ak_public", to_hex(ak_public)},
                                             {"ak_binding", to_hex(ak_binding)},
                                             {"agent_address", agent_address}});
  return array_from_hex<32>(response.at("nonce").get<std::string>());
}

void RegistrarClient::complete_registration(const std::string& device_id,
                                            const tpm::PossessionProof& proof) {
  endpoint_->call("complete-registration",
                  {{"v", rpc::kSchemaVersion}, {"device_id", device_id}, {"proof", proof}});
}

DeviceRecord RegistrarClient::lookup_device(const std::string& device_id) {
  nlohmann::json response =
      endpoint_->call("lookup-device", {{"v", rpc::kSchemaVersion}, {"device_id", device_id}});
  return response.at("record").get<DeviceRecord>();
}

}  // namespace veridge::registrar
