/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/agent.hpp"

#include "veridge/zip.hpp"

namespace veridge::agent {

EdgeAgent::EdgeAgent(tpm::EndorsementIdentity identity, cluster::ClusterApi& cluster,
                     std::shared_ptr<rpc::ServiceEndpoint> registrar, AgentConfig config)
    : identity_(std::move(identity)),
      ak_(tpm::make_attestation_key(identity_.ek)),
      cluster_(cluster),
      registrar_(std::move(registrar)),
      config_(config) {
  route("identity-challenge", [this](const nlohmann::json& req) {
    auto [proof, session] =
        identity_challenge(array_from_hex<32>(req.at("nonce").get<std::string>()));
    return nlohmann::json{{"proof", proof}, {"session", session}};
  });
  route("quote", [this](const nlohmann::json& req) {
    auto selection = req.at("pcr_selection").get<std::vector<unsigned>>();
    auto [quote, log] =
        handle_quote_request(array_from_hex<32>(req.at("nonce").get<std::string>()), selection);
    return nlohmann::json{{"quote", quote}, {"event_log", log}};
  });
  route("deliver-payload", [this](const nlohmann::json& req) {
    receive_payload(crypto::base64_decode(req.at("ciphertext").get<std::string>()),
                    array_from_hex<32>(req.at("share").get<std::string>()),
                    req.at("session").get<std::string>());
    return nlohmann::json{{"held", true}};
  });
  route("deliver-share", [this](const nlohmann::json& req) {
    receive_key_share(array_from_hex<32>(req.at("share").get<std::string>()));
    return nlohmann::json{{"decrypted", true}};
  });
}

EdgeAgent::~EdgeAgent() { shutdown(); }

void EdgeAgent::boot(std::span<const boot::BootComponent> components) {
  boot::BootResult result = boot::simulate_boot(components);
  std::lock_guard lock(mu_);
  bank_ = std::move(result.bank);
  log_ = std::move(result.log);
  booted_ = true;
}

void EdgeAgent::reboot(std::span<const boot::BootComponent> components) {
  boot::BootResult result = boot::simulate_boot(components);
  std::lock_guard lock(mu_);
  bank_ = std::move(result.bank);
  log_ = std::move(result.log);
  booted_ = true;
}

void EdgeAgent::register_with_registrar(const std::string& own_address) {
  {
    std::lock_guard lock(mu_);
    if (!booted_) {
      throw Error("not-booted", "agent must boot before registering");
    }
  }
  registrar::RegistrarClient client(registrar_);
  std::string last_error;
  for (unsigned attempt = 0; attempt < config_.register_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.register_backoff);
    }
    try {
      Digest32 nonce = client.begin_registration(identity_.device_id, identity_.ek_cert,
                                                 ak_.key.pub, ak_.binding_sig, own_address);
      client.complete_registration(identity_.device_id, tpm::prove_possession(identity_, nonce));
      std::lock_guard lock(mu_);
      registered_ = true;
      return;
    } catch (const Error& e) {
      last_error = std::string(e.code()) + ": " + e.what();
    }
  }
  throw Error("registration-failed", "registration gave up after " +
                                         std::to_string(config_.register_attempts) +
                                         " attempts; last error: " + last_error);
}

void EdgeAgent::boot_and_register(std::span<const boot::BootComponent> components,
                                  const std::string& own_address) {
  boot(components);
  register_with_registrar(own_address);
}

void EdgeAgent::prune_sessions_locked() {
  auto now = std::chrono::steady_clock::now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second > config_.session_ttl) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

std::pair<tpm::PossessionProof, std::string> EdgeAgent::identity_challenge(const Digest32& nonce) {
  tpm::PossessionProof proof = tpm::prove_possession(identity_, nonce);
  std::array<std::uint8_t, 16> token{};
  crypto::random_fill(token);
  std::string session = to_hex(token);
  std::lock_guard lock(mu_);
  prune_sessions_locked();
  sessions_[session] = std::chrono::steady_clock::now();
  return {proof, session};
}

std::pair<tpm::Quote, boot::BootEventLog> EdgeAgent::handle_quote_request(
    const Digest32& nonce, std::span<const unsigned> selection) {
  std::lock_guard lock(mu_);
  if (!booted_) {
    throw Error("not-booted", "quote requested before boot completed");
  }
  tpm::Quote quote = tpm::make_quote(bank_, ak_, nonce, selection);
  return {std::move(quote), log_};
}

void EdgeAgent::receive_payload(Bytes ciphertext, const crypto::SymmetricKey& share1,
                                const std::string& session) {
  std::lock_guard lock(mu_);
  if (!registered_) {
    throw Error("not-registered", "payload delivery before registration");
  }
  prune_sessions_locked();
  if (sessions_.erase(session) == 0) {
    throw Error("bad-session", "payload delivery without a completed identity sub-challenge");
  }
  // Re-delivery overwrites the previous payload atomically.
  ciphertext_ = std::move(ciphertext);
  share1_ = share1;
}

void EdgeAgent::receive_key_share(const crypto::SymmetricKey& share2) {
  Bytes plaintext;
  {
    std::lock_guard lock(mu_);
    if (!ciphertext_ || !share1_) {
      throw Error("missing-ciphertext", "no held payload; deliver ciphertext and share first");
    }
    if (execution_started_) {
      return;  // same share re-delivered; never enroll a second worker
    }
    crypto::SymmetricKey key = crypto::xor_keys(*share1_, share2);
    auto opened = crypto::aead_open(key, *ciphertext_);
    if (!opened) {
      throw Error("decrypt-failed", "authenticated decryption failed; wrong key share");
    }
    plaintext = std::move(*opened);
    execution_started_ = true;
  }
  executor_ = std::thread([this, payload = std::move(plaintext)]() mutable {
    execute_payload(std::move(payload));
  });
}

void EdgeAgent::execute_payload(Bytes plaintext) {
  if (config_.worker_startup_delay.count() > 0) {
    std::this_thread::sleep_for(config_.worker_startup_delay);
  }
  try {
    std::vector<zip::Entry> entries = zip::unpack(plaintext);
    const zip::Entry* credentials = nullptr;
    const zip::Entry* enroll_cfg = nullptr;
    for (const zip::Entry& entry : entries) {
      if (entry.name == "credentials.json") credentials = &entry;
      if (entry.name == "enroll.cfg") enroll_cfg = &entry;
    }
    if (!credentials || !enroll_cfg) {
      throw Error("bad-payload", "payload ZIP missing credentials.json or enroll.cfg");
    }
    nlohmann::json creds = nlohmann::json::parse(
        std::string(credentials->data.begin(), credentials->data.end()));
    crypto::Certificate cert = creds.at("cert").get<crypto::Certificate>();

    std::string cfg(enroll_cfg->data.begin(), enroll_cfg->data.end());
    const std::string key = "node_name=";
    auto pos = cfg.find(key);
    if (pos == std::string::npos) {
      throw Error("bad-payload", "enroll.cfg missing node_name");
    }
    auto end = cfg.find('\n', pos);
    std::string node_name = cfg.substr(pos + key.size(), end - pos - key.size());

    cluster_.register_worker(cert, node_name);
    std::lock_guard lock(mu_);
    executed_at_ = std::chrono::system_clock::now();
    executed_.store(true);
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    execution_error_ = e.what();
  }
}

void EdgeAgent::shutdown() {
  if (executor_.joinable()) {
    executor_.join();
  }
}

bool EdgeAgent::booted() const {
  std::lock_guard lock(mu_);
  return booted_;
}

bool EdgeAgent::registered() const {
  std::lock_guard lock(mu_);
  return registered_;
}

bool EdgeAgent::holds_ciphertext() const {
  std::lock_guard lock(mu_);
  return ciphertext_.has_value();
}

bool EdgeAgent::holds_share() const {
  std::lock_guard lock(mu_);
  return share1_.has_value();
}

bool EdgeAgent::executed() const { return executed_.load(); }

std::optional<TimePoint> EdgeAgent::executed_at() const {
  std::lock_guard lock(mu_);
  return executed_at_;
}

std::optional<std::string> EdgeAgent::execution_error() const {
  std::lock_guard lock(mu_);
  return execution_error_;
}

std::pair<tpm::PossessionProof, std::string> AgentClient::identity_challenge(
    const Digest32& nonce) {
  nlohmann::json response =
      endpoint_->call("identity-challenge", {{"v", rpc::kSchemaVersion}, {"nonce", to_hex(nonce)}});
  return {response.at("proof").get<tpm::PossessionProof>(),
          response.at("session").get<std::string>()};
}

std::pair<tpm::Quote, boot::BootEventLog> AgentClient::quote(
    const Digest32& nonce, const std::vector<unsigned>& selection) {
  nlohmann::json response = endpoint_->call(
      "quote",
      {{"v", rpc::kSchemaVersion}, {"nonce", to_hex(nonce)}, {"pcr_selection", selection}});
  return {response.at("quote").get<tpm::Quote>(),
          response.at("event_log").get<boot::BootEventLog>()};
}

void AgentClient::deliver_payload(const Bytes& ciphertext, const crypto::SymmetricKey& share1,
                                  const std::string& session) {
  endpoint_->call("deliver-payload", {{"v", rpc::kSchemaVersion},
                                      {"ciphertext", crypto::base64_encode(ciphertext)},
                                      {"share", to_hex(share1)},
                                      {"session", session}});
}

void AgentClient::deliver_share(const crypto::SymmetricKey& share2) {
  endpoint_->call("deliver-share", {{"v", rpc::kSchemaVersion}, {"share", to_hex(share2)}});
}

}  // namespace veridge::agent
