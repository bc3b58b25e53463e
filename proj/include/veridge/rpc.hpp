/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "veridge/errors.hpp"

namespace veridge::rpc {

inline constexpr int kSchemaVersion = 1;

/// Callable surface of one service: versioned JSON request in, JSON response
/// out. Failures are Error exceptions whose code travels over the wire.
class ServiceEndpoint {
 public:
  virtual ~ServiceEndpoint() = default;
  virtual nlohmann::json call(const std::string& method, const nlohmann::json& request) = 0;
};

/// Method-table base for services. Requests must carry {"v": 1}; responses
/// get it injected.
class JsonService : public ServiceEndpoint {
 public:
  nlohmann::json call(const std::string& method, const nlohmann::json& request) final;

 protected:
  using Handler = std::function<nlohmann::json(const nlohmann::json&)>;
  void route(std::string method, Handler handler);

 private:
  std::map<std::string, Handler> handlers_;
};

/// Resolves an agent/service address string to a callable endpoint.
class EndpointDirectory {
 public:
  virtual ~EndpointDirectory() = default;
  virtual std::shared_ptr<ServiceEndpoint> resolve(const std::string& address) = 0;
};

/// In-process registry; addresses look like "local:<name>".
class LocalDirectory : public EndpointDirectory {
 public:
  std::string add(const std::string& name, std::shared_ptr<ServiceEndpoint> endpoint);
  std::shared_ptr<ServiceEndpoint> resolve(const std::string& address) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<ServiceEndpoint>> endpoints_;
};

/// Makes plain-HTTP clients for "host:port" addresses.
class HttpDirectory : public EndpointDirectory {
 public:
  std::shared_ptr<ServiceEndpoint> resolve(const std::string& address) override;
};

/// Client side of the loopback HTTP transport: POST /v1/<method>.
class HttpEndpoint : public ServiceEndpoint {
 public:
  explicit HttpEndpoint(const std::string& address);
  ~HttpEndpoint() override;
  nlohmann::json call(const std::string& method, const nlohmann::json& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Hosts a ServiceEndpoint on an ephemeral loopback port.
class HttpServiceHost {
 public:
  explicit HttpServiceHost(ServiceEndpoint& service);
  ~HttpServiceHost();
  HttpServiceHost(const HttpServiceHost&) = delete;
  HttpServiceHost& operator=(const HttpServiceHost&) = delete;

  const std::string& address() const noexcept { return address_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string address_;
};

/// Fire-a-JSON-document-at-a-URL with retries; used for webhooks.
/// Returns true once a 2xx response is received.
bool post_json(const std::string& url, const nlohmann::json& body, unsigned attempts);

}  // namespace veridge::rpc
