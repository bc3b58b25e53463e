/*
 * Copyright (c) 2026 The Veridge Authors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "veridge/rpc.hpp"

namespace veridge::rpc {

nlohmann::json JsonService::call(const std::string& method, const nlohmann::json& request) {
  auto it = handlers_.find(method);
  if (it == handlers_.end()) {
    throw Error("unknown-method", "no such method: " + method);
  }
  if (!request.is_object() || !request.contains("v") || request.at("v") != kSchemaVersion) {
    throw Error("bad-version", "request must carry schema version v=" +
                                   std::to_string(kSchemaVersion));
  }
  nlohmann::json response = it->second(request);
  response["v"] = kSchemaVersion;
  return response;
}

void JsonService::route(std::string method, Handler handler) {
  handlers_[std::move(method)] = std::move(handler);
}

std::string LocalDirectory::add(const std::string& name,
                                std::shared_ptr<ServiceEndpoint> endpoint) {
  std::lock_guard lock(mu_);
  std::string address = "local:" + name;
  endpoints_[address] = std::move(endpoint);
  return address;
}

std::shared_ptr<ServiceEndpoint> LocalDirectory::resolve(const std::string& address) {
  std::lock_guard lock(mu_);
  auto it = endpoints_.find(address);
  if (it == endpoints_.end()) {
    throw Error("unreachable", "no in-process endpoint registered at '" + address + "'");
  }
  return it->second;
}

std::shared_ptr<ServiceEndpoint> HttpDirectory::resolve(const std::string& address) {
  return std::make_shared<HttpEndpoint>(address);
}

}  // namespace veridge::rpc
