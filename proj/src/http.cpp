/**
 * Copyright 2026 The DAS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "das/http.hpp"

#include <charconv>

#include <fmt/format.h>

#ifdef DAS_HAVE_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "das/error.hpp"

namespace das {

Endpoint parse_endpoint(const std::string& url) {
  Endpoint ep;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError(fmt::format("endpoint '{}' lacks a scheme", url));
  }
  ep.scheme = url.substr(0, scheme_end);
  if (ep.scheme != "http" && ep.scheme != "https") {
    throw ValidationError(fmt::format("unsupported scheme '{}'", ep.scheme));
  }
  ep.port = ep.scheme == "https" ? 443 : 80;
  std::string rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  if (slash != std::string::npos) {
    ep.path = rest.substr(slash);
    rest = rest.substr(0, slash);
  }
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos) {
    const std::string port_text = rest.substr(colon + 1);
    int port = 0;
    const auto [ptr, ec] =
        std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port <= 0 ||
        port > 65535) {
      throw ValidationError(fmt::format("invalid port in endpoint '{}'", url));
    }
    ep.port = port;
    rest = rest.substr(0, colon);
  }
  if (rest.empty()) throw ValidationError(fmt::format("endpoint '{}' lacks a host", url));
  ep.host = rest;
  return ep;
}

HttpResult post_json(const Endpoint& endpoint, const std::string& body,
                     const std::map<std::string, std::string>& headers,
                     std::chrono::milliseconds timeout) {
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  const auto seconds = static_cast<time_t>(timeout.count() / 1000);
  const auto micros = static_cast<time_t>((timeout.count() % 1000) * 1000);

  auto run = [&](auto& client) {
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    HttpResult out;
    auto res = client.Post(endpoint.path, h, body, "application/json");
    if (!res) {
      out.transport_error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  };

  if (endpoint.scheme == "https") {
#ifdef DAS_HAVE_TLS
    httplib::SSLClient client(endpoint.host, endpoint.port);
    return run(client);
#else
    HttpResult out;
    out.transport_error = "built without TLS support";
    return out;
#endif
  }
  httplib::Client client(endpoint.host, endpoint.port);
  return run(client);
}

}  // namespace das
