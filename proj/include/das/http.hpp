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
#pragma once

#include <chrono>
#include <map>
#include <string>

namespace das {

struct Endpoint {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 80;
  std::string path = "/";
};

/// Parses `scheme://host[:port][/path]`. Throws ValidationError.
Endpoint parse_endpoint(const std::string& url);

struct HttpResult {
  int status = 0;  // 0 on transport failure
  std::string body;
  std::string transport_error;
};

/// POSTs a JSON body; never throws on transport or status errors.
HttpResult post_json(const Endpoint& endpoint, const std::string& body,
                     const std::map<std::string, std::string>& headers,
                     std::chrono::milliseconds timeout);

}  // namespace das
