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
#include "das/error.hpp"

#include <fmt/format.h>

namespace das {

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : Error(line > 0 ? fmt::format("{}:{}: {}", path, line, what)
                     : fmt::format("{}: {}", path, what)),
      line_(line) {}

}  // namespace das
