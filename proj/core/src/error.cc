// Copyright 2026 The b2b-plc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "b2b/error.h"

#include <utility>

namespace b2b {

Error::Error(ErrorKind kind, std::string code, const std::string& message)
    : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

void ThrowUsage(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::kUsage, code, msg);
}

void ThrowData(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::kData, code, msg);
}

void ThrowNumeric(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::kNumeric, code, msg);
}

}  // namespace b2b
