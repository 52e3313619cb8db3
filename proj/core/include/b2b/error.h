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

#ifndef B2B_ERROR_H_
#define B2B_ERROR_H_

#include <stdexcept>
#include <string>

namespace b2b {

// Broad failure class. Maps onto the CLI exit codes.
enum class ErrorKind {
  kUsage,    // bad arguments or violated preconditions
  kData,     // unreadable or malformed input data
  kNumeric,  // NaN/Inf or divergence
};

// All library failures are reported by throwing Error. `code` is a short
// machine-readable token such as "wav.missing_file".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message);

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] void ThrowUsage(const std::string& code, const std::string& msg);
[[noreturn]] void ThrowData(const std::string& code, const std::string& msg);
[[noreturn]] void ThrowNumeric(const std::string& code,
                               const std::string& msg);

}  // namespace b2b

#endif  // B2B_ERROR_H_
