// Copyright 2026 The dstealth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dstealth {

// Every failure the library reports carries a stable machine-readable code
// plus a human-oriented message. CLI consumers map codes to exit status and
// JSON; tests match on codes, never on message text.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(std::string_view code, const std::string& msg) {
  throw Error(std::string(code), msg);
}

namespace err {
// Parsing / structure.
inline constexpr std::string_view MalformedChunk = "MalformedChunk";
inline constexpr std::string_view BadStringPool = "BadStringPool";
inline constexpr std::string_view UnsupportedChunk = "UnsupportedChunk";
inline constexpr std::string_view ElementNotFound = "ElementNotFound";
inline constexpr std::string_view AttributeNotFound = "AttributeNotFound";
inline constexpr std::string_view NameTooLong = "NameTooLong";
inline constexpr std::string_view LabelIsResourceReference =
    "LabelIsResourceReference";
inline constexpr std::string_view LabelNotFound = "LabelNotFound";
inline constexpr std::string_view ResourceNotFound = "ResourceNotFound";
inline constexpr std::string_view UnknownDensity = "UnknownDensity";

// Archives.
inline constexpr std::string_view BadArchive = "BadArchive";
inline constexpr std::string_view CrcMismatch = "CrcMismatch";
inline constexpr std::string_view UnsupportedMethod = "UnsupportedMethod";
inline constexpr std::string_view EntryNotFound = "EntryNotFound";

// Signing.
inline constexpr std::string_view KeyMismatch = "KeyMismatch";
inline constexpr std::string_view NotSigned = "NotSigned";
inline constexpr std::string_view BadKey = "BadKey";

// Vault.
inline constexpr std::string_view BadPinFormat = "BadPinFormat";
inline constexpr std::string_view VaultExists = "VaultExists";
inline constexpr std::string_view PinRejected = "PinRejected";
inline constexpr std::string_view NoVault = "NoVault";
inline constexpr std::string_view AuthFailed = "AuthFailed";
inline constexpr std::string_view TruncatedStream = "TruncatedStream";
inline constexpr std::string_view TrailingData = "TrailingData";
inline constexpr std::string_view BadHeader = "BadHeader";
inline constexpr std::string_view SourceMissing = "SourceMissing";
inline constexpr std::string_view DuplicateName = "DuplicateName";
inline constexpr std::string_view NotLocked = "NotLocked";
inline constexpr std::string_view BadKdfParams = "BadKdfParams";
inline constexpr std::string_view VaultBusy = "VaultBusy";

// Environment.
inline constexpr std::string_view Io = "Io";
}  // namespace err

}  // namespace dstealth
