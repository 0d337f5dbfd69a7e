// Copyright (C) 2026 The mudoc Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mudoc {

enum class ErrorCode {
    kInvalidArgument,
    kProviderUnavailable,
    kProviderRefusal,
    kBudgetExceeded,
    kDecodeError,
    kModalityMismatch,
    kMalformedPdf,
    kIoError,
    kDimMismatch,
    kZeroVector,
    kCorruptIndex,
    kVersionMismatch,
    kUnknownId,
    kBusy,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure the library reports. The code is the stable
/// part; the message is for humans.
class Error : public std::runtime_error {
 public:
    Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// True for failures worth retrying against an external service.
    bool transient() const noexcept { return code_ == ErrorCode::kProviderUnavailable; }

 private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace mudoc
