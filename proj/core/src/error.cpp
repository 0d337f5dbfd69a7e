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

#include "mudoc/error.hpp"

namespace mudoc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::kProviderRefusal: return "ProviderRefusal";
        case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
        case ErrorCode::kDecodeError: return "DecodeError";
        case ErrorCode::kModalityMismatch: return "ModalityMismatch";
        case ErrorCode::kMalformedPdf: return "MalformedPdf";
        case ErrorCode::kIoError: return "IoError";
        case ErrorCode::kDimMismatch: return "DimMismatch";
        case ErrorCode::kZeroVector: return "ZeroVector";
        case ErrorCode::kCorruptIndex: return "CorruptIndex";
        case ErrorCode::kVersionMismatch: return "VersionMismatch";
        case ErrorCode::kUnknownId: return "UnknownId";
        case ErrorCode::kBusy: return "Busy";
    }
    return "Unknown";
}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mudoc
