/**
 * Copyright 2026 The dermnet Authors
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
#include "dermnet/error.hpp"

namespace derm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::FractionsDoNotSumToOne: return "FractionsDoNotSumToOne";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::UnsupportedChannelCount: return "UnsupportedChannelCount";
    case ErrorCode::NotGrayscale: return "NotGrayscale";
    case ErrorCode::NotRGB: return "NotRGB";
    case ErrorCode::WindowLargerThanImage: return "WindowLargerThanImage";
    case ErrorCode::MaskTooLarge: return "MaskTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::KernelLargerThanImage: return "KernelLargerThanImage";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonIntegralOutputSize: return "NonIntegralOutputSize";
    case ErrorCode::WindowLargerThanInput: return "WindowLargerThanInput";
    case ErrorCode::LabelNotBinary: return "LabelNotBinary";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InsufficientLog: return "InsufficientLog";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::PatchLargerThanImage: return "PatchLargerThanImage";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace derm
