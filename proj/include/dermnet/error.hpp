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
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace derm {

enum class ErrorCode {
  // dataset
  MissingColumn,
  DuplicateImageId,
  EmptyInput,
  FractionsDoNotSumToOne,
  EmptyClass,
  // images / preprocessing
  EmptyImage,
  UnsupportedChannelCount,
  NotGrayscale,
  NotRGB,
  WindowLargerThanImage,
  MaskTooLarge,
  DimensionMismatch,
  EvenKernel,
  KernelLargerThanImage,
  // tensors / network
  ShapeMismatch,
  NonIntegralOutputSize,
  WindowLargerThanInput,
  LabelNotBinary,
  NonFiniteValue,
  SpecInvalid,
  // training
  EmptySplit,
  NonFiniteLoss,
  InsufficientLog,
  // checkpoint container
  BadMagic,
  VersionMismatch,
  CorruptHeader,
  TruncatedPayload,
  // evaluation
  LengthMismatch,
  Empty,
  EmptyMatrix,
  SingleClass,
  PatchLargerThanImage,
  // plumbing
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The text without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace derm
