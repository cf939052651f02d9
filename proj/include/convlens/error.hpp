/*
 * Copyright 2026 The convlens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
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

namespace convlens {

/// Base of every error the engine reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An index (conv ordinal, class, channel, layer) is outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// An architecture description violates the shape chain or layer ordering rules.
class ArchError : public Error {
 public:
  using Error::Error;
};

/// Failure to read or validate a CVW weight container.
class ContainerError : public Error {
 public:
  enum class Kind { BadMagic, UnsupportedVersion, Corrupt, Schema };

  ContainerError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Backward pass was requested with a trace or target it cannot use.
class BackwardError : public Error {
 public:
  using Error::Error;
};

/// Undecodable or unsupported image data.
class ImageError : public Error {
 public:
  using Error::Error;
};

/// Filesystem read/write failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace convlens
