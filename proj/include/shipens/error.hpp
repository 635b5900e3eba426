// Copyright 2026 The shipens Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shipens {

/// Broad failure classes. The C API maps these one-to-one onto status codes.
enum class ErrorKind {
  kInvalidArgument,
  kConfig,
  kIo,
  kParse,
  kDiverged,
  kTraining,
  kRuntime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::kInvalidArgument, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorKind::kParse, source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A state became non-finite while integrating. `step` is the index of the
/// first non-finite sample.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, std::size_t step)
      : Error(ErrorKind::kDiverged, what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t member)
      : Error(ErrorKind::kTraining, "member " + std::to_string(member) + ": " + what),
        member_(member) {}
  std::size_t member() const noexcept { return member_; }

 private:
  std::size_t member_;
};

}  // namespace shipens
