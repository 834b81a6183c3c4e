// Copyright 2026 The hopqa Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hopqa {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Input text that cannot be parsed (fatal for the whole file).
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised while building an index from a fact stream.
class BuildError : public Error {
 public:
  using Error::Error;
};

/// A persisted index section is corrupt or truncated.
class IndexFormatError : public Error {
 public:
  IndexFormatError(const std::string& section, const std::string& what)
      : Error("index section '" + section + "': " + what), section_(section) {}

  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

/// A persisted index was written by an incompatible format version.
class IndexVersionError : public Error {
 public:
  IndexVersionError(const std::string& section, unsigned found, unsigned expected)
      : Error("index section '" + section + "': format version " + std::to_string(found) +
              " is not supported (expected " + std::to_string(expected) + ")"),
        found_(found) {}

  unsigned found() const noexcept { return found_; }

 private:
  unsigned found_;
};

/// Caller passed an argument that violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace hopqa
