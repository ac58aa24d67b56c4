// Copyright 2026 The NeedForge Authors.
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


#ifndef NEEDFORGE_ERROR_H_
#define NEEDFORGE_ERROR_H_

#include <stdexcept>
#include <string>

namespace needforge {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Contract violation on arguments (empty inputs, out-of-range grades, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Network failure or retryable HTTP status after retries were exhausted.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}
  // Last HTTP status seen, 0 if the connection itself failed.
  int status() const { return status_; }

 private:
  int status_;
};

// The endpoint answered, but not in the expected wire format.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Bad manifest or missing upstream artifact; maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace needforge

#endif  // NEEDFORGE_ERROR_H_
