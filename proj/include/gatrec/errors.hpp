/*
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

#ifndef GATREC_ERRORS_HPP_
#define GATREC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gatrec {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Malformed input line; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Item metadata unresolvable by both cache and catalog client.
class MetadataError : public Error {
 public:
  using Error::Error;
};

/// An id required for a complete embedding table has no text source.
class CompletenessError : public Error {
 public:
  using Error::Error;
};

/// Graph has no edges left after rating-3 filtering.
class EmptyGraphError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced during a numeric pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RemoteError : public Error {
 public:
  using Error::Error;
};

}  // namespace gatrec

#endif  // GATREC_ERRORS_HPP_
