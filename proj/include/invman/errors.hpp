#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace invman {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in a DSL source string.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position,
             std::vector<std::string> expected);

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Unbound variable or a domain violation (log of non-positive, division by
/// zero, ...) during evaluation. `subterm()` is the printed offending node.
class EvalError : public Error {
 public:
  enum class Kind { unbound_variable, domain };
  EvalError(Kind kind, std::string subterm, const std::string& message);

  Kind kind() const noexcept { return kind_; }
  const std::string& subterm() const noexcept { return subterm_; }

 private:
  Kind kind_;
  std::string subterm_;
};

class AtlasError : public Error {
 public:
  using Error::Error;
};

class FieldError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class PersistenceError : public Error {
 public:
  using Error::Error;
};

/// Scenario file violates the schema; `path()` is a JSON path like
/// `$.charts[1].domain.box`.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string path, const std::string& message);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace invman
