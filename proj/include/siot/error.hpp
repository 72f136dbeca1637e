#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace siot {

// Input problems (bad files, bad configs, infeasible requests) derive from
// std::runtime_error; broken caller contracts derive from std::logic_error.

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string file_;
  std::size_t line_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A node id referenced somewhere that does not exist in the node table.
class IntegrityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A trust feature was requested for a pair with no interaction history.
class UndefinedFeatureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ContractError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace siot
