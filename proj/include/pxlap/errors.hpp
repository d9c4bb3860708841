#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pxlap {

/// Malformed or inconsistent problem data (bad config, wrong sizes, violated data invariants).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument left the domain where a quantity is defined, e.g. w <= -1/n under a singular term.
class DomainError : public std::domain_error {
public:
  DomainError(const std::string& what, std::size_t node)
      : std::domain_error(what + " (node " + std::to_string(node) + ")"), node_(node) {}
  explicit DomainError(const std::string& what) : std::domain_error(what) {}

  std::size_t node() const { return node_; }

private:
  std::size_t node_ = static_cast<std::size_t>(-1);
};

/// Query outside the time interval of a trajectory.
class RangeError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

}  // namespace pxlap
