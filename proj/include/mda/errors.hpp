#pragma once

#include <stdexcept>
#include <string>

namespace mda {

/// Raised when two certified enclosures still overlap at the maximum
/// precision budget. Either an exact tie or an insufficient budget.
class UndecidablePredicate : public std::runtime_error {
public:
  explicit UndecidablePredicate(const std::string& what)
      : std::runtime_error("undecidable predicate: " + what) {}
};

/// The enclosure of q*x straddles a half-integer, so the nearest integer is
/// not determined. Only possible for decimal balls with nonzero radius.
class AmbiguousNearestInteger : public std::runtime_error {
public:
  explicit AmbiguousNearestInteger(const std::string& what)
      : std::runtime_error("ambiguous nearest integer: " + what) {}
};

/// A side condition such as eps/T^2 <= e^-2 does not hold.
class ConditionViolated : public std::domain_error {
public:
  explicit ConditionViolated(const std::string& what)
      : std::domain_error("condition violated: " + what) {}
};

class HorizonExceeded : public std::out_of_range {
public:
  explicit HorizonExceeded(const std::string& what)
      : std::out_of_range("horizon exceeded: " + what) {}
};

class IndexOutOfRange : public std::out_of_range {
public:
  explicit IndexOutOfRange(const std::string& what)
      : std::out_of_range("index out of range: " + what) {}
};

class CacheCorrupt : public std::runtime_error {
public:
  explicit CacheCorrupt(const std::string& what)
      : std::runtime_error("cache corrupt: " + what) {}
};

}  // namespace mda
