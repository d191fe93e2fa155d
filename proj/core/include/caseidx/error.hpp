#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace caseidx {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad argument or configuration supplied by a caller (CLI exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was found broken; indicates a bug, not bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class DuplicateIdError : public Error {
 public:
  DuplicateIdError(std::vector<std::uint64_t> ids, const std::string& context = {});

  const std::vector<std::uint64_t>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::uint64_t> ids_;
};

}  // namespace caseidx
