#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace talp {

/// Base class of every error raised by the toolchain.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required field is missing or has the wrong type. `field` names the
/// offending member and `position` is a JSON pointer (or a byte offset for
/// syntax errors) locating it in the document.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, std::string position, const std::string& what)
      : Error(what), field_(std::move(field)), position_(std::move(position)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& position() const noexcept { return position_; }

 private:
  std::string field_;
  std::string position_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// Arithmetic preconditions of the efficiency model are violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NoMetadataSource : public Error {
 public:
  using Error::Error;
};

class RegionMissing : public Error {
 public:
  RegionMissing(std::string region, std::string source, const std::string& what)
      : Error(what), region_(std::move(region)), source_(std::move(source)) {}

  const std::string& region() const noexcept { return region_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::string region_;
  std::string source_;
};

class EmptyTree : public Error {
 public:
  using Error::Error;
};

// ci_client errors

class AuthError : public Error {
 public:
  using Error::Error;
};

/// The artifact endpoint answered 404. Callers treat this as "no history yet".
class NotFound : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ArchiveError : public Error {
 public:
  using Error::Error;
};

class PathTraversal : public ArchiveError {
 public:
  using ArchiveError::ArchiveError;
};

}  // namespace talp
