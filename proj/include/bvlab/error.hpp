#pragma once

#include <stdexcept>
#include <string>

namespace bvlab {

// Every failure raised by the library derives from Error so the CLI can map
// categories onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition on an argument's value was violated (limit < 2, n = 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Query beyond the sieved limit. Never silently truncated.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

class NotInvertibleError : public DomainError {
public:
    using DomainError::DomainError;
};

// Corrupt or truncated cache file; `offset` is the byte where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class VersionError : public Error {
public:
    using Error::Error;
};

// Memory budget or I/O failure.
class ResourceError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t nodes)
        : Error(what + " (" + std::to_string(nodes) + " nodes)"), nodes_(nodes) {}

    std::size_t nodes() const noexcept { return nodes_; }

private:
    std::size_t nodes_;
};

}  // namespace bvlab
