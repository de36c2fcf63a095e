#pragma once

#include <stdexcept>
#include <string>

namespace simret {

// Bad input data: unreadable files, malformed formats, mismatched counts.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Broken internal invariant (a bug, not a user problem). Exit code 3.
class InternalError : public std::runtime_error {
public:
    explicit InternalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace simret
