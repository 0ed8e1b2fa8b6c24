#pragma once

#include <stdexcept>
#include <string>

namespace plgate {

/// Raised for invalid inputs, malformed files and violated preconditions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace plgate
