#pragma once

#include <stdexcept>
#include <string>

namespace kpboost {

// Violated precondition or unusable input (CLI exit code 1).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Unreadable, unwritable or malformed file (CLI exit code 2).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kpboost
