#pragma once

#include <stdexcept>
#include <string>

namespace mrecnn {

// bad flags or config values; CLI exit status 1
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// unreadable or malformed inputs; CLI exit status 2
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN detected during training; CLI exit status 3
struct NumericError : std::runtime_error {
    NumericError(const std::string& msg, long long iteration)
        : std::runtime_error(msg + " at iteration " + std::to_string(iteration)),
          iteration(iteration) {}
    long long iteration;
};

} // namespace mrecnn
