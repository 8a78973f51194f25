#pragma once

#include <stdexcept>
#include <string>

namespace wrb {

// CLI exit-code mapping: usage=2, domain=3, numeric=4.
struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace wrb
