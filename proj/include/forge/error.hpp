#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// All recoverable failures in the toolkit surface as forge::Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace forge
