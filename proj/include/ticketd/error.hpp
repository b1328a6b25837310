#pragma once

#include <stdexcept>
#include <string>

namespace ticketd {

/// Library-wide error type; the message carries the diagnostic.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ticketd
