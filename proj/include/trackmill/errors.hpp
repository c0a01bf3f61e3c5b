#pragma once

#include <stdexcept>
#include <string>

namespace trackmill {

enum class ErrorKind {
    config,       // bad configuration or arguments
    parse,        // malformed input file
    integrity,    // data violates an invariant
    feasibility,  // requested target cannot be realized
    io,           // filesystem failure
    numeric,      // degenerate numeric situation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

}  // namespace trackmill
