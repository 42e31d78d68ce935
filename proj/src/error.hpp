#pragma once

#include <stdexcept>
#include <string>

namespace qsr {

// Error categories map 1:1 onto CLI exit codes and C API status values.
enum class ErrorCode {
    validation = 1,      // bad input: domain violations, malformed files
    nonconvergence = 2,  // numerical refinement or optimizer failed to settle
    verification = 3,    // a verification check exceeded its tolerance
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace qsr
