#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace relq {

// A non-fatal finding produced by validators and checkers. `where` names the
// offending entity (element id, class name, relation name, ...).
struct Diagnostic {
    std::string where;
    std::string message;
};

inline std::string to_string(const Diagnostic& d) {
    return d.where.empty() ? d.message : d.where + ": " + d.message;
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Syntax or resolution failure in a textual source. Line/column are 1-based;
// 0 means unknown.
struct ParseError : Error {
    ParseError(const std::string& msg, int line = 0, int col = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg
                         : msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct EvalError : Error {
    using Error::Error;
};

struct EngineError : Error {
    using Error::Error;
};

} // namespace relq
