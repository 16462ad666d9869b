// Copyright (C) 2026 The irscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace irscale {

enum class ErrorCode {
    InvalidArgument,
    Config,
    BudgetExhausted,
    Numerical,
    Protocol,
    Connection,
    Backend,
    Io,
    Internal,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a category so that the C API and
// the CLI can map it onto a status code / exit code without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, bool retriable = false)
        : std::runtime_error(message), m_code(code), m_retriable(retriable) {}

    ErrorCode code() const noexcept { return m_code; }
    bool retriable() const noexcept { return m_retriable; }

private:
    ErrorCode m_code;
    bool m_retriable;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace irscale
