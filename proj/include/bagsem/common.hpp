#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bagsem {

// Multiplicities are signed 64-bit and every add/mul is overflow-checked.
// Query results never need negative counts; the signed type keeps arithmetic
// UB-free and makes accidental underflow loud.
using Count = std::int64_t;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what) {}
    ParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line(line) {}
    int line = 0;
};

struct ValidationError : Error {
    using Error::Error;
    explicit ValidationError(const std::string& what) : Error(what) {}
};

struct OverflowError : Error {
    explicit OverflowError(const std::string& what) : Error(what) {}
};

struct TranslationError : Error {
    explicit TranslationError(const std::string& what) : Error(what) {}
};

struct BudgetError : Error {
    explicit BudgetError(const std::string& what) : Error(what) {}
};

inline Count checked_add(Count a, Count b) {
    Count r;
    if (__builtin_add_overflow(a, b, &r))
        throw OverflowError("count overflow in addition");
    return r;
}

inline Count checked_mul(Count a, Count b) {
    Count r;
    if (__builtin_mul_overflow(a, b, &r))
        throw OverflowError("count overflow in multiplication");
    return r;
}

}  // namespace bagsem
