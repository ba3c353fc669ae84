#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iflow {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (matrix/vector sizes, grid dimensions).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on a scalar argument does not hold (degenerate interval, t out of range, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared where the math must stay finite.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, std::size_t index)
        : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// The optimizer produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : Error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Malformed input file or text config.
class ParseError : public Error {
public:
    enum class Kind { BadMagic, Truncated, BadDimensions, BadVersion, BadField, Syntax };

    ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace iflow
