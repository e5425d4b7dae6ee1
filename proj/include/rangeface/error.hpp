#pragma once

#include <stdexcept>
#include <string>

namespace rangeface {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int { ok = 0, usage = 2, data = 3, numeric = 4 };

/// Base of every error the library throws. Each error knows which exit code
/// the CLI should map it to.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Malformed input data (file grammar, missing ids, mismatched axes).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, ExitCode::data) {}
};

/// A parse failure. `line` is 1-based; 0 means "not tied to a line".
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(line ? what + ", line " + std::to_string(line) : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Numerically degenerate input: collinear landmarks, zero variance, etc.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what, ExitCode::numeric) {}
};

class CropError : public DataError {
public:
    using DataError::DataError;
};

class GenerationError : public DataError {
public:
    using DataError::DataError;
};

class AlignmentError : public NumericError {
public:
    using NumericError::NumericError;
};

class ResampleError : public NumericError {
public:
    using NumericError::NumericError;
};

class TrainingError : public NumericError {
public:
    using NumericError::NumericError;
};

class NormalizationError : public NumericError {
public:
    using NumericError::NumericError;
};

class FusionError : public DataError {
public:
    using DataError::DataError;
};

class EvalError : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace rangeface
