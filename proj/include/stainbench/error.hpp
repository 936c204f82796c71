#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stainbench {

// Process exit codes; stable contract of the command-line tool.
enum class ExitCode : int {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ExitCode code() const noexcept { return code_; }

    const char* kind() const noexcept {
        switch (code_) {
        case ExitCode::Usage: return "usage";
        case ExitCode::Data: return "data";
        case ExitCode::Numerical: return "numerical";
        default: return "ok";
        }
    }

private:
    ExitCode code_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error(ExitCode::Usage, message) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(ExitCode::Data, message) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& message) : Error(ExitCode::Numerical, message) {}
};

enum class EstimationFailure {
    InsufficientTissue,
    DegenerateStainPlane,
};

const char* to_string(EstimationFailure failure) noexcept;

// Raised by per-image stain estimation when the optical densities cannot
// support a two-stain decomposition.
class StainEstimationError : public NumericalError {
public:
    StainEstimationError(EstimationFailure reason, const std::string& detail)
        : NumericalError(std::string(to_string(reason)) + ": " + detail), reason_(reason) {}

    EstimationFailure reason() const noexcept { return reason_; }

private:
    EstimationFailure reason_;
};

// Corpus fitting ended with no usable tile. Carries one reason per skipped tile.
class CorpusFitError : public DataError {
public:
    CorpusFitError(const std::string& message, std::vector<std::string> skip_reasons)
        : DataError(message), skip_reasons_(std::move(skip_reasons)) {}

    const std::vector<std::string>& skip_reasons() const noexcept { return skip_reasons_; }

private:
    std::vector<std::string> skip_reasons_;
};

inline const char* to_string(EstimationFailure failure) noexcept {
    switch (failure) {
    case EstimationFailure::InsufficientTissue: return "InsufficientTissue";
    case EstimationFailure::DegenerateStainPlane: return "DegenerateStainPlane";
    }
    return "Unknown";
}

} // namespace stainbench
