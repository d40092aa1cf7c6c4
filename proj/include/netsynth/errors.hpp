#pragma once

#include <stdexcept>
#include <string>

namespace netsynth {

// Error categories map onto CLI exit codes (see cli.hpp).
enum class ErrorCategory { config, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorCategory::config, w) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(ErrorCategory::data, w) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorCategory::data, w) {}
};

struct IngestionError : Error {
    explicit IngestionError(const std::string& w) : Error(ErrorCategory::data, w) {}
};

struct EncodingError : Error {
    explicit EncodingError(const std::string& w) : Error(ErrorCategory::data, w) {}
};

struct FitError : Error {
    explicit FitError(const std::string& w) : Error(ErrorCategory::data, w) {}
};

struct TrainingError : Error {
    explicit TrainingError(const std::string& w) : Error(ErrorCategory::numeric, w) {}
};

struct SamplingError : Error {
    explicit SamplingError(const std::string& w) : Error(ErrorCategory::numeric, w) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorCategory::numeric, w) {}
};

}  // namespace netsynth
