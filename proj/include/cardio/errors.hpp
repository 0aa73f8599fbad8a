#pragma once

#include <stdexcept>
#include <string>

namespace cardio {

// Base error carrying a stable machine-readable category token. The CLI maps
// categories to exit codes and prints them verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(category + ": " + message), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

#define CARDIO_DEFINE_ERROR(NAME, TOKEN)                                 \
    class NAME : public Error {                                          \
    public:                                                              \
        explicit NAME(const std::string& msg) : Error(TOKEN, msg) {}     \
    }

CARDIO_DEFINE_ERROR(ShapeError, "ShapeError");
CARDIO_DEFINE_ERROR(NumericError, "NumericError");
CARDIO_DEFINE_ERROR(StateError, "StateError");
CARDIO_DEFINE_ERROR(SignalTooShort, "SignalTooShort");
CARDIO_DEFINE_ERROR(InsufficientBeats, "InsufficientBeats");
CARDIO_DEFINE_ERROR(TPeakNotFound, "TPeakNotFound");
CARDIO_DEFINE_ERROR(UnsupportedFrameRate, "UnsupportedFrameRate");
CARDIO_DEFINE_ERROR(NoOverlap, "NoOverlap");
CARDIO_DEFINE_ERROR(EmptyDataset, "EmptyDataset");
CARDIO_DEFINE_ERROR(SequenceTooShort, "SequenceTooShort");
CARDIO_DEFINE_ERROR(ConfigError, "ConfigError");
CARDIO_DEFINE_ERROR(FormatError, "FormatError");
CARDIO_DEFINE_ERROR(CollimationError, "CollimationError");
CARDIO_DEFINE_ERROR(DomainError, "DomainError");
CARDIO_DEFINE_ERROR(EmptyEvaluation, "EmptyEvaluation");
CARDIO_DEFINE_ERROR(IoError, "IoError");

#undef CARDIO_DEFINE_ERROR

} // namespace cardio
