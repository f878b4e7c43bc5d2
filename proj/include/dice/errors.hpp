#pragma once

#include <stdexcept>
#include <string>

namespace dice {

// Base for all numerical/module failures. Config problems use ConfigError.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define DICE_ERROR(Name)                                                     \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}         \
    };

DICE_ERROR(NegativeRadicand)
DICE_ERROR(ConvergenceFailure)
DICE_ERROR(InsufficientDynamicRange)
DICE_ERROR(NoEPInBracket)
DICE_ERROR(GapClosure)
DICE_ERROR(NoClosure)
DICE_ERROR(GeometryError)
DICE_ERROR(ZeroVector)
DICE_ERROR(DimensionMismatch)
DICE_ERROR(ReferenceOnSpectrum)
DICE_ERROR(NoEdgeStates)

#undef DICE_ERROR

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dice
