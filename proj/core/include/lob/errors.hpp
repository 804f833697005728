#pragma once

#include <stdexcept>
#include <string>

namespace lob {

/// Base class for all workbench errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define LOB_DEFINE_ERROR(Name)                                        \
    class Name final : public Error {                                 \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

// itch
LOB_DEFINE_ERROR(UnknownType);
LOB_DEFINE_ERROR(TruncatedMessage);
LOB_DEFINE_ERROR(InvalidSide);
LOB_DEFINE_ERROR(FramingError);
LOB_DEFINE_ERROR(InvalidMessage);

// book
LOB_DEFINE_ERROR(UnknownOrderRef);
LOB_DEFINE_ERROR(OverExecution);
LOB_DEFINE_ERROR(DuplicateOrderRef);
LOB_DEFINE_ERROR(CrossedBook);

// features
LOB_DEFINE_ERROR(InsufficientHistory);
LOB_DEFINE_ERROR(DegenerateStd);
LOB_DEFINE_ERROR(InsufficientDepth);

// labeling / naive
LOB_DEFINE_ERROR(IndexOutOfRange);
LOB_DEFINE_ERROR(ZeroDenominator);
LOB_DEFINE_ERROR(EmptyInput);
LOB_DEFINE_ERROR(DayTooShort);

// metrics
LOB_DEFINE_ERROR(LengthMismatch);

// nn
LOB_DEFINE_ERROR(ShapeMismatch);
LOB_DEFINE_ERROR(NonFiniteActivation);
LOB_DEFINE_ERROR(NonFiniteGradient);

// synth / runner
LOB_DEFINE_ERROR(ConfigInvalid);
LOB_DEFINE_ERROR(IoError);

#undef LOB_DEFINE_ERROR

} // namespace lob
