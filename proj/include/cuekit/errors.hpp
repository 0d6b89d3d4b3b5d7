#pragma once

#include <stdexcept>
#include <string>

namespace cuekit {

/// Base class for every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define CUEKIT_DEFINE_ERROR(Name)                                    \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& what) : Error(what) {}      \
    }

// file/format errors
CUEKIT_DEFINE_ERROR(FileNotFound);
CUEKIT_DEFINE_ERROR(DecodeError);
CUEKIT_DEFINE_ERROR(EncodeError);
CUEKIT_DEFINE_ERROR(UnsupportedFormat);
CUEKIT_DEFINE_ERROR(PaletteMismatch);
CUEKIT_DEFINE_ERROR(ShapeError);
CUEKIT_DEFINE_ERROR(DTypeError);

// contract errors
CUEKIT_DEFINE_ERROR(ZeroDimension);
CUEKIT_DEFINE_ERROR(DimensionMismatch);
CUEKIT_DEFINE_ERROR(KindError);
CUEKIT_DEFINE_ERROR(ClassOutOfRange);
CUEKIT_DEFINE_ERROR(EmptyCues);
CUEKIT_DEFINE_ERROR(EmptyPrediction);
CUEKIT_DEFINE_ERROR(IgnoreInPrediction);
CUEKIT_DEFINE_ERROR(LengthMismatch);
CUEKIT_DEFINE_ERROR(EmptyMatrix);
CUEKIT_DEFINE_ERROR(ConfigError);

#undef CUEKIT_DEFINE_ERROR

} // namespace cuekit
