#pragma once

#include <stdexcept>
#include <string>

namespace upsr {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error {
    using Error::Error;
};

struct ParamError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Model container failures, one type per failure mode so callers can
// distinguish a foreign file from a stale one from a damaged one.
struct ModelFormatError : Error {
    using Error::Error;
};

struct BadMagicError : ModelFormatError {
    using ModelFormatError::ModelFormatError;
};

struct VersionError : ModelFormatError {
    using ModelFormatError::ModelFormatError;
};

struct ChecksumError : ModelFormatError {
    using ModelFormatError::ModelFormatError;
};

}  // namespace upsr
