#pragma once

#include <stdexcept>
#include <string>

namespace cbpir {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// invalid or inconsistent protocol parameters
struct ParamError : Error {
    using Error::Error;
};

// matrix dimensions do not conform
struct DimError : Error {
    using Error::Error;
};

struct SingularMatrixError : Error {
    using Error::Error;
};

// response/decoding contract violation
struct DecodeError : Error {
    using Error::Error;
};

// malformed bytes (files, frames)
struct SerialError : Error {
    using Error::Error;
};

struct WireError : Error {
    using Error::Error;
};

// iteration/enumeration cap hit (irreducible search, resampling, subset enumeration)
struct CapExceeded : Error {
    using Error::Error;
};

} // namespace cbpir
