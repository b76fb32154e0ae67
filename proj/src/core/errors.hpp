#pragma once

#include <stdexcept>

namespace evad {

// Input data or an argument failed validation.
class ValidationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed payload: bad CSV/JSON, wrong header, version or checksum mismatch.
class FormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature schema of an input does not match the model.
class SchemaError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace evad
