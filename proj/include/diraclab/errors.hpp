#pragma once

#include <stdexcept>
#include <string>

namespace diraclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scalar parameter is outside its admissible range (m <= 0, dt <= 0, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Two fields or spectra live on different grids, or a buffer has the wrong size.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A data object violates its invariants (non-Hermitian spectrum, non-PSD, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A requested run is outside the window where the lattice model is trustworthy.
class RefusedRun : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace diraclab
