#pragma once

#include <stdexcept>
#include <string>

namespace laspated {

// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, geometry, parameters).
class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite objective/gradient or a numerical routine that failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace laspated
