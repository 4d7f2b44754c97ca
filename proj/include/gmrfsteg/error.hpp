#pragma once

#include <stdexcept>
#include <string>

namespace gmrfsteg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad caller-supplied parameter (window size, block size, dimensions...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Requested payload cannot be carried by the image.
class InfeasiblePayload : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gmrfsteg
