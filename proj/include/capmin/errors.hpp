#pragma once

#include <stdexcept>
#include <string>

namespace capmin {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent potential parameters.
class ParamError : public Error {
public:
    using Error::Error;
};

// Exponent range with no minimizer (m >= 3).
class NoMinimizerError : public Error {
public:
    using Error::Error;
};

// Height outside the domain where the potential is evaluated.
class DomainError : public Error {
public:
    using Error::Error;
};

// Stationary points of R that the scan grid cannot separate.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class NotAdmissible : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

class StepError : public Error {
public:
    using Error::Error;
};

class NoBracket : public Error {
public:
    using Error::Error;
};

class NotApplicable : public Error {
public:
    using Error::Error;
};

} // namespace capmin
