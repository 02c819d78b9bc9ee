#pragma once

#include <stdexcept>
#include <string>

namespace cpend {

/// Base for every engine error that callers may want to catch selectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class PathThroughSingularity : public Error {
public:
    using Error::Error;
};

class BranchInconsistency : public Error {
public:
    using Error::Error;
};

class ToleranceNotMet : public Error {
public:
    using Error::Error;
};

class DegenerateConic : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cpend
