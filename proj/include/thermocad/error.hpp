#pragma once

#include <stdexcept>
#include <string>

namespace thermocad {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File missing or unreadable.
class InputError : public Error {
public:
    using Error::Error;
};

// Unsupported or malformed file content.
class FormatError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// No pixel of the image lies inside the region of interest.
class EmptyRoiError : public Error {
public:
    using Error::Error;
};

// No in-bounds, in-ROI pixel pair exists for a co-occurrence offset.
class EmptyPairsError : public Error {
public:
    using Error::Error;
};

class EmptyRunsError : public Error {
public:
    using Error::Error;
};

class DivisionByZeroError : public Error {
public:
    using Error::Error;
};

// Invalid parameters or dataset shape passed to a trainer or evaluator.
class ConfigError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

namespace detail {

// Rethrows the in-flight error as the same type with `prefix` prepended.
// Kinds are tried in order; errors of other types propagate unchanged.
template <class Kind, class... Rest>
[[noreturn]] void rethrow_with_context(const std::string& prefix)
{
    try {
        throw;
    } catch (const Kind& e) {
        throw Kind(prefix + ": " + e.what());
    } catch (...) {
        if constexpr (sizeof...(Rest) == 0) {
            throw;
        } else {
            rethrow_with_context<Rest...>(prefix);
        }
    }
}

} // namespace detail
} // namespace thermocad
