#pragma once

#include <stdexcept>
#include <string>

namespace hfpath {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument (bad grid, p <= 0, index out of range, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Non-finite state while integrating the SDE.
class IntegrationDiverged : public Error {
public:
    IntegrationDiverged(std::size_t fine_index, const std::string& what)
        : Error("integration diverged at fine index " + std::to_string(fine_index) + ": " + what),
          fine_index_(fine_index) {}

    std::size_t fine_index() const noexcept { return fine_index_; }

private:
    std::size_t fine_index_;
};

// Statistic used outside its domain (jump path in a continuous statistic, odd g in studentization).
class MisuseError : public Error {
public:
    using Error::Error;
};

class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class UnsupportedDerivative : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Bad or inconsistent configuration; `key` names the offending entry when known.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

// A limit constant produced an impossible value (e.g. negative variance).
class InternalConstantError : public Error {
public:
    using Error::Error;
};

}  // namespace hfpath
