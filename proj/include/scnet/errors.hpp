#pragma once

#include <stdexcept>
#include <string>

namespace scnet {

/// Base of all library errors; `exit_code` is what the CLI returns for it.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, int exit_code = 1)
        : std::runtime_error(what), exit_code_(exit_code) {}
    [[nodiscard]] int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, 3) {}
};

/// Loss or parameters became non-finite during optimization.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what) : Error(what, 4) {}
};

/// Tensor extents or channel counts do not fit the operation.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(what, 3) {}
};

}  // namespace scnet
