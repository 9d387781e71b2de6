#pragma once

#include <stdexcept>
#include <string>

namespace msnn {

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct DegeneracyError : std::runtime_error {
    DegeneracyError(int index, const std::string& what)
        : std::runtime_error(what), index(index) {}
    int index;
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace msnn
