#ifndef ALIGNNET_COMMON_HPP
#define ALIGNNET_COMMON_HPP

#include <stdexcept>
#include <string>

namespace alignnet {

// Error classes used across the library. Shape mismatches, malformed input
// files, bad arguments, I/O failures and config validation each get their
// own type so callers (and the CLI) can report them distinctly.

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string &msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string &msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : std::invalid_argument {
    explicit InvalidArgument(const std::string &msg) : std::invalid_argument(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace alignnet

#endif
