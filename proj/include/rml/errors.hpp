#pragma once

#include <stdexcept>
#include <string>

namespace rml {

struct InvalidGeometry : std::runtime_error {
    explicit InvalidGeometry(const std::string& what) : std::runtime_error(what) {}
};

struct PlacementFailed : std::runtime_error {
    explicit PlacementFailed(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroProbability : std::domain_error {
    explicit ZeroProbability(const std::string& what) : std::domain_error(what) {}
};

struct InvalidEstimate : std::invalid_argument {
    explicit InvalidEstimate(const std::string& what) : std::invalid_argument(what) {}
};

struct NoCandidates : std::logic_error {
    explicit NoCandidates(const std::string& what) : std::logic_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : ConfigError {
    explicit ParseError(const std::string& what) : ConfigError(what) {}
};

struct ValidationError : ConfigError {
    explicit ValidationError(const std::string& what) : ConfigError(what) {}
};

struct EmptyTrace : std::runtime_error {
    explicit EmptyTrace(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rml
