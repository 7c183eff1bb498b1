#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ecmsim {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad input: malformed data, mismatched state spaces, broken invariants.
// The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Numeric failure: singular systems, non-convergence, no unique equilibrium.
// The CLI maps these to exit code 2.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

// File system trouble while reading or writing artifacts.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

// Config loading collects every located problem before giving up.
class ConfigError : public ValidationError {
public:
    ConfigError(const std::string& summary, std::vector<std::string> issues)
        : ValidationError(join(summary, issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::string& summary, const std::vector<std::string>& issues) {
        std::string out = summary;
        for (const auto& issue : issues) {
            out += "\n  - " + issue;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

}  // namespace ecmsim
