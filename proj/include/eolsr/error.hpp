#pragma once

#include <stdexcept>
#include <string>

namespace eolsr
{
    // Base for all domain errors. The CLI maps subclasses to exit codes.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Bad user input: malformed files, invalid settings.
    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };

    // A value violates a domain invariant.
    class ValidationError : public Error
    {
    public:
        using Error::Error;
    };

    class ParseError : public Error
    {
    public:
        ParseError(std::size_t line, const std::string& what)
            : Error("line " + std::to_string(line) + ": " + what), line_(line)
        {
        }

        std::size_t line() const noexcept { return line_; }

    private:
        std::size_t line_;
    };

    class LookupError : public Error
    {
    public:
        using Error::Error;
    };
} // namespace eolsr
