#pragma once

#include <fmt/format.h>

#include <functional>
#include <stdexcept>
#include <string>

namespace aqf {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error
{
public:
    explicit Error(const std::string& msg)
    : std::runtime_error(msg)
    {
    }

    template <typename... Args>
    Error(fmt::format_string<Args...> f, Args&&... args)
    : std::runtime_error(fmt::format(f, std::forward<Args>(args)...))
    {
    }
};

/// Input data that is malformed, inconsistent or outside a documented range.
class DataError : public Error
{
public:
    using Error::Error;
};

/// Caller violated a precondition (bad argument combination, bad config value).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

using LogSink = std::function<void(const std::string&)>;

// Warnings go to stderr unless a sink is installed; tests install a silent one.
void set_log_sink(LogSink sink);
void log_warning(const std::string& msg);

template <typename... Args>
void log_warning(fmt::format_string<Args...> f, Args&&... args)
{
    log_warning(fmt::format(f, std::forward<Args>(args)...));
}

}
