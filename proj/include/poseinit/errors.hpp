#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace poseinit {

/// Raised when a metric is asked to correlate images with no variance.
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File missing, unreadable, or inconsistent with its header.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative procedure produced a non-finite loss. Carries the trace up to
/// and including the offending value.
class DivergedError : public std::runtime_error {
public:
    DivergedError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const { return trace_; }

private:
    std::vector<double> trace_;
};

}  // namespace poseinit
