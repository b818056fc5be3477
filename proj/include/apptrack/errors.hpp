#pragma once

#include <stdexcept>
#include <string>

namespace apptrack {

// Base class for all library errors. The CLI maps subclasses to exit codes:
// input/parse errors -> 2, everything else that escapes -> 3.
class TrackError : public std::runtime_error {
public:
    explicit TrackError(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public TrackError {
public:
    using TrackError::TrackError;
};

class ZeroVector : public TrackError {
public:
    using TrackError::TrackError;
};

class EmptyHistory : public TrackError {
public:
    using TrackError::TrackError;
};

class ZeroScoreSum : public TrackError {
public:
    using TrackError::TrackError;
};

class CanvasMismatch : public TrackError {
public:
    using TrackError::TrackError;
};

class MissingMask : public TrackError {
public:
    using TrackError::TrackError;
};

class MissingThreshold : public TrackError {
public:
    using TrackError::TrackError;
};

class NonMonotonicFrame : public TrackError {
public:
    using TrackError::TrackError;
};

class SeparationInfeasible : public TrackError {
public:
    using TrackError::TrackError;
};

class EmptyGroundTruth : public TrackError {
public:
    using TrackError::TrackError;
};

class NoCategories : public TrackError {
public:
    using TrackError::TrackError;
};

class IoError : public TrackError {
public:
    using TrackError::TrackError;
};

// Parse failure with the 1-based line number of the offending record.
class ParseError : public TrackError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : TrackError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace apptrack
