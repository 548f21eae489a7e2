#pragma once

#include <stdexcept>
#include <string>

namespace hourlasso {

/// Bad or inconsistent input data (malformed CSV, gap days, DST anomalies).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Estimation failed: singular systems, non-convergence, degenerate series.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad K, empty window, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace hourlasso
