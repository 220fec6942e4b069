#pragma once

#include <stdexcept>
#include <string>

namespace frmpair {

/// Raised when a measurement has no counts (or zero probability) to normalize by.
class DegenerateMeasurement : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a requested parameter set leaves the single-pair regime
/// (mean pairs per gate >= 1).
class OutOfModel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when fitted or tallied data cannot describe a physical fringe
/// (non-positive offset).
class DegenerateData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the fringe fitter for rank-deficient or unphysical data.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace frmpair
