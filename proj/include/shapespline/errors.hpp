#pragma once

#include <stdexcept>

namespace shapespline {

// A matrix that must be invertible for the computation to make sense is
// numerically singular (for example too few distinct design points per
// knot interval).  The message says which matrix and what to do about it.
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The active-set iteration hit its cap without reaching a KKT point.
class CyclingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two independently computed quantities that must agree do not; this
// always indicates a bug, never bad user input.
class InternalInconsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace shapespline
