#pragma once

#include <stdexcept>
#include <string>

namespace dufm {

// Error taxonomy shared by every module. All carry a human-readable what().
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDimension : Error {
    using Error::Error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

struct InvalidLabels : Error {
    using Error::Error;
};

struct UnsupportedKind : Error {
    using Error::Error;
};

// Numerical kernel failed (e.g. SVD non-convergence); message includes an
// input hash so the failing case can be reproduced.
struct NumericFailure : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct NotApplicable : Error {
    using Error::Error;
};

struct TooLarge : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace dufm
