#pragma once

#include <stdexcept>
#include <string>

namespace flr {

/// Base class for every error thrown by this library.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of an operation (t outside [0,1],
/// lambda outside (0,1), negative fractional power below -1, ...).
struct domain_error : error {
    using error::error;
};

/// Dimension / length mismatch between containers that must agree.
struct shape_error : error {
    using error::error;
};

/// Request beyond a precomputed table or retained spectral rank.
struct capacity_error : error {
    using error::error;
};

/// Numerical failure (eigensolver non-convergence, negative eigenvalue beyond
/// tolerance, excessive mass outside a retained span, ...).
struct numeric_error : error {
    using error::error;
};

/// Gram/system matrix too close to singular to apply an inverse square root.
struct ill_conditioned_error : error {
    ill_conditioned_error(const std::string& what, double condition)
        : error(what + " (condition number " + std::to_string(condition) + ")"),
          condition_number(condition) {}
    double condition_number;
};

/// Sample count not divisible by the requested shard count.
struct divisibility_error : error {
    using error::error;
};

/// Malformed serialized payload / CSV / JSON.
struct parse_error : error {
    using error::error;
};

/// File system failure.
struct io_error : error {
    using error::error;
};

/// Invalid experiment configuration (bad schedules, filter qualification
/// violated, non-ascending sample sizes, ...).
struct config_error : error {
    using error::error;
};

}  // namespace flr
