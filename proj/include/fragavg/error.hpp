#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fragavg {

/// Malformed or inconsistent user input. CLI exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A fit or optimization that cannot produce a usable result. CLI exit code 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Design matrix failed the pivoted-QR rank check.
class RankDeficientError : public NumericalError {
public:
    RankDeficientError(const std::string& what, std::vector<Eigen::Index> columns)
        : NumericalError(what), columns_(std::move(columns)) {}

    /// Offending column positions within the design that was checked.
    const std::vector<Eigen::Index>& columns() const noexcept { return columns_; }

private:
    std::vector<Eigen::Index> columns_;
};

}  // namespace fragavg
