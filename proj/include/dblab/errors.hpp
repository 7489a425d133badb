#pragma once

#include <stdexcept>
#include <string>

namespace dblab {

// Caller broke a documented precondition (non-symmetric input, dim mismatch, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative routine failed to converge; carries the residual it got stuck at.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Training data is rank-deficient (or otherwise unusable).
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad experiment configuration (b does not divide n, empty schedule, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An optimizer run produced non-finite values or blew past its norm cap.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double norm, int epoch)
        : std::runtime_error(what), norm_(norm), epoch_(epoch) {}
    double norm() const { return norm_; }
    int epoch() const { return epoch_; }

private:
    double norm_;
    int epoch_;
};

}  // namespace dblab
