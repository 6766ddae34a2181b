#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace yamabe {

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// A named hypothesis of the existence argument does not hold for the inputs.
class HypothesisError : public std::domain_error {
public:
    HypothesisError(std::string name, const std::string& what)
        : std::domain_error(what), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

// Newton failed; the last iterate is kept for inspection.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> last_iterate, double last_lambda,
                     double last_residual)
        : std::runtime_error(what),
          last_iterate_(std::move(last_iterate)),
          last_lambda_(last_lambda),
          last_residual_(last_residual) {}
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double last_lambda() const noexcept { return last_lambda_; }
    double last_residual() const noexcept { return last_residual_; }

private:
    std::vector<double> last_iterate_;
    double last_lambda_;
    double last_residual_;
};

struct MonotonicityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A per-radius solve failed inside a batch; carries the radius.
class RadiusError : public std::runtime_error {
public:
    RadiusError(double radius, const std::string& what)
        : std::runtime_error("j = " + std::to_string(radius) + ": " + what), radius_(radius) {}
    double radius() const noexcept { return radius_; }

private:
    double radius_;
};

}  // namespace yamabe
