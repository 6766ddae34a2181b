#pragma once

#include <memory>
#include <span>
#include <vector>

namespace yamabe {

// Natural cubic spline through strictly increasing abscissae. Immutable and
// safe to evaluate from several threads.
class CubicSpline {
public:
    CubicSpline(std::span<const double> x, std::span<const double> y);
    ~CubicSpline();
    CubicSpline(CubicSpline&&) noexcept;
    CubicSpline& operator=(CubicSpline&&) noexcept;

    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    std::span<const double> abscissae() const { return x_; }

private:
    struct Impl;
    std::vector<double> x_;
    std::vector<double> y_;
    std::unique_ptr<Impl> impl_;
};

}  // namespace yamabe
