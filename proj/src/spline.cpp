#include "yamabe/spline.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <mutex>

#include "yamabe/errors.hpp"

namespace yamabe {

namespace {
std::once_flag g_handler_once;
}

struct CubicSpline::Impl {
    gsl_spline* spline = nullptr;
    ~Impl() { gsl_spline_free(spline); }
};

CubicSpline::~CubicSpline() = default;
CubicSpline::CubicSpline(CubicSpline&&) noexcept = default;
CubicSpline& CubicSpline::operator=(CubicSpline&&) noexcept = default;

CubicSpline::CubicSpline(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
    std::call_once(g_handler_once, [] { gsl_set_error_handler_off(); });
    if (x_.size() != y_.size()) throw PreconditionError("spline: abscissa/ordinate size mismatch");
    if (x_.size() < 3) throw PreconditionError("spline: need at least 3 points");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw PreconditionError("spline: abscissae must be strictly increasing");
    impl_ = std::make_unique<Impl>();
    impl_->spline = gsl_spline_alloc(gsl_interp_cspline, x_.size());
    if (!impl_->spline || gsl_spline_init(impl_->spline, x_.data(), y_.data(), x_.size()) != GSL_SUCCESS)
        throw PreconditionError("spline: initialization failed");
}

namespace {
void check_range(double x, double lo, double hi) {
    if (!(x >= lo && x <= hi)) throw DomainError("spline: evaluation point outside tabulated range");
}
}  // namespace

double CubicSpline::operator()(double x) const {
    check_range(x, x_.front(), x_.back());
    return gsl_spline_eval(impl_->spline, x, nullptr);
}

double CubicSpline::derivative(double x) const {
    check_range(x, x_.front(), x_.back());
    return gsl_spline_eval_deriv(impl_->spline, x, nullptr);
}

double CubicSpline::second_derivative(double x) const {
    check_range(x, x_.front(), x_.back());
    return gsl_spline_eval_deriv2(impl_->spline, x, nullptr);
}

}  // namespace yamabe
