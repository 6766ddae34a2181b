#include "yamabe/constants.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "yamabe/errors.hpp"

namespace yamabe {

DimensionConstants dimension_constants(int n) {
    if (n < 3) throw PreconditionError("dimension must be at least 3, got " + std::to_string(n));
    const double nd = n;
    return {n, (nd - 2.0) / (4.0 * (nd - 1.0)), 2.0 * nd / (nd - 2.0)};
}

double sphere_area(int k) {
    if (k < 0) throw PreconditionError("sphere dimension must be nonnegative");
    const double h = 0.5 * (k + 1);
    return 2.0 * std::exp(h * std::log(std::numbers::pi) - std::lgamma(h));
}

double lambda_constant(int n) {
    const auto dc = dimension_constants(n);
    const double nd = dc.n;
    return nd * (nd - 2.0) / 4.0 * std::pow(sphere_area(n), 2.0 / nd);
}

}  // namespace yamabe
