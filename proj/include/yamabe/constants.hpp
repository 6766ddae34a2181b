#pragma once

#include <string_view>

namespace yamabe {

// c(n) and p for one dimension.
struct DimensionConstants {
    int n = 3;
    double c = 0.125;
    double p = 6.0;
};

// Throws PreconditionError for n < 3.
DimensionConstants dimension_constants(int n);

// Area of the unit k-sphere in R^{k+1}.
double sphere_area(int k);

// Sharp Sobolev constant n(n-2)/4 * |S^n|^{2/n}.
double lambda_constant(int n);

// Every constant this library computes is an infimum over radial fields.
inline constexpr std::string_view kFunctionClass = "radial test functions only";

}  // namespace yamabe
