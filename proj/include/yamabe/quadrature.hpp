#pragma once

#include <functional>

namespace yamabe {

// Adaptive Gauss-Kronrod over [a, b], split into pieces that double in
// length so that very long radial intervals stay cheap.
double integrate(const std::function<double(double)>& g, double a, double b,
                 double rel_tol = 1e-13);

}  // namespace yamabe
