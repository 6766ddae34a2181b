#pragma once

#include <span>
#include <vector>

namespace yamabe {

// Partial-pivoting LU of a general tridiagonal matrix (LAPACK gttrf/gttrs).
class TridiagonalLU {
public:
    // lower and upper have size n-1.
    TridiagonalLU(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper);
    void solve(std::span<double> rhs) const;
    std::size_t size() const { return diag_.size(); }

private:
    std::vector<double> lower_, diag_, upper_, upper2_;
    std::vector<int> pivots_;
};

// Number of eigenvalues below sigma of the pencil (T, diag(mass)) for a
// symmetric tridiagonal T, by Sylvester inertia of T - sigma*mass.
std::size_t count_below(std::span<const double> diag, std::span<const double> off, std::span<const double> mass,
                        double sigma);

}  // namespace yamabe
