#include "yamabe/tridiagonal.hpp"

#include <lapacke.h>

#include <cmath>
#include <limits>
#include <string>

#include "yamabe/errors.hpp"

namespace yamabe {

TridiagonalLU::TridiagonalLU(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper)
    : lower_(std::move(lower)), diag_(std::move(diag)), upper_(std::move(upper)) {
    const auto n = diag_.size();
    if (n == 0 || lower_.size() + 1 != n || upper_.size() + 1 != n)
        throw PreconditionError("tridiagonal: inconsistent band sizes");
    upper2_.assign(n > 2 ? n - 2 : 1, 0.0);
    pivots_.assign(n, 0);
    const lapack_int info = LAPACKE_dgttrf(static_cast<lapack_int>(n), lower_.data(), diag_.data(), upper_.data(),
                                           upper2_.data(), pivots_.data());
    if (info != 0) throw std::runtime_error("tridiagonal factorization failed (info " + std::to_string(info) + ")");
}

void TridiagonalLU::solve(std::span<double> rhs) const {
    const auto n = static_cast<lapack_int>(diag_.size());
    if (rhs.size() != diag_.size()) throw PreconditionError("tridiagonal: right-hand side size mismatch");
    const lapack_int info = LAPACKE_dgttrs(LAPACK_COL_MAJOR, 'N', n, 1, lower_.data(), diag_.data(), upper_.data(),
                                           upper2_.data(), pivots_.data(), rhs.data(), n);
    if (info != 0) throw std::runtime_error("tridiagonal solve failed (info " + std::to_string(info) + ")");
}

std::size_t count_below(std::span<const double> diag, std::span<const double> off, std::span<const double> mass,
                        double sigma) {
    std::size_t count = 0;
    double d = 1.0;
    const double tiny = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < diag.size(); ++i) {
        d = diag[i] - sigma * mass[i] - (i > 0 ? off[i - 1] * off[i - 1] / d : 0.0);
        if (d == 0.0) d = -tiny;
        if (d < 0.0) ++count;
    }
    return count;
}

}  // namespace yamabe
