#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "yamabe/radial.hpp"

namespace yamabe {

struct SolverConfig {
    double el_tol = 1e-8;          // accepted discrete L2 residual
    int max_iters = 60;            // Newton iterations per solve
    int max_halvings = 20;         // damping
    double eps_s = 1e-3;           // schedule ends at p(1 - eps_s)
    int schedule_length = 48;
    double concentration_cap = 1e3;  // max u_s relative to the first solve
    double min_cells = 4.0;        // smallest resolved half-width, in cells
    int max_refinements = 4;       // step bisections before a failure counts as a fold
};

struct SubcriticalSolution {
    RadialField field;  // normalized in L^s, dirichlet-zero
    double lambda = 0.0;
    double s = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

struct Eigenpair {
    double value = 0.0;
    RadialField field;  // positive, unit L^2 norm
};

// Lowest Dirichlet eigenpair of -Delta + c(n) R on the grid (Sturm bisection
// for the eigenvalue, then inverse iteration for the vector).
Eigenpair dirichlet_eigenpair(const Discretization& disc);

// Minimizer of Q_s with lambda_s as an unknown: Newton on the discrete
// Euler-Lagrange system plus the normalization. 2 < s < p.
SubcriticalSolution solve_subcritical(const MetricProfile& profile, const RadialGrid& grid, double s,
                                      const RadialField& init, const SolverConfig& cfg = {});
SubcriticalSolution solve_subcritical(const MetricProfile& profile, const RadialGrid& grid, double s,
                                      const SolverConfig& cfg = {});

// Same, on a prepared discretization, allowing 2 < s <= p.
SubcriticalSolution solve_constrained(const Discretization& disc, double s, const RadialField& init,
                                      const SolverConfig& cfg);

struct ContinuationStep {
    double s = 0.0;
    double lambda = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double max_value = 0.0;
    double half_width = 0.0;  // distance from the maximum to the half-maximum level
};

struct ContinuationResult {
    std::vector<ContinuationStep> steps;
    double y_extrapolated = 0.0;           // linear in (p - s) through the last three steps
    std::optional<double> y_critical;      // multiplier of a resolved solve at s = p
    double y_j = 0.0;                      // y_critical when present, else y_extrapolated
    double upper_witness = 0.0;            // Q_p of the last subcritical field
    bool concentrated = false;
    std::string concentration_reason;
    RadialField final_field;               // unit L^p norm
    RadialField last_subcritical;          // last accepted u_s, unit L^s norm
    double final_residual = 0.0;           // critical residual of final_field with y_j
    double max_ratio = 1.0;                // spread of max u_s across the schedule
};

// Geometric in (p - s): from 0.9 (p - 2) down to p eps_s.
std::vector<double> default_schedule(int n, const SolverConfig& cfg);

ContinuationResult continue_to_critical(const MetricProfile& profile, const RadialGrid& grid,
                                        std::span<const double> schedule, const SolverConfig& cfg = {});
ContinuationResult continue_to_critical(const Discretization& disc, std::span<const double> schedule,
                                        const SolverConfig& cfg);

// Discrete L2 norm of Delta u - c(n) R u + lambda |u|^{s-2} u over the unknown nodes.
double el_residual(const RadialField& u, const MetricProfile& profile, double lambda, std::optional<double> s = {});
double el_residual(const RadialField& u, const Discretization& disc, double lambda, double s);

// Q_s = E(u) / |u|_s^2.
double quotient(const RadialField& u, const Discretization& disc, double s);

}  // namespace yamabe
