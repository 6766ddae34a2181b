#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "yamabe/manifold.hpp"

namespace yamabe {

// Strictly increasing radial nodes. Uniform grids start at the pole;
// geometric grids cover an annulus [inner, outer].
class RadialGrid {
public:
    static RadialGrid uniform(double outer, std::size_t intervals);
    static RadialGrid geometric(double inner, double outer, std::size_t intervals);
    static RadialGrid from_nodes(std::vector<double> nodes);

    std::span<const double> nodes() const { return nodes_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t intervals() const { return nodes_.size() - 1; }
    double inner() const { return nodes_.front(); }
    double outer() const { return nodes_.back(); }
    bool has_pole() const { return nodes_.front() == 0.0; }
    bool is_uniform() const { return uniform_; }
    // Largest node spacing.
    double max_step() const;

private:
    explicit RadialGrid(std::vector<double> nodes, bool uniform);
    std::vector<double> nodes_;
    bool uniform_ = false;
};

enum class Boundary { dirichlet_zero, free };

// Values at every grid node. Dirichlet fields vanish exactly at the outer
// node, and at the inner node too when the grid has no pole.
struct RadialField {
    RadialGrid grid;
    std::vector<double> values;
    Boundary boundary = Boundary::free;

    RadialField(RadialGrid g, std::vector<double> v, Boundary b);

    static RadialField sample(const RadialGrid& grid, const std::function<double(double)>& fn, Boundary b);

    double max_value() const;
    std::size_t argmax() const;
    // True when the field vanishes at the ends of the grid that are not the pole.
    bool compactly_supported() const;
};

// Finite-volume weights of a grid on a profile: dual-cell volumes at nodes,
// conductances on the intervals, and curvature samples at nodes.
class Discretization {
public:
    Discretization(const MetricProfile& profile, const RadialGrid& grid);

    const MetricProfile& profile() const { return profile_; }
    const RadialGrid& grid() const { return grid_; }
    std::span<const double> volumes() const { return volumes_; }
    std::span<const double> conductances() const { return conductances_; }
    std::span<const double> curvature() const { return curvature_; }

    // Nodes carrying unknowns of a Dirichlet problem: [first, last).
    std::size_t first_unknown() const { return grid_.has_pole() ? 0 : 1; }
    std::size_t last_unknown() const { return grid_.intervals(); }

    // (K u)_i = -sum over adjacent intervals of conductance times the jump.
    std::vector<double> stiffness(std::span<const double> u) const;

private:
    MetricProfile profile_;
    RadialGrid grid_;
    std::vector<double> volumes_;
    std::vector<double> conductances_;
    std::vector<double> curvature_;
};

RadialField laplace_beltrami(const RadialField& u, const MetricProfile& profile);
RadialField laplace_beltrami(const RadialField& u, const Discretization& disc);

double lp_norm(const RadialField& u, double s, const MetricProfile& profile);
double lp_norm(const RadialField& u, double s, const Discretization& disc);

// Discrete Dirichlet integral of |grad u|^2.
double gradient_energy(const RadialField& u, const Discretization& disc);

// Integral of |grad u|^2 + c(n) R u^2; rejects fields that do not vanish at the boundary.
double yamabe_energy(const RadialField& u, const MetricProfile& profile);
double yamabe_energy(const RadialField& u, const Discretization& disc);

void write_field_csv(const std::filesystem::path& path, const RadialField& u);
RadialField read_field_csv(const std::filesystem::path& path);

}  // namespace yamabe
