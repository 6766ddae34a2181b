#include "yamabe/radial.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "yamabe/errors.hpp"

namespace yamabe {

RadialGrid::RadialGrid(std::vector<double> nodes, bool uniform) : nodes_(std::move(nodes)), uniform_(uniform) {
    if (nodes_.size() < 3) throw PreconditionError("grid needs at least 3 nodes");
    if (nodes_.front() < 0.0) throw PreconditionError("grid nodes must be nonnegative");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i] > nodes_[i - 1])) throw PreconditionError("grid nodes must increase strictly");
}

RadialGrid RadialGrid::uniform(double outer, std::size_t intervals) {
    if (intervals < 32) throw PreconditionError("uniform grid needs N >= 32 intervals");
    if (!(outer > 0.0)) throw PreconditionError("grid radius must be positive");
    std::vector<double> nodes(intervals + 1);
    const double h = outer / static_cast<double>(intervals);
    for (std::size_t i = 0; i < intervals; ++i) nodes[i] = h * static_cast<double>(i);
    nodes[intervals] = outer;
    return RadialGrid(std::move(nodes), true);
}

RadialGrid RadialGrid::geometric(double inner, double outer, std::size_t intervals) {
    if (intervals < 32) throw PreconditionError("geometric grid needs N >= 32 intervals");
    if (!(inner > 0.0 && outer > inner)) throw PreconditionError("geometric grid needs 0 < inner < outer");
    std::vector<double> nodes(intervals + 1);
    const double lr = std::log(outer / inner);
    for (std::size_t i = 0; i < intervals; ++i)
        nodes[i] = inner * std::exp(lr * static_cast<double>(i) / static_cast<double>(intervals));
    nodes[intervals] = outer;
    return RadialGrid(std::move(nodes), false);
}

RadialGrid RadialGrid::from_nodes(std::vector<double> nodes) {
    bool uniform = nodes.size() >= 3 && nodes.front() == 0.0;
    if (uniform) {
        const double h = nodes.back() / static_cast<double>(nodes.size() - 1);
        for (std::size_t i = 1; i < nodes.size() && uniform; ++i)
            uniform = std::abs(nodes[i] - nodes[i - 1] - h) <= 1e-9 * h;
    }
    return RadialGrid(std::move(nodes), uniform);
}

double RadialGrid::max_step() const {
    double h = 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i) h = std::max(h, nodes_[i] - nodes_[i - 1]);
    return h;
}

RadialField::RadialField(RadialGrid g, std::vector<double> v, Boundary b)
    : grid(std::move(g)), values(std::move(v)), boundary(b) {
    if (values.size() != grid.size()) throw PreconditionError("field size does not match grid");
    for (double x : values)
        if (!std::isfinite(x)) throw PreconditionError("field values must be finite");
    if (boundary == Boundary::dirichlet_zero) {
        if (values.back() != 0.0) throw PreconditionError("dirichlet field must vanish at the outer node");
        if (!grid.has_pole() && values.front() != 0.0)
            throw PreconditionError("dirichlet field must vanish at the inner node of an annulus");
    }
}

RadialField RadialField::sample(const RadialGrid& grid, const std::function<double(double)>& fn, Boundary b) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = fn(grid[i]);
    if (b == Boundary::dirichlet_zero) {
        v.back() = 0.0;
        if (!grid.has_pole()) v.front() = 0.0;
    }
    return RadialField(grid, std::move(v), b);
}

double RadialField::max_value() const { return values[argmax()]; }

std::size_t RadialField::argmax() const {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

bool RadialField::compactly_supported() const {
    return values.back() == 0.0 && (grid.has_pole() || values.front() == 0.0);
}

Discretization::Discretization(const MetricProfile& profile, const RadialGrid& grid)
    : profile_(profile), grid_(grid) {
    if (grid_.outer() > profile_.r_max() * (1.0 + 1e-12))
        throw DomainError("grid/profile radius mismatch: grid reaches " + std::to_string(grid_.outer()) +
                          " beyond r_max " + std::to_string(profile_.r_max()));
    using boost::math::quadrature::gauss;
    const std::size_t m = grid_.size();
    const double omega = sphere_area(profile_.dimension() - 1);
    auto density = [&](double r) { return profile_.area_density(std::min(r, profile_.r_max())); };
    volumes_.assign(m, 0.0);
    conductances_.assign(m - 1, 0.0);
    curvature_.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double a = grid_[i], b = grid_[i + 1], mid = 0.5 * (a + b);
        volumes_[i] += omega * gauss<double, 10>::integrate(density, a, mid);
        volumes_[i + 1] += omega * gauss<double, 10>::integrate(density, mid, b);
        conductances_[i] = omega * profile_.area_density(mid) / (b - a);
    }
    for (std::size_t i = 0; i < m; ++i) curvature_[i] = scalar_curvature(profile_, std::min(grid_[i], profile_.r_max()));
}

std::vector<double> Discretization::stiffness(std::span<const double> u) const {
    const std::size_t m = grid_.size();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double flux = conductances_[i] * (u[i + 1] - u[i]);
        out[i] -= flux;
        out[i + 1] += flux;
    }
    return out;
}

namespace {

void check_same_grid(const RadialField& u, const Discretization& disc) {
    const auto a = u.grid.nodes();
    const auto b = disc.grid().nodes();
    if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin()))
        throw DomainError("field grid does not match the discretization grid");
}

}  // namespace

RadialField laplace_beltrami(const RadialField& u, const MetricProfile& profile) {
    return laplace_beltrami(u, Discretization(profile, u.grid));
}

RadialField laplace_beltrami(const RadialField& u, const Discretization& disc) {
    check_same_grid(u, disc);
    const auto ku = disc.stiffness(u.values);
    const auto vol = disc.volumes();
    const std::size_t m = u.values.size();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = -ku[i] / vol[i];
    // End nodes of a truncated domain are not cell centres; extrapolate quadratically.
    if (m >= 4) {
        out[m - 1] = 3.0 * out[m - 2] - 3.0 * out[m - 3] + out[m - 4];
        if (!u.grid.has_pole()) out[0] = 3.0 * out[1] - 3.0 * out[2] + out[3];
    }
    return RadialField(u.grid, std::move(out), Boundary::free);
}

double lp_norm(const RadialField& u, double s, const MetricProfile& profile) {
    return lp_norm(u, s, Discretization(profile, u.grid));
}

double lp_norm(const RadialField& u, double s, const Discretization& disc) {
    if (!(s >= 1.0)) throw PreconditionError("lp_norm needs s >= 1");
    check_same_grid(u, disc);
    const auto vol = disc.volumes();
    double acc = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) acc += vol[i] * std::pow(std::abs(u.values[i]), s);
    return std::pow(acc, 1.0 / s);
}

double gradient_energy(const RadialField& u, const Discretization& disc) {
    check_same_grid(u, disc);
    const auto cond = disc.conductances();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < u.values.size(); ++i) {
        const double d = u.values[i + 1] - u.values[i];
        acc += cond[i] * d * d;
    }
    return acc;
}

double yamabe_energy(const RadialField& u, const MetricProfile& profile) {
    return yamabe_energy(u, Discretization(profile, u.grid));
}

double yamabe_energy(const RadialField& u, const Discretization& disc) {
    if (!u.compactly_supported())
        throw PreconditionError("yamabe_energy: field does not vanish at the boundary (free boundary rejected)");
    const double c = disc.profile().constants().c;
    const auto vol = disc.volumes();
    const auto curv = disc.curvature();
    double pot = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) pot += vol[i] * curv[i] * u.values[i] * u.values[i];
    return gradient_energy(u, disc) + c * pot;
}

namespace {

std::string shortest(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double x = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && *begin == ' ') ++begin;
    auto res = std::from_chars(begin, end, x);
    if (res.ec != std::errc()) throw PreconditionError("cannot parse number '" + text + "'");
    return x;
}

}  // namespace

void write_field_csv(const std::filesystem::path& path, const RadialField& u) {
    std::ofstream out(path);
    if (!out) throw PreconditionError("cannot write field file " + path.string());
    out << "r,u\n";
    for (std::size_t i = 0; i < u.values.size(); ++i) out << shortest(u.grid[i]) << ',' << shortest(u.values[i]) << '\n';
}

RadialField read_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open field file " + path.string());
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "r,u") throw PreconditionError("field header must be `r,u` in " + path.string());
    std::vector<double> r, v;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw PreconditionError("malformed field row: " + line);
        r.push_back(parse_double(line.substr(0, comma)));
        v.push_back(parse_double(line.substr(comma + 1)));
    }
    auto grid = RadialGrid::from_nodes(std::move(r));
    const bool zero_ends = v.back() == 0.0 && (grid.has_pole() || v.front() == 0.0);
    return RadialField(std::move(grid), std::move(v), zero_ends ? Boundary::dirichlet_zero : Boundary::free);
}

}  // namespace yamabe
