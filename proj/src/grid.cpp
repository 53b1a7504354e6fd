#include "nlh/grid.hpp"

#include <cmath>
#include <numbers>

#include "nlh/error.hpp"
#include "nlh/gauss.hpp"
#include "nlh/tail.hpp"

namespace nlh {

Grid::Grid(int dim, double half_width, double spacing) : dim_(dim), half_width_(half_width), h_(spacing) {
    require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
    require(std::isfinite(spacing) && spacing > 0.0, "grid spacing must be positive");
    require(std::isfinite(half_width) && half_width > 0.0, "grid half-width must be positive");
    const double ratio = half_width / spacing;
    const double n = std::round(ratio);
    require(n >= 1.0 && std::fabs(ratio - n) <= 1e-9 * std::fmax(1.0, ratio),
            "grid spacing must divide the half-width");
    require(n <= 1 << 20, "grid too large");
    n_ = static_cast<int>(n);
    const std::size_t side = static_cast<std::size_t>(2 * n_ + 1);
    size_ = dim == 1 ? side : side * side;
    require(size_ <= (std::size_t{1} << 28), "grid has too many nodes");
}

Grid build_grid(int dim, double half_width, double spacing) { return Grid(dim, half_width, spacing); }

Exterior Exterior::zero() { return Exterior(); }

Exterior Exterior::formula(std::function<double(Point)> g, std::string name) {
    require(static_cast<bool>(g), "exterior formula is empty");
    Exterior e;
    e.g_ = std::move(g);
    e.name_ = std::move(name);
    return e;
}

GridFunction::GridFunction(Grid grid, Exterior ext)
    : grid_(grid), values_(grid.size(), 0.0), ext_(std::move(ext)) {}

GridFunction::GridFunction(Grid grid, std::vector<double> values, Exterior ext)
    : grid_(grid), values_(std::move(values)), ext_(std::move(ext)) {
    require(values_.size() == grid_.size(), "grid function size does not match its grid");
}

GridFunction GridFunction::sample(Grid grid, const std::function<double(Point)>& f, Exterior ext) {
    GridFunction u(grid, std::move(ext));
    for (std::size_t i = 0; i < grid.size(); ++i) u.values_[i] = f(grid.node(i));
    return u;
}

std::vector<double> mass_cell_weights(const Grid& grid, double s) {
    const GaussRule& g = gauss_legendre(4);
    const double h = grid.spacing();
    const int dim = grid.dim();
    const double p = dim + 2.0 * s;
    auto wfun = [p](double r2) { return 1.0 / (1.0 + std::pow(r2, 0.5 * p)); };

    // The weight depends on |i|, |j| only.
    const int n = grid.half_count();
    std::vector<double> out(grid.size());
    if (dim == 1) {
        std::vector<double> by_abs(n + 1);
        for (int i = 0; i <= n; ++i) {
            double acc = 0.0;
            for (int a = 0; a < 4; ++a) {
                const double x = (i + 0.5 * g.nodes[a]) * h;
                acc += 0.5 * h * g.weights[a] * wfun(x * x);
            }
            by_abs[i] = acc;
        }
        for (int i = -n; i <= n; ++i) out[grid.index(i)] = by_abs[std::abs(i)];
        return out;
    }
    std::vector<double> tri(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (int a = 0; a < 4; ++a) {
                const double x = (i + 0.5 * g.nodes[a]) * h;
                for (int b = 0; b < 4; ++b) {
                    const double y = (j + 0.5 * g.nodes[b]) * h;
                    acc += 0.25 * h * h * g.weights[a] * g.weights[b] * wfun(x * x + y * y);
                }
            }
            tri[static_cast<std::size_t>(i) * (n + 1) + j] = acc;
            tri[static_cast<std::size_t>(j) * (n + 1) + i] = acc;
        }
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto ij = grid.lattice(k);
        out[k] = tri[static_cast<std::size_t>(std::abs(ij[0])) * (n + 1) + std::abs(ij[1])];
    }
    return out;
}

namespace {

void check_growth(const Exterior& ext, int dim, double s) {
    const int ndir = dim == 1 ? 2 : 8;
    for (int d = 0; d < ndir; ++d) {
        Point dir = dim == 1 ? Point{d == 0 ? 1.0 : -1.0, 0.0}
                             
                             : Point{std::cos(d * std::numbers::pi / 4.0 + 0.1),
                                     std::sin(d * std::numbers::pi / 4.0 + 0.1)};
        const double g3 = std::fabs(ext(1e3 * dir));
        const double g6 = std::fabs(ext(1e6 * dir));
        require(std::isfinite(g3) && std::isfinite(g6), "exterior data is not finite far from the box");
        if (g6 > 1e-300 && g6 > g3) {
            const double rate = std::log(g6 / std::fmax(g3, 1e-300)) / std::log(1e3);
            require(rate < 2.0 * s - 1e-3,
                    "exterior data grows like |x|^" + std::to_string(rate) +
                        ", the weighted mass diverges (needs growth below |x|^{2s})");
        }
    }
}

}  // namespace

double weighted_mass(const GridFunction& u, double s, MassMode mode) {
    require(s > 0.0 && s < 1.0, "weighted_mass: s must lie in (0, 1)");
    const Grid& grid = u.grid();
    const std::vector<double> w = mass_cell_weights(grid, s);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = mode == MassMode::Absolute ? std::fabs(u[i]) : u[i];
        require(std::isfinite(v), "weighted_mass: non-finite grid value");
        acc += v * w[i];
    }
    const Exterior& ext = u.exterior();
    if (ext.is_zero()) return acc;

    check_growth(ext, grid.dim(), s);
    const double a = (grid.half_count() + 0.5) * grid.spacing();
    const TailRule rule = build_tail_rule(grid.dim(), s, a, false, {16, 32, 6});
    const double p = grid.dim() + 2.0 * s;
    double tail = 0.0;
    for (std::size_t k = 0; k < rule.points.size(); ++k) {
        const Point y = rule.points[k];
        double g = ext(y);
        if (mode == MassMode::Absolute) g = std::fabs(g);
        // ∫ g/(1+r^p) = ∫ [g r^p/(1+r^p)] r^{-p}
        const double rp = std::pow(norm(y), p);
        tail += rule.weights[k] * g / (1.0 + 1.0 / rp);
    }
    return acc + tail;
}

GridFunction normalize(const GridFunction& u, double s) {
    const double m = weighted_mass(u, s, MassMode::Signed);
    require(std::isfinite(m) && m != 0.0, "normalize: weighted mass is zero");
    std::vector<double> v(u.values().begin(), u.values().end());
    for (double& x : v) x /= m;
    Exterior ext = u.exterior();
    if (!ext.is_zero()) {
        ext = Exterior::formula([e = u.exterior(), m](Point x) { return e(x) / m; },
                                u.exterior().name() + "/mass");
    }
    return GridFunction(u.grid(), std::move(v), std::move(ext));
}

}  // namespace nlh
