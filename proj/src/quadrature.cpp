#include "nlh/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "nlh/error.hpp"
#include "nlh/gauss.hpp"

namespace nlh {

double unit_cell_weight(int dim, double s, int i, int j) {
    require(i != 0 || j != 0, "the origin cell has no finite weight");
    if (dim == 1) {
        const int a = std::abs(i);
        // Exact: ∫_{a-1/2}^{a+1/2} y^{-1-2s} dy
        return (std::pow(a - 0.5, -2.0 * s) - std::pow(a + 0.5, -2.0 * s)) / (2.0 * s);
    }
    const int a = std::abs(i), b = std::abs(j);
    const int m = std::max(a, b);
    const int sub = m <= 3 ? 8 : (m <= 12 ? 2 : 1);
    const GaussRule& g = gauss_legendre(4);
    const double e = -(2.0 + 2.0 * s) / 2.0;
    const double len = 1.0 / sub;
    double acc = 0.0;
    for (int p = 0; p < sub; ++p) {
        for (int q = 0; q < sub; ++q) {
            const double x0 = a - 0.5 + p * len, y0 = b - 0.5 + q * len;
            for (int u = 0; u < 4; ++u) {
                const double x = x0 + 0.5 * len * (g.nodes[u] + 1.0);
                for (int v = 0; v < 4; ++v) {
                    const double y = y0 + 0.5 * len * (g.nodes[v] + 1.0);
                    acc += g.weights[u] * g.weights[v] * std::pow(x * x + y * y, e);
                }
            }
        }
    }
    return acc * 0.25 * len * len;
}

QuadratureTable::QuadratureTable(int dim, double spacing, double s, double tail_radius)
    : dim_(dim), h_(spacing), s_(s) {
    require(dim == 1 || dim == 2, "quadrature dimension must be 1 or 2");
    require(s > 0.0 && s < 1.0, "quadrature order s must lie in (0, 1)");
    require(spacing > 0.0 && std::isfinite(spacing), "quadrature spacing must be positive");
    require(tail_radius >= 1.0 && std::isfinite(tail_radius), "tail radius must be at least 1");
    J_ = static_cast<int>(std::ceil(tail_radius / spacing - 1e-9));
    require(J_ >= 1 && J_ <= 4096, "quadrature window too large");

    const double scale = std::pow(spacing, -2.0 * s);
    const int side = 2 * J_ + 1;
    if (dim == 1) {
        dense_.assign(side, 0.0);
        for (int i = 1; i <= J_; ++i) {
            const double w = scale * unit_cell_weight(1, s, i, 0);
            pairs_.push_back({i, 0, w});
            dense_[J_ + i] = w;
            dense_[J_ - i] = w;
        }
    } else {
        // Octant j1 >= j2 >= 0, then reflect.
        std::vector<double> oct(static_cast<std::size_t>(J_ + 1) * (J_ + 1), 0.0);
        for (int a = 1; a <= J_; ++a) {
            for (int b = 0; b <= a; ++b) {
                const double w = scale * unit_cell_weight(2, s, a, b);
                oct[static_cast<std::size_t>(a) * (J_ + 1) + b] = w;
                oct[static_cast<std::size_t>(b) * (J_ + 1) + a] = w;
            }
        }
        dense_.assign(static_cast<std::size_t>(side) * side, 0.0);
        for (int i = -J_; i <= J_; ++i) {
            for (int j = -J_; j <= J_; ++j) {
                if (i == 0 && j == 0) continue;
                const double w = oct[static_cast<std::size_t>(std::abs(i)) * (J_ + 1) + std::abs(j)];
                dense_[static_cast<std::size_t>(i + J_) * side + (j + J_)] = w;
                if (i > 0 || (i == 0 && j > 0)) pairs_.push_back({i, j, w});
            }
        }
    }
    lattice_total_ = 0.0;
    for (const Offset& o : pairs_) lattice_total_ += 2.0 * o.w;
    tail_ = square_tail_coefficient(dim, s, window_radius());
    rule_ = build_tail_rule(dim, s, window_radius(), true);

    const double half = 0.5 * spacing;
    if (dim == 1) {
        consistency_ = std::pow(half, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    } else {
        std::vector<double> th, w;
        append_composite(0.0, std::numbers::pi / 4.0, 4, 16, th, w);
        double acc = 0.0;
        for (std::size_t k = 0; k < th.size(); ++k) {
            acc += w[k] * std::pow(half / std::cos(th[k]), 2.0 - 2.0 * s);
        }
        consistency_ = 4.0 * acc / (2.0 - 2.0 * s);
    }
}

double QuadratureTable::weight(int di, int dj) const {
    if (std::abs(di) > J_ || std::abs(dj) > J_ || (di == 0 && dj == 0)) return 0.0;
    if (dim_ == 1) return dj == 0 ? dense_[di + J_] : 0.0;
    return dense_[static_cast<std::size_t>(di + J_) * (2 * J_ + 1) + (dj + J_)];
}

QuadratureTable build_quadrature(const Grid& grid, double s, double tail_radius) {
    require(tail_radius <= 2.0 * grid.half_width() + 1e-12, "tail radius exceeds twice the box half-width");
    return QuadratureTable(grid.dim(), grid.spacing(), s, tail_radius);
}

QuadratureTable build_quadrature(const Grid& grid, double s) {
    return build_quadrature(grid, s, grid.half_width() + 1.0);
}

}  // namespace nlh
