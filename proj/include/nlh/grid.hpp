#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlh/point.hpp"

namespace nlh {

// Uniform lattice h·Z^n restricted to the box [-R, R]^n.
class Grid {
public:
    Grid(int dim, double half_width, double spacing);

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    double spacing() const { return h_; }
    // Nodes per axis on each side of the origin.
    int half_count() const { return n_; }
    int side() const { return 2 * n_ + 1; }
    std::size_t size() const { return size_; }

    bool in_box(int i, int j) const {
        return i >= -n_ && i <= n_ && (dim_ == 1 ? j == 0 : (j >= -n_ && j <= n_));
    }
    std::size_t index(int i, int j = 0) const {
        return dim_ == 1 ? static_cast<std::size_t>(i + n_)
                         : static_cast<std::size_t>(i + n_) * side() + static_cast<std::size_t>(j + n_);
    }
    std::array<int, 2> lattice(std::size_t idx) const {
        if (dim_ == 1) return {static_cast<int>(idx) - n_, 0};
        return {static_cast<int>(idx / side()) - n_, static_cast<int>(idx % side()) - n_};
    }
    Point point(int i, int j) const { return {i * h_, j * h_}; }
    Point node(std::size_t idx) const {
        const auto ij = lattice(idx);
        return point(ij[0], ij[1]);
    }

    bool operator==(const Grid& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && h_ == o.h_;
    }

private:
    int dim_;
    double half_width_;
    double h_;
    int n_;
    std::size_t size_;
};

Grid build_grid(int dim, double half_width, double spacing);

// Values beyond the box: identically zero or an analytic formula.
class Exterior {
public:
    static Exterior zero();
    static Exterior formula(std::function<double(Point)> g, std::string name = "formula");

    bool is_zero() const { return !g_; }
    double operator()(Point x) const { return g_ ? g_(x) : 0.0; }
    const std::string& name() const { return name_; }

private:
    std::function<double(Point)> g_;
    std::string name_ = "zero";
};

class GridFunction {
public:
    explicit GridFunction(Grid grid, Exterior ext = Exterior::zero());
    GridFunction(Grid grid, std::vector<double> values, Exterior ext);
    static GridFunction sample(Grid grid, const std::function<double(Point)>& f, Exterior ext);

    const Grid& grid() const { return grid_; }
    const Exterior& exterior() const { return ext_; }
    void set_exterior(Exterior ext) { ext_ = std::move(ext); }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    // Value at lattice point (i, j): stored value in the box, exterior formula beyond.
    double at(int i, int j) const {
        if (grid_.in_box(i, j)) return values_[grid_.index(i, j)];
        return ext_(grid_.point(i, j));
    }

private:
    Grid grid_;
    std::vector<double> values_;
    Exterior ext_;
};

enum class MassMode { Signed, Absolute };

// Quadrature weight of each node cell for ∫ (1 + |x|^{n+2s})^{-1} dx.
std::vector<double> mass_cell_weights(const Grid& grid, double s);

// ∫ u(x) / (1 + |x|^{n+2s}) dx, grid part plus the exterior beyond the box.
double weighted_mass(const GridFunction& u, double s, MassMode mode = MassMode::Signed);
GridFunction normalize(const GridFunction& u, double s);

}  // namespace nlh
