#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nlh/grid.hpp"
#include "nlh/point.hpp"

namespace nlh {

// {x · e > 0}
struct HalfSpace {
    Point e{1.0, 0.0};
};

// {x_2 > φ(x_1)} with φ piecewise linear through the vertices, constant beyond the ends (2D only).
struct LipschitzGraph {
    std::vector<Point> vertices;
    double lipschitz = 1.0;
};

// {e · x̂ > η (1 - (e · x̂)^2)}; η = 0 is a half-space, larger η narrows the cone.
struct Cone {
    Point e{1.0, 0.0};
    double eta = 0.0;
};

// R^2 minus the closed segment [a, b].
struct Slit {
    Point a{-2.0, 0.0};
    Point b{0.0, 0.0};
};

struct Annulus {
    Point center{0.0, 0.0};
    double r_inner = 0.25;
    double r_outer = 2.0;
};

struct WholeSpace {};

struct Custom {
    std::string name = "custom";
    std::function<bool(Point)> indicator;
};

using Shape = std::variant<HalfSpace, LipschitzGraph, Cone, Slit, Annulus, WholeSpace, Custom>;

// φ(t) = slope · |t - period · round(t / period)|, a zig-zag with φ(0) = 0.
LipschitzGraph sawtooth(double slope, double period, double extent);

bool in_domain(const Shape& shape, Point x, int dim);
std::string shape_name(const Shape& shape);
Shape shape_from_json(const nlohmann::json& j, int dim);
nlohmann::json shape_to_json(const Shape& shape);

// η → cos of the half-opening angle of the cone.
double cone_boundary_cosine(double eta);

enum class NodeLabel : std::uint8_t { Interior, Zero, Data };

// B_{2ϱ·scale}(center) ⊂ Ω ∩ B_{scale/2}, found on the grid.
struct InteriorBall {
    double scale = 1.0;
    Point center;
    double rho = 0.0;
};

struct DomainOptions {
    double ball_radius = 1.0;     // the equation holds in Ω ∩ B_{ball_radius}
    std::vector<double> scales;   // explicit certificate scales; empty → dyadic from 1 down to min_scale
    double min_scale = 0.0;       // 0 → 8h
};

class DomainMask {
public:
    const Grid& grid() const { return grid_; }
    const Shape& shape() const { return shape_; }
    double ball_radius() const { return ball_radius_; }
    NodeLabel label(std::size_t i) const { return labels_[i]; }
    std::span<const NodeLabel> labels() const { return labels_; }
    double dist(std::size_t i) const { return dist_[i]; }
    std::span<const std::size_t> interior_nodes() const { return interior_; }
    const std::vector<InteriorBall>& interior_balls() const { return balls_; }
    // Certificate at `scale`; throws if that scale was not certified.
    const InteriorBall& ball_at(double scale) const;

private:
    friend DomainMask build_domain(const Grid&, const Shape&, const DomainOptions&);
    DomainMask(Grid g, Shape s) : grid_(g), shape_(std::move(s)) {}

    Grid grid_;
    Shape shape_;
    double ball_radius_ = 1.0;
    std::vector<NodeLabel> labels_;
    std::vector<double> dist_;
    std::vector<std::size_t> interior_;
    std::vector<InteriorBall> balls_;
};

DomainMask build_domain(const Grid& grid, const Shape& shape, const DomainOptions& opts = {});

// dist(x, B_1 \ Ω) at a node, using the analytic complement where it is exact and lattice
// distance to zero-labelled nodes otherwise.
double dist_to_complement(const DomainMask& mask, std::size_t node);

// Exact Euclidean distance from every node to the nearest node with seed[i] set (+inf if none).
std::vector<double> lattice_distance(const Grid& grid, std::span<const std::uint8_t> seed);

}  // namespace nlh
