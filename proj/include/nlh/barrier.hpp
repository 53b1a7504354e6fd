#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "nlh/domain.hpp"
#include "nlh/grid.hpp"
#include "nlh/kernel.hpp"
#include "nlh/quadrature.hpp"

namespace nlh {

bool cone_contains(const Cone& cone, Point x);

// Φ(x) = (e·x - η |x| (1 - (e·x̂)^2))_+^{2s-ε}
struct BarrierParams {
    Cone cone;
    double epsilon;
    FractionalOrder order;
    double exponent() const { return 2.0 * order.value() - epsilon; }
};

double barrier_value(const BarrierParams& b, Point x);

// M⁻Φ(x): lattice near field from the table, polar mid field out to r_max with the exact
// integrand, and the far field in closed form from the homogeneity of Φ.
struct BarrierEvaluator {
    BarrierEvaluator(const QuadratureTable& table, double r_max = 200.0);

    struct Value {
        double value;
        double far_error;  // size of the neglected shift in the closed-form far field
    };
    Value pucci_minus(const BarrierParams& b, const EllipticityBounds& e, Point x) const;

    const QuadratureTable& table;
    double r_max;
    std::vector<Point> mid_points;  // one of each ± pair
    std::vector<double> mid_weights;
    std::vector<Point> far_dirs;    // directions over a half circle (or +1 in 1D)
    std::vector<double> far_weights;
};

struct SubsolutionReport {
    double epsilon = 0.0;
    double spacing = 0.0;
    std::vector<Point> points;
    std::vector<double> values;   // M⁻Φ at spacing h/2
    std::vector<double> bounds;   // quadrature error bound per sample
    double min_value = 0.0;
    double min_margin = 0.0;      // min (value - bound)
    double max_bound = 0.0;
    std::size_t argmin = 0;
    bool passed = false;          // min_margin >= 0
};

// Evaluates M⁻Φ at the table spacing h and at h/2; the bound is the Richardson estimate
// |M_h - M_{h/2}| / (2^{2-2s} - 1) plus the far-field shift term.
SubsolutionReport verify_subsolution(const BarrierParams& b, const EllipticityBounds& e,
                                     const std::vector<Point>& samples, const QuadratureTable& table);

// Samples at radii {0.5, 0.75, 1, 1.5, 2}, spread over the cone and kept 4h away from its boundary.
std::vector<Point> barrier_samples(const Cone& cone, int dim, double h, int per_radius = 41);

struct EpsilonSearch {
    bool found = false;
    double epsilon = 0.0;
    SubsolutionReport certificate;
    std::vector<std::pair<double, double>> trace;  // (ε, min margin)
    double homogeneity_error = 0.0;                // relative, on the axis at radii 1/2 and 1
};

struct EpsilonSearchOptions {
    double spacing = 1.0 / 32.0;
    double window = 2.5;
    int bisection_steps = 6;
    int per_radius = 41;
};

// Largest ε (up to the bisection resolution) whose sampled M⁻Φ stays above its error bound.
EpsilonSearch find_barrier_epsilon(const Cone& cone, int dim, FractionalOrder s, const EllipticityBounds& e,
                                   const EpsilonSearchOptions& opts = {});

// 1 on B_{r_inner}(center), 0 outside B_{r_outer}(center), quintic smoothstep in between (C²).
struct BumpSpec {
    Point center;
    double r_inner = 0.5;
    double r_outer = 0.75;
};

std::function<double(Point)> smooth_bump(const BumpSpec& spec);
GridFunction sample_bump(const Grid& grid, const BumpSpec& spec);

// w = u1 χ_{B_{chi_radius}} + C1 (b - 1) + C2 η. Beyond the box w = -C1 + C2 η.
GridFunction build_w(const GridFunction& u1, const BumpSpec& b, const BumpSpec& eta, double C1, double C2,
                     double chi_radius = 0.75);

struct TouchingLevel {
    double t = 0.0;
    std::size_t node = 0;
};

// Largest t with u ≥ t b on the grid: min of u / b over nodes where b > 0.
TouchingLevel touching_level(const GridFunction& u, const GridFunction& b);

}  // namespace nlh
