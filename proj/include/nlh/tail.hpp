#pragma once

#include <vector>

#include "nlh/point.hpp"

namespace nlh {

// ∫_{|y|_inf > a} |y|^{-n-2s} dy in closed form (2D uses a 64-point angular rule).
double square_tail_coefficient(int dim, double s, double a);

struct TailResolution {
    int angular_panels = 4;  // per octant (2D)
    int radial_panels = 8;
    int order = 4;
};

// Points y_k and weights ω_k with Σ ω_k F(y_k) ≈ ∫_{|y|_inf > a} F(y) |y|^{-n-2s} dy for bounded F.
// With `even` set only one of ±y is kept and its weight doubled, which is exact for even F.
// The radial variable is t = (r / (a ρ(θ)))^{-2s}, so the far field maps onto a bounded interval.
struct TailRule {
    std::vector<Point> points;
    std::vector<double> weights;
    bool even = false;
    double total() const;
};

TailRule build_tail_rule(int dim, double s, double a, bool even, TailResolution res = {});

}  // namespace nlh
