#pragma once

#include <cmath>

namespace nlh {

// Points live in R^2; 1D problems use the first coordinate and keep y = 0.
struct Point {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point operator-(Point a) { return {-a.x, -a.y}; }
    friend constexpr Point operator*(double c, Point a) { return {c * a.x, c * a.y}; }
    friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double norm_inf(Point a) { return std::fmax(std::fabs(a.x), std::fabs(a.y)); }

inline Point unit(Point a) {
    const double r = norm(a);
    return {a.x / r, a.y / r};
}

}  // namespace nlh
