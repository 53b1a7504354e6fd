#include "nlh/nonlocal_op.hpp"

#include <algorithm>
#include <cmath>

#include "nlh/error.hpp"

namespace nlh {

namespace {

void check_compatible(const QuadratureTable& t, const Grid& g) {
    require(t.dim() == g.dim(), "quadrature table and grid have different dimensions");
    require(std::fabs(t.spacing() - g.spacing()) <= 1e-12 * g.spacing(),
            "quadrature table and grid have different spacings");
}

// Value of u at an arbitrary point: nearest node inside the box (cells tile it), exterior beyond.
double value_at(const GridFunction& u, Point p) {
    const Grid& g = u.grid();
    const double lim = g.half_width() + 0.5 * g.spacing();
    if (std::fabs(p.x) <= lim && std::fabs(p.y) <= lim) {
        const int i = static_cast<int>(std::lround(p.x / g.spacing()));
        const int j = g.dim() == 1 ? 0 : static_cast<int>(std::lround(p.y / g.spacing()));
        if (g.in_box(i, j)) return u[g.index(i, j)];
    }
    const double v = u.exterior()(p);
    require(std::isfinite(v), "exterior data is not finite at an evaluation point");
    return v;
}

// Coefficient rules. Each returns the factor c in the term (c · δ²) · w.
struct PucciCoef {
    double lo, hi;
    bool plus;
    double operator()(double d2) const { return plus ? (d2 > 0.0 ? hi : lo) : (d2 > 0.0 ? lo : hi); }
};

template <class CoefAt>
double lattice_sum(const QuadratureTable& t, const GridFunction& u, int i, int j, double u0, CoefAt coef) {
    double sum = 0.0;
    for (const Offset& o : t.pairs()) {
        const double d2 = 0.5 * (u.at(i + o.di, j + o.dj) + u.at(i - o.di, j - o.dj)) - u0;
        sum += (coef(d2, o) * d2) * (2.0 * o.w);
    }
    return sum;
}

template <class CoefAt>
double rule_sum(const TailRule& rule, const std::function<double(Point)>& f, Point x, double u0, CoefAt coef) {
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.points.size(); ++k) {
        const Point y = rule.points[k];
        const double d2 = 0.5 * (f(x + y) + f(x - y)) - u0;
        sum += (coef(d2, y) * d2) * rule.weights[k];
    }
    return sum;
}

// Multiplier averaged over the tail region, clamped so that the Pucci ordering survives rounding.
double tail_average_multiplier(const QuadratureTable& t, const KernelSpec& k, Point x) {
    if (k.constant_multiplier()) return k.constant_value();
    const TailRule& r = t.tail_rule();
    double num = 0.0, den = 0.0;
    for (std::size_t q = 0; q < r.points.size(); ++q) {
        num += k.multiplier(x, r.points[q]) * r.weights[q];
        den += r.weights[q];
    }
    return std::clamp(num / den, k.bounds().lambda(), k.bounds().Lambda());
}

}  // namespace

double second_difference(const GridFunction& u, int i, int j, int di, int dj) {
    return 0.5 * (u.at(i + di, j + dj) + u.at(i - di, j - dj)) - u.at(i, j);
}

double eval_linear(const QuadratureTable& t, const KernelSpec& k, const GridFunction& u, std::size_t node) {
    const Grid& g = u.grid();
    check_compatible(t, g);
    require(node < g.size(), "evaluation node outside the grid");
    require(k.dim() == g.dim(), "kernel and grid have different dimensions");
    require(std::fabs(k.s() - t.s()) < 1e-15, "kernel order differs from the quadrature order");
    const auto ij = g.lattice(node);
    const Point x = g.node(node);
    const double u0 = u[node];
    const double h = g.spacing();
    double sum;
    if (k.constant_multiplier()) {
        const double a = k.constant_value();
        sum = lattice_sum(t, u, ij[0], ij[1], u0, [a](double, const Offset&) { return a; });
    } else {
        sum = lattice_sum(t, u, ij[0], ij[1], u0, [&](double, const Offset& o) {
            return k.multiplier(x, Point{o.di * h, o.dj * h});
        });
    }
    if (u.exterior().is_zero()) {
        const double a = tail_average_multiplier(t, k, x);
        return sum + (a * (-u0)) * t.tail_coefficient();
    }
    auto f = [&u](Point p) { return value_at(u, p); };
    if (k.constant_multiplier()) {
        const double a = k.constant_value();
        return sum + rule_sum(t.tail_rule(), f, x, u0, [a](double, Point) { return a; });
    }
    return sum + rule_sum(t.tail_rule(), f, x, u0, [&](double, Point y) { return k.multiplier(x, y); });
}

double eval_pucci(const QuadratureTable& t, const EllipticityBounds& b, Extremal which, const GridFunction& u,
                  std::size_t node) {
    const Grid& g = u.grid();
    check_compatible(t, g);
    require(node < g.size(), "evaluation node outside the grid");
    const auto ij = g.lattice(node);
    const Point x = g.node(node);
    const double u0 = u[node];
    const PucciCoef c{b.lambda(), b.Lambda(), which == Extremal::Plus};
    double sum = lattice_sum(t, u, ij[0], ij[1], u0, [c](double d2, const Offset&) { return c(d2); });
    if (u.exterior().is_zero()) return sum + (c(-u0) * (-u0)) * t.tail_coefficient();
    auto f = [&u](Point p) { return value_at(u, p); };
    return sum + rule_sum(t.tail_rule(), f, x, u0, [c](double d2, Point) { return c(d2); });
}

double eval_pucci_plus(const QuadratureTable& t, const EllipticityBounds& b, const GridFunction& u,
                       std::size_t node) {
    return eval_pucci(t, b, Extremal::Plus, u, node);
}

double eval_pucci_minus(const QuadratureTable& t, const EllipticityBounds& b, const GridFunction& u,
                        std::size_t node) {
    return eval_pucci(t, b, Extremal::Minus, u, node);
}

Point central_gradient(const GridFunction& u, std::size_t node) {
    const Grid& g = u.grid();
    const auto ij = g.lattice(node);
    const double h2 = 2.0 * g.spacing();
    Point grad{(u.at(ij[0] + 1, ij[1]) - u.at(ij[0] - 1, ij[1])) / h2, 0.0};
    if (g.dim() == 2) grad.y = (u.at(ij[0], ij[1] + 1) - u.at(ij[0], ij[1] - 1)) / h2;
    return grad;
}

double eval_drift_pucci(const QuadratureTable& t, const DriftSpec& d, Extremal which, const GridFunction& u,
                        std::size_t node) {
    require(d.base.s() >= 0.5, "drift operators need s >= 1/2");
    const double m = eval_pucci(t, d.base.bounds(), which, u, node);
    const double gn = norm(central_gradient(u, node));
    return which == Extremal::Plus ? m + d.beta * gn : m - d.beta * gn;
}

namespace {

template <class CoefAt>
double function_sum(const QuadratureTable& t, const std::function<double(Point)>& f, Point x, CoefAt coef) {
    const double h = t.spacing();
    const double u0 = f(x);
    double sum = 0.0;
    for (const Offset& o : t.pairs()) {
        const Point y{o.di * h, o.dj * h};
        const double d2 = 0.5 * (f(x + y) + f(x - y)) - u0;
        sum += (coef(d2, y) * d2) * (2.0 * o.w);
    }
    return sum + rule_sum(t.tail_rule(), f, x, u0, coef);
}

}  // namespace

double eval_linear_function(const QuadratureTable& t, const KernelSpec& k, const std::function<double(Point)>& f,
                            Point x) {
    return function_sum(t, f, x, [&](double, Point y) { return k.multiplier(x, y); });
}

double eval_pucci_function(const QuadratureTable& t, const EllipticityBounds& b, Extremal which,
                           const std::function<double(Point)>& f, Point x) {
    const PucciCoef c{b.lambda(), b.Lambda(), which == Extremal::Plus};
    return function_sum(t, f, x, [c](double d2, Point) { return c(d2); });
}

std::vector<double> apply_on_interior(const QuadratureTable& t, const BatchOperator& op, const GridFunction& u,
                                      const DomainMask& mask, Execution exec) {
    require(mask.grid() == u.grid(), "mask and grid function live on different grids");
    const auto nodes = mask.interior_nodes();
    std::vector<double> out(nodes.size());
    if (op.kind == OperatorKind::Linear) {
        require(op.kernel != nullptr, "linear batch operator needs a kernel");
        for_each_index(nodes.size(), exec, [&](std::size_t p) { out[p] = eval_linear(t, *op.kernel, u, nodes[p]); });
    } else {
        require(op.bounds != nullptr, "Pucci batch operator needs ellipticity bounds");
        const Extremal e = op.kind == OperatorKind::PucciPlus ? Extremal::Plus : Extremal::Minus;
        for_each_index(nodes.size(), exec, [&](std::size_t p) { out[p] = eval_pucci(t, *op.bounds, e, u, nodes[p]); });
    }
    return out;
}

}  // namespace nlh
