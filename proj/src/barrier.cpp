#include "nlh/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nlh/error.hpp"
#include "nlh/gauss.hpp"

namespace nlh {

bool cone_contains(const Cone& cone, Point x) {
    const double r = norm(x);
    require(r > 0.0, "cone membership is undefined at the vertex");
    const double c = dot(cone.e, x) / r;
    return c > cone.eta * (1.0 - c * c);
}

double barrier_value(const BarrierParams& b, Point x) {
    require(b.epsilon > 0.0 && b.epsilon < 2.0 * b.order.value(), "barrier epsilon must lie in (0, 2s)");
    const double r2 = dot(x, x);
    if (r2 == 0.0) return 0.0;
    const double ex = dot(b.cone.e, x);
    const double v = ex - b.cone.eta * (r2 - ex * ex) / std::sqrt(r2);
    return v > 0.0 ? std::pow(v, b.exponent()) : 0.0;
}

BarrierEvaluator::BarrierEvaluator(const QuadratureTable& t, double rmax) : table(t), r_max(rmax) {
    const double a = t.window_radius();
    require(r_max > 2.0 * a, "barrier far-field radius must exceed twice the table window");
    const double s = t.s();
    std::vector<double> th, tw;
    if (t.dim() == 1) {
        th = {0.0};
        tw = {2.0};
    } else {
        append_composite(0.0, std::numbers::pi, 32, 8, th, tw);
        for (double& w : tw) w *= 2.0;
    }
    for (std::size_t k = 0; k < th.size(); ++k) {
        const Point dir{std::cos(th[k]), std::sin(th[k])};
        const double rho = t.dim() == 1 ? 1.0 : 1.0 / std::fmax(std::fabs(dir.x), std::fabs(dir.y));
        const double r0 = a * rho;
        const double L = std::log(r_max / r0);
        std::vector<double> taus, taw;
        append_composite(0.0, L, static_cast<int>(std::ceil(L / 0.4)), 8, taus, taw);
        for (std::size_t q = 0; q < taus.size(); ++q) {
            const double r = r0 * std::exp(taus[q]);
            mid_points.push_back(r * dir);
            // r^{-n-2s} dy = r^{-2s} dτ dθ (2D) and r^{-1-2s} dr = r^{-2s} dτ (1D)
            mid_weights.push_back(tw[k] * taw[q] * std::pow(r, -2.0 * s));
        }
        far_dirs.push_back(dir);
        far_weights.push_back(tw[k]);
    }
}

BarrierEvaluator::Value BarrierEvaluator::pucci_minus(const BarrierParams& b, const EllipticityBounds& e,
                                                      Point x) const {
    require(std::fabs(b.order.value() - table.s()) < 1e-15, "barrier order differs from the table order");
    const double lo = e.lambda(), hi = e.Lambda();
    auto coef = [lo, hi](double d2) { return d2 > 0.0 ? lo : hi; };
    const double c0 = barrier_value(b, x);
    const double h = table.spacing();
    double near = 0.0;
    for (const Offset& o : table.pairs()) {
        const Point y{o.di * h, o.dj * h};
        const double d2 = 0.5 * (barrier_value(b, x + y) + barrier_value(b, x - y)) - c0;
        near += (coef(d2) * d2) * (2.0 * o.w);
    }
    double mid = 0.0;
    for (std::size_t k = 0; k < mid_points.size(); ++k) {
        const Point y = mid_points[k];
        const double d2 = 0.5 * (barrier_value(b, x + y) + barrier_value(b, x - y)) - c0;
        mid += (coef(d2) * d2) * mid_weights[k];
    }
    const double s = table.s();
    const double p = b.exponent();
    const double eps = 2.0 * s - p;
    double far = 0.0, far_abs = 0.0;
    for (std::size_t k = 0; k < far_dirs.size(); ++k) {
        const Point d = far_dirs[k];
        const double A = 0.5 * (barrier_value(b, d) + barrier_value(b, -d));
        double pos = 0.0, neg = 0.0;
        if (A <= 0.0) {
            neg = -hi * c0 * std::pow(r_max, -2.0 * s) / (2.0 * s);
        } else {
            const double rstar = c0 > 0.0 ? std::pow(c0 / A, 1.0 / p) : 0.0;
            const double r1 = std::fmax(rstar, r_max);
            pos = lo * (A * std::pow(r1, -eps) / eps - c0 * std::pow(r1, -2.0 * s) / (2.0 * s));
            if (rstar > r_max) {
                neg = hi * (A * (std::pow(r_max, -eps) - std::pow(rstar, -eps)) / eps -
                            c0 * (std::pow(r_max, -2.0 * s) - std::pow(rstar, -2.0 * s)) / (2.0 * s));
            }
        }
        far += far_weights[k] * (pos + neg);
        far_abs += far_weights[k] * (std::fabs(pos) + std::fabs(neg));
    }
    const double shift = 2.0 * (1.0 + p) * norm(x) / r_max * far_abs;
    return {near + mid + far, shift};
}

namespace {

SubsolutionReport certify(const BarrierParams& b, const EllipticityBounds& e, const std::vector<Point>& samples,
                          const BarrierEvaluator& coarse, const BarrierEvaluator& fine) {
    require(!samples.empty(), "barrier verification needs sample points");
    SubsolutionReport rep;
    rep.epsilon = b.epsilon;
    rep.spacing = coarse.table.spacing();
    rep.points = samples;
    rep.values.resize(samples.size());
    rep.bounds.resize(samples.size());
    const double s = b.order.value();
    const double ratio = std::pow(2.0, 2.0 - 2.0 * s) - 1.0;
    for (Point x : samples) {
        require(norm(x) > 0.0 && cone_contains(b.cone, x), "barrier sample lies outside the cone");
    }
    const long long n = static_cast<long long>(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const Point x = samples[i];
        const auto vc = coarse.pucci_minus(b, e, x);
        const auto vf = fine.pucci_minus(b, e, x);
        rep.values[i] = vf.value;
        rep.bounds[i] = std::fabs(vc.value - vf.value) / ratio + vf.far_error;
    }
    rep.min_value = std::numeric_limits<double>::infinity();
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        rep.min_value = std::fmin(rep.min_value, rep.values[i]);
        rep.max_bound = std::fmax(rep.max_bound, rep.bounds[i]);
        const double margin = rep.values[i] - rep.bounds[i];
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.argmin = i;
        }
    }
    rep.passed = rep.min_margin >= 0.0;
    return rep;
}

}  // namespace

SubsolutionReport verify_subsolution(const BarrierParams& b, const EllipticityBounds& e,
                                     const std::vector<Point>& samples, const QuadratureTable& table) {
    require(b.epsilon > 0.0 && b.epsilon < 2.0 * b.order.value(), "barrier epsilon must lie in (0, 2s)");
    const QuadratureTable fine_table(table.dim(), 0.5 * table.spacing(), table.s(),
                                     table.window() * table.spacing());
    const BarrierEvaluator coarse(table), fine(fine_table);
    return certify(b, e, samples, coarse, fine);
}

std::vector<Point> barrier_samples(const Cone& cone, int dim, double h, int per_radius) {
    require(per_radius >= 3, "need at least three samples per radius");
    std::vector<Point> out;
    const double radii[] = {0.5, 0.75, 1.0, 1.5, 2.0};
    if (dim == 1) {
        const int n = 5 * per_radius;
        for (int k = 0; k < n; ++k) out.push_back((0.5 + 1.5 * k / (n - 1.0)) * cone.e);
        return out;
    }
    const double phi_star = std::acos(cone_boundary_cosine(cone.eta));
    const double alpha = std::atan2(cone.e.y, cone.e.x);
    for (double r : radii) {
        const double gap = std::asin(std::fmin(1.0, 4.0 * h / r));
        const double phi_max = phi_star - gap;
        if (phi_max < 0.0) continue;
        for (int k = 0; k < per_radius; ++k) {
            const double phi = -phi_max + 2.0 * phi_max * k / (per_radius - 1.0);
            out.push_back({r * std::cos(alpha + phi), r * std::sin(alpha + phi)});
        }
    }
    return out;
}

EpsilonSearch find_barrier_epsilon(const Cone& cone, int dim, FractionalOrder s, const EllipticityBounds& e,
                                   const EpsilonSearchOptions& opts) {
    const double two_s = 2.0 * s.value();
    const QuadratureTable coarse_t(dim, opts.spacing, s.value(), opts.window);
    const QuadratureTable fine_t(dim, 0.5 * opts.spacing, s.value(), opts.window);
    const BarrierEvaluator coarse(coarse_t), fine(fine_t);
    const std::vector<Point> samples = barrier_samples(cone, dim, opts.spacing, opts.per_radius);
    require(!samples.empty(), "cone too narrow for samples 4h away from its boundary");

    EpsilonSearch out;
    auto run = [&](double eps) {
        SubsolutionReport r = certify(BarrierParams{cone, eps, s}, e, samples, coarse, fine);
        out.trace.emplace_back(eps, r.min_margin);
        return r;
    };
    // Scan down from near 2s until a passing ε appears, then bisect towards the failing side.
    double fail = two_s;
    double pass = 0.0;
    SubsolutionReport best;
    for (int k = 1; k <= 12; ++k) {
        const double eps = two_s * std::pow(0.5, k);
        SubsolutionReport r = run(eps);
        if (r.passed) {
            pass = eps;
            best = r;
            break;
        }
        fail = eps;
    }
    if (pass == 0.0) return out;
    for (int it = 0; it < opts.bisection_steps; ++it) {
        const double mid = 0.5 * (pass + fail);
        SubsolutionReport r = run(mid);
        if (r.passed) {
            pass = mid;
            best = r;
        } else {
            fail = mid;
        }
    }
    out.found = true;
    out.epsilon = pass;
    out.certificate = best;
    const BarrierParams bp{cone, pass, s};
    // Richardson-extrapolated axis values; the raw h/2 values carry an O(h^{2-2s}) error that
    // differs between the two radii.
    const double ratio = std::pow(2.0, 2.0 - 2.0 * s.value()) - 1.0;
    // Two extra refinements are cheap for two points.
    const QuadratureTable t4(dim, 0.25 * opts.spacing, s.value(), opts.window);
    const QuadratureTable t8(dim, 0.125 * opts.spacing, s.value(), opts.window);
    const BarrierEvaluator e4(t4), e8(t8);
    auto extrapolated = [&](Point x) {
        const double vf = e8.pucci_minus(bp, e, x).value;
        const double vc = e4.pucci_minus(bp, e, x).value;
        return vf + (vf - vc) / ratio;
    };
    const double m_half = extrapolated(0.5 * cone.e);
    const double m_one = extrapolated(cone.e);
    const double predicted = std::pow(2.0, -pass) * m_half;
    out.homogeneity_error = std::fabs(m_one - predicted) / std::fmax(std::fabs(m_one), 1e-300);
    return out;
}

namespace {

void check_bump(const BumpSpec& b) {
    require(b.r_inner > 0.0 && b.r_inner < b.r_outer && std::isfinite(b.r_outer),
            "bump radii must satisfy 0 < r_inner < r_outer");
}

}  // namespace

std::function<double(Point)> smooth_bump(const BumpSpec& spec) {
    check_bump(spec);
    return [spec](Point x) {
        const double r = norm(x - spec.center);
        if (r <= spec.r_inner) return 1.0;
        if (r >= spec.r_outer) return 0.0;
        const double t = (r - spec.r_inner) / (spec.r_outer - spec.r_inner);
        return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    };
}

GridFunction sample_bump(const Grid& grid, const BumpSpec& spec) {
    auto f = smooth_bump(spec);
    const double reach = norm(spec.center) + spec.r_outer;
    // Supported inside the box unless it pokes out of the inscribed ball.
    Exterior ext = reach <= grid.half_width() ? Exterior::zero() : Exterior::formula(f, "bump");
    return GridFunction::sample(grid, f, ext);
}

GridFunction build_w(const GridFunction& u1, const BumpSpec& b, const BumpSpec& eta, double C1, double C2,
                     double chi_radius) {
    const Grid& g = u1.grid();
    require(chi_radius < g.half_width(), "the truncation ball must fit inside the box");
    auto bf = smooth_bump(b);
    auto ef = smooth_bump(eta);
    GridFunction w(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.node(i);
        const double head = norm(x) < chi_radius ? u1[i] : 0.0;
        w[i] = head + C1 * (bf(x) - 1.0) + C2 * ef(x);
    }
    w.set_exterior(Exterior::formula([bf, ef, C1, C2](Point x) { return C1 * (bf(x) - 1.0) + C2 * ef(x); }, "w"));
    return w;
}

TouchingLevel touching_level(const GridFunction& u, const GridFunction& b) {
    require(u.grid() == b.grid(), "u and b live on different grids");
    TouchingLevel out;
    bool any = false;
    for (std::size_t i = 0; i < b.grid().size(); ++i) {
        if (b[i] <= 0.0) continue;
        const double t = u[i] / b[i];
        if (!any || t < out.t) {
            out.t = t;
            out.node = i;
            any = true;
        }
    }
    require(any, "bump vanishes on every node");
    return out;
}

}  // namespace nlh
