#include "nlh/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "nlh/error.hpp"

namespace nlh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Nearest {
    double d;
    Point p;
};

Nearest nearest_on_segment(Point x, Point a, Point b) {
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(x - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Point p = a + t * ab;
    return {norm(x - p), p};
}

double graph_value(const LipschitzGraph& g, double t) {
    const auto& v = g.vertices;
    if (t <= v.front().x) return v.front().y;
    if (t >= v.back().x) return v.back().y;
    auto it = std::upper_bound(v.begin(), v.end(), t, [](double a, const Point& p) { return a < p.x; });
    const Point hi = *it, lo = *(it - 1);
    return lo.y + (hi.y - lo.y) * (t - lo.x) / (hi.x - lo.x);
}

// Distance from x ∈ Ω to the complement and a nearest complement point, when known in closed form.
std::optional<Nearest> analytic_nearest(const Shape& shape, Point x, int dim) {
    return std::visit(
        [&](const auto& s) -> std::optional<Nearest> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HalfSpace>) {
                const double d = dot(x, s.e);
                return Nearest{d, x - d * s.e};
            } else if constexpr (std::is_same_v<T, LipschitzGraph>) {
                Nearest best{kInf, x};
                const auto& v = s.vertices;
                const Point left{v.front().x - 1e3, v.front().y};
                const Point right{v.back().x + 1e3, v.back().y};
                auto consider = [&](Point a, Point b) {
                    const Nearest n = nearest_on_segment(x, a, b);
                    if (n.d < best.d) best = n;
                };
                consider(left, v.front());
                for (std::size_t k = 0; k + 1 < v.size(); ++k) consider(v[k], v[k + 1]);
                consider(v.back(), right);
                return best;
            } else if constexpr (std::is_same_v<T, Cone>) {
                const double r = norm(x);
                if (dim == 1) return Nearest{r, Point{0.0, 0.0}};
                const double phi_star = std::acos(cone_boundary_cosine(s.eta));
                const double c = std::clamp(dot(s.e, x) / r, -1.0, 1.0);
                const double phi = std::acos(c);
                const double gap = phi_star - phi;
                const double side = cross(s.e, x) >= 0.0 ? 1.0 : -1.0;
                // Unit vector along the boundary ray on the same side as x.
                const double cs = std::cos(phi_star), sn = side * std::sin(phi_star);
                const Point ray{s.e.x * cs - s.e.y * sn, s.e.x * sn + s.e.y * cs};
                return Nearest{r * std::sin(gap), r * std::cos(gap) * ray};
            } else if constexpr (std::is_same_v<T, Slit>) {
                return nearest_on_segment(x, s.a, s.b);
            } else if constexpr (std::is_same_v<T, Annulus>) {
                const Point rel = x - s.center;
                const double r = norm(rel);
                const Point u = r > 0.0 ? (1.0 / r) * rel : Point{1.0, 0.0};
                if (r - s.r_inner <= s.r_outer - r) return Nearest{r - s.r_inner, s.center + s.r_inner * u};
                return Nearest{s.r_outer - r, s.center + s.r_outer * u};
            } else if constexpr (std::is_same_v<T, WholeSpace>) {
                return Nearest{kInf, x};
            } else {
                return std::nullopt;
            }
        },
        shape);
}

constexpr double kFar = 1e30;

// Squared distance transform of one line (lower envelope of parabolas, Felzenszwalb–Huttenlocher).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    auto meet = [&](int q, int p) {
        return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
    };
    for (int q = 1; q < n; ++q) {
        double sp = meet(q, v[k]);
        while (sp <= z[k]) {
            --k;
            sp = meet(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = sp;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const int p = v[k];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

}  // namespace

LipschitzGraph sawtooth(double slope, double period, double extent) {
    require(slope >= 0.0 && period > 0.0 && extent > 0.0, "sawtooth needs slope >= 0, period > 0, extent > 0");
    LipschitzGraph g;
    g.lipschitz = slope;
    const int k = static_cast<int>(std::ceil(extent / (0.5 * period)));
    for (int i = -k; i <= k; ++i) {
        const double t = 0.5 * period * i;
        g.vertices.push_back({t, i % 2 == 0 ? 0.0 : slope * 0.5 * period});
    }
    return g;
}

double cone_boundary_cosine(double eta) {
    require(eta >= 0.0 && std::isfinite(eta), "cone eta must be finite and nonnegative");
    if (eta == 0.0) return 0.0;
    return (-1.0 + std::sqrt(1.0 + 4.0 * eta * eta)) / (2.0 * eta);
}

bool in_domain(const Shape& shape, Point x, int dim) {
    (void)dim;
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HalfSpace>) {
                return dot(x, s.e) > 0.0;
            } else if constexpr (std::is_same_v<T, LipschitzGraph>) {
                return x.y > graph_value(s, x.x);
            } else if constexpr (std::is_same_v<T, Cone>) {
                const double r = norm(x);
                if (r == 0.0) return false;
                const double c = dot(s.e, x) / r;
                return c > s.eta * (1.0 - c * c);
            } else if constexpr (std::is_same_v<T, Slit>) {
                return nearest_on_segment(x, s.a, s.b).d > 1e-12;
            } else if constexpr (std::is_same_v<T, Annulus>) {
                const double r = norm(x - s.center);
                return r > s.r_inner && r < s.r_outer;
            } else if constexpr (std::is_same_v<T, WholeSpace>) {
                return true;
            } else {
                return s.indicator(x);
            }
        },
        shape);
}

std::string shape_name(const Shape& shape) {
    static const char* names[] = {"half_space", "lipschitz_graph", "cone", "slit", "annulus", "whole_space"};
    if (const auto* c = std::get_if<Custom>(&shape)) return c->name;
    return names[shape.index()];
}

namespace {

Point point_from_json(const nlohmann::json& j) {
    require(j.is_array() && (j.size() == 1 || j.size() == 2), "point must be an array of 1 or 2 numbers");
    return {j[0].get<double>(), j.size() == 2 ? j[1].get<double>() : 0.0};
}

void validate_shape(const Shape& shape, int dim) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HalfSpace> || std::is_same_v<T, Cone>) {
                require(std::fabs(norm(s.e) - 1.0) < 1e-12, "shape direction e must be a unit vector");
                if (dim == 1) require(s.e.y == 0.0, "1D shape direction must lie on the axis");
            }
            if constexpr (std::is_same_v<T, Cone>) {
                require(s.eta >= 0.0 && std::isfinite(s.eta), "cone eta must be finite and nonnegative");
            }
            if constexpr (std::is_same_v<T, LipschitzGraph>) {
                require(dim == 2, "Lipschitz graph domains are two-dimensional");
                require(s.vertices.size() >= 2, "Lipschitz graph needs at least two vertices");
                for (std::size_t k = 0; k + 1 < s.vertices.size(); ++k) {
                    const double dx = s.vertices[k + 1].x - s.vertices[k].x;
                    require(dx > 0.0, "Lipschitz graph vertices must have increasing abscissae");
                    const double slope = std::fabs(s.vertices[k + 1].y - s.vertices[k].y) / dx;
                    require(slope <= s.lipschitz * (1.0 + 1e-12), "graph slope exceeds its Lipschitz constant");
                }
                require(std::fabs(graph_value(s, 0.0)) < 1e-12, "graph must pass through the origin");
            }
            if constexpr (std::is_same_v<T, Slit>) {
                require(dim == 2, "slit domains are two-dimensional");
            }
            if constexpr (std::is_same_v<T, Annulus>) {
                require(s.r_inner >= 0.0 && s.r_inner < s.r_outer, "annulus radii need 0 <= r_inner < r_outer");
            }
            if constexpr (std::is_same_v<T, Custom>) {
                require(static_cast<bool>(s.indicator), "custom domain indicator is empty");
            }
        },
        shape);
}

}  // namespace

Shape shape_from_json(const nlohmann::json& j, int dim) {
    const std::string kind = j.at("shape").get<std::string>();
    Shape out;
    if (kind == "half_space") {
        out = HalfSpace{point_from_json(j.value("e", nlohmann::json::array({1.0, 0.0})))};
    } else if (kind == "cone") {
        out = Cone{point_from_json(j.value("e", nlohmann::json::array({1.0, 0.0}))), j.at("eta").get<double>()};
    } else if (kind == "sawtooth") {
        out = sawtooth(j.at("slope").get<double>(), j.at("period").get<double>(), j.value("extent", 8.0));
    } else if (kind == "lipschitz_graph") {
        LipschitzGraph g;
        for (const auto& v : j.at("vertices")) g.vertices.push_back(point_from_json(v));
        g.lipschitz = j.at("lipschitz").get<double>();
        out = g;
    } else if (kind == "slit") {
        out = Slit{point_from_json(j.at("a")), point_from_json(j.at("b"))};
    } else if (kind == "annulus") {
        out = Annulus{point_from_json(j.value("center", nlohmann::json::array({0.0, 0.0}))),
                      j.at("r_inner").get<double>(), j.at("r_outer").get<double>()};
    } else if (kind == "whole_space") {
        out = WholeSpace{};
    } else {
        throw Error("unknown shape '" + kind + "'");
    }
    validate_shape(out, dim);
    return out;
}

nlohmann::json shape_to_json(const Shape& shape) {
    auto pt = [](Point p) { return nlohmann::json::array({p.x, p.y}); };
    return std::visit(
        [&](const auto& s) -> nlohmann::json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, HalfSpace>) {
                return {{"shape", "half_space"}, {"e", pt(s.e)}};
            } else if constexpr (std::is_same_v<T, LipschitzGraph>) {
                nlohmann::json v = nlohmann::json::array();
                for (Point p : s.vertices) v.push_back(pt(p));
                return {{"shape", "lipschitz_graph"}, {"vertices", v}, {"lipschitz", s.lipschitz}};
            } else if constexpr (std::is_same_v<T, Cone>) {
                return {{"shape", "cone"}, {"e", pt(s.e)}, {"eta", s.eta}};
            } else if constexpr (std::is_same_v<T, Slit>) {
                return {{"shape", "slit"}, {"a", pt(s.a)}, {"b", pt(s.b)}};
            } else if constexpr (std::is_same_v<T, Annulus>) {
                return {{"shape", "annulus"}, {"center", pt(s.center)}, {"r_inner", s.r_inner}, {"r_outer", s.r_outer}};
            } else if constexpr (std::is_same_v<T, WholeSpace>) {
                return {{"shape", "whole_space"}};
            } else {
                return {{"shape", "custom"}, {"name", s.name}};
            }
        },
        shape);
}

std::vector<double> lattice_distance(const Grid& grid, std::span<const std::uint8_t> seed) {
    const int side = grid.side();
    const std::size_t total = grid.size();
    std::vector<double> f(total);
    for (std::size_t i = 0; i < total; ++i) f[i] = seed[i] ? 0.0 : kFar;
    std::vector<int> v(side + 1);
    std::vector<double> z(side + 2), col(side), out(side);
    if (grid.dim() == 1) {
        edt_1d(f.data(), out.data(), side, v, z);
        f.assign(out.begin(), out.end());
    } else {
        // Columns (fixed i, varying j) are contiguous; then rows.
        for (int a = 0; a < side; ++a) {
            edt_1d(&f[static_cast<std::size_t>(a) * side], out.data(), side, v, z);
            std::copy(out.begin(), out.end(), f.begin() + static_cast<std::ptrdiff_t>(a) * side);
        }
        for (int b = 0; b < side; ++b) {
            for (int a = 0; a < side; ++a) col[a] = f[static_cast<std::size_t>(a) * side + b];
            edt_1d(col.data(), out.data(), side, v, z);
            for (int a = 0; a < side; ++a) f[static_cast<std::size_t>(a) * side + b] = out[a];
        }
    }
    const double h = grid.spacing();
    for (double& x : f) x = x < 0.5 * kFar ? h * std::sqrt(x) : kInf;
    return f;
}

DomainMask build_domain(const Grid& grid, const Shape& shape, const DomainOptions& opts) {
    const int dim = grid.dim();
    validate_shape(shape, dim);
    require(opts.ball_radius > 0.0, "ball radius must be positive");
    require(grid.half_width() >= opts.ball_radius, "grid box must contain the equation ball");
    if (!std::holds_alternative<WholeSpace>(shape) && !std::holds_alternative<Annulus>(shape) &&
        !std::holds_alternative<Custom>(shape)) {
        require(!in_domain(shape, {0.0, 0.0}, dim), "the origin must lie on the boundary of the domain");
    }

    DomainMask m(grid, shape);
    m.ball_radius_ = opts.ball_radius;
    const std::size_t n = grid.size();
    m.labels_.resize(n);
    std::vector<std::uint8_t> zero(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = grid.node(i);
        if (norm(x) >= opts.ball_radius) {
            m.labels_[i] = NodeLabel::Data;
        } else if (in_domain(shape, x, dim)) {
            m.labels_[i] = NodeLabel::Interior;
            m.interior_.push_back(i);
        } else {
            m.labels_[i] = NodeLabel::Zero;
            zero[i] = 1;
        }
    }

    const std::vector<double> lat = lattice_distance(grid, zero);
    m.dist_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (zero[i]) {
            m.dist_[i] = 0.0;
            continue;
        }
        const Point x = grid.node(i);
        double d = lat[i];
        if (in_domain(shape, x, dim)) {
            if (auto a = analytic_nearest(shape, x, dim); a && (!std::isfinite(a->d) || norm(a->p) < opts.ball_radius)) {
                d = std::fmin(a->d, lat[i]);
            }
        } else {
            // Outside Ω but beyond the ball: the lattice distance is the only meaningful one.
            d = lat[i];
        }
        m.dist_[i] = d;
    }

    std::vector<double> scales = opts.scales;
    const bool explicit_scales = !scales.empty();
    if (!explicit_scales) {
        const double min_scale = opts.min_scale > 0.0 ? opts.min_scale : 8.0 * grid.spacing();
        for (double r = 1.0; r >= min_scale * (1.0 - 1e-12); r *= 0.5) scales.push_back(r);
    }
    for (double r : scales) {
        double best = 0.0;
        std::size_t arg = 0;
        for (std::size_t i : m.interior_) {
            const Point x = grid.node(i);
            const double rx = norm(x);
            if (rx >= 0.5 * r) continue;
            const double rho = std::fmin(m.dist_[i], 0.5 * r - rx);
            if (rho > best) {
                best = rho;
                arg = i;
            }
        }
        if (best <= 0.0) {
            if (explicit_scales) throw Error("no interior ball at scale " + std::to_string(r));
            break;
        }
        const Point c = grid.node(arg);
        // Every node strictly inside B_best(c) must be interior.
        const int reach = static_cast<int>(std::ceil(best / grid.spacing()));
        const auto cij = grid.lattice(arg);
        for (int di = -reach; di <= reach; ++di) {
            for (int dj = (dim == 1 ? 0 : -reach); dj <= (dim == 1 ? 0 : reach); ++dj) {
                const int i = cij[0] + di, j = cij[1] + dj;
                if (!grid.in_box(i, j)) continue;
                if (norm(grid.point(i, j) - c) < best && m.labels_[grid.index(i, j)] != NodeLabel::Interior) {
                    throw Error("interior ball certificate failed at scale " + std::to_string(r));
                }
            }
        }
        m.balls_.push_back({r, c, best / (2.0 * r)});
    }
    return m;
}

const InteriorBall& DomainMask::ball_at(double scale) const {
    for (const auto& b : balls_) {
        if (std::fabs(b.scale - scale) <= 1e-12 * scale) return b;
    }
    throw Error("no interior ball certified at scale " + std::to_string(scale));
}

double dist_to_complement(const DomainMask& mask, std::size_t node) {
    require(node < mask.grid().size(), "node index outside the grid");
    return mask.dist(node);
}

}  // namespace nlh
