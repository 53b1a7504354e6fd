#include "nlh/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "nlh/error.hpp"

namespace nlh {

nlohmann::json operator_to_json(const Operator& op) {
    return std::visit(
        [](const auto& o) -> nlohmann::json {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinearOp>) {
                return {{"type", "linear"}, {"kernel", kernel_to_json(o.kernel)}, {"s", o.kernel.s()},
                        {"lambda", o.kernel.bounds().lambda()}, {"Lambda", o.kernel.bounds().Lambda()}};
            } else if constexpr (std::is_same_v<T, PucciOp>) {
                return {{"type", o.which == Extremal::Plus ? "pucci_plus" : "pucci_minus"}, {"s", o.order.value()},
                        {"lambda", o.bounds.lambda()}, {"Lambda", o.bounds.Lambda()}};
            } else {
                return {{"type", o.which == Extremal::Plus ? "drift_pucci_plus" : "drift_pucci_minus"},
                        {"s", o.drift.base.s()}, {"beta", o.drift.beta},
                        {"lambda", o.drift.base.bounds().lambda()}, {"Lambda", o.drift.base.bounds().Lambda()}};
            }
        },
        op);
}

double operator_order(const Operator& op) {
    return std::visit(
        [](const auto& o) -> double {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinearOp>) return o.kernel.s();
            else if constexpr (std::is_same_v<T, PucciOp>) return o.order.value();
            else return o.drift.base.s();
        },
        op);
}

EllipticityBounds operator_bounds(const Operator& op) {
    return std::visit(
        [](const auto& o) -> EllipticityBounds {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinearOp>) return o.kernel.bounds();
            else if constexpr (std::is_same_v<T, PucciOp>) return o.bounds;
            else return o.drift.base.bounds();
        },
        op);
}

namespace {

struct Run {
    int fixed;
    int start;
    int len;
    std::size_t q0;
};

struct Layout {
    std::vector<std::size_t> nodes;
    std::vector<std::int64_t> unknown_of;
    std::vector<Run> runs;
};

Layout make_layout(const DomainMask& m) {
    Layout l;
    const Grid& g = m.grid();
    l.nodes.assign(m.interior_nodes().begin(), m.interior_nodes().end());
    l.unknown_of.assign(g.size(), -1);
    for (std::size_t p = 0; p < l.nodes.size(); ++p) {
        l.unknown_of[l.nodes[p]] = static_cast<std::int64_t>(p);
        const auto ij = g.lattice(l.nodes[p]);
        const int fixed = g.dim() == 1 ? 0 : ij[0];
        const int along = g.dim() == 1 ? ij[0] : ij[1];
        if (!l.runs.empty() && l.runs.back().fixed == fixed && l.runs.back().start + l.runs.back().len == along) {
            ++l.runs.back().len;
        } else {
            l.runs.push_back({fixed, along, 1, p});
        }
    }
    return l;
}

double data_value(const GridFunction& g, Point p) {
    const Grid& grid = g.grid();
    const double lim = grid.half_width() + 0.5 * grid.spacing();
    if (std::fabs(p.x) <= lim && std::fabs(p.y) <= lim) {
        const int i = static_cast<int>(std::lround(p.x / grid.spacing()));
        const int j = grid.dim() == 1 ? 0 : static_cast<int>(std::lround(p.y / grid.spacing()));
        if (grid.in_box(i, j)) return g[grid.index(i, j)];
    }
    const double v = g.exterior()(p);
    require(std::isfinite(v), "exterior data is not finite");
    return v;
}

// One out-of-line copy of the row reduction so the serial and threaded callers round alike.
[[gnu::noinline]] double row_dot(const double* a, const double* x, std::size_t n) {
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t k = 0; k < n; ++k) s += a[k] * x[k];
    return s;
}

class System {
public:
    virtual ~System() = default;
    virtual void apply(const std::vector<double>& v, std::vector<double>& out, Execution exec) const = 0;
    virtual double diag(std::size_t p) const = 0;
    virtual bool symmetric() const = 0;
    std::vector<double> b;
};

// Translation-invariant linear kernels: the matrix is a restricted convolution.
class ConvolutionSystem final : public System {
public:
    ConvolutionSystem(const Layout& l, const Grid& g, int J) : layout_(l), grid_(g), J_(J) {}

    std::vector<double> coef;  // c(y) w(y) on the full window
    double D = 0.0;

    void apply(const std::vector<double>& v, std::vector<double>& out, Execution exec) const override {
        const int side = 2 * J_ + 1;
        const bool one_d = grid_.dim() == 1;
        for_each_index(layout_.nodes.size(), exec, [&](std::size_t p) {
            const auto ij = grid_.lattice(layout_.nodes[p]);
            double acc = 0.0;
            for (const Run& r : layout_.runs) {
                const double* c = one_d ? coef.data() + (r.start - ij[0] + J_)
                                        : coef.data() + static_cast<std::size_t>(r.fixed - ij[0] + J_) * side +
                                              (r.start - ij[1] + J_);
                acc += row_dot(c, v.data() + r.q0, static_cast<std::size_t>(r.len));
            }
            out[p] = D * v[p] - acc;
        });
    }
    double diag(std::size_t) const override { return D; }
    bool symmetric() const override { return true; }

private:
    const Layout& layout_;
    const Grid& grid_;
    int J_;
};

class DenseSystem final : public System {
public:
    explicit DenseSystem(std::size_t m) : m_(m), a(m * m, 0.0), d(m, 0.0) { b.assign(m, 0.0); }

    void apply(const std::vector<double>& v, std::vector<double>& out, Execution exec) const override {
        for_each_index(m_, exec, [&](std::size_t p) {
            out[p] = row_dot(a.data() + p * m_, v.data(), m_);
        });
    }
    double diag(std::size_t p) const override { return d[p]; }
    bool symmetric() const override { return false; }

    std::size_t m_;
    std::vector<double> a;
    std::vector<double> d;
};

struct KrylovResult {
    int iterations = 0;
    double residual = 0.0;
};

double inf_norm(const std::vector<double>& r) {
    double m = 0.0;
    for (double x : r) m = std::fmax(m, std::fabs(x));
    return m;
}

void true_residual(const System& A, const std::vector<double>& x, std::vector<double>& r, Execution exec) {
    A.apply(x, r, exec);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = A.b[i] - r[i];
}

KrylovResult conjugate_gradient(const System& A, std::vector<double>& x, double tol, int max_it, Execution exec) {
    const std::size_t m = x.size();
    std::vector<double> r(m), p(m), Ap(m);
    KrylovResult res;
    for (int restart = 0; restart < 4; ++restart) {
        true_residual(A, x, r, exec);
        res.residual = inf_norm(r);
        if (res.residual <= tol) return res;
        p = r;
        double rs = deterministic_dot(r, r, exec);
        while (res.iterations < max_it) {
            A.apply(p, Ap, exec);
            const double alpha = rs / deterministic_dot(p, Ap, exec);
            for (std::size_t i = 0; i < m; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
            }
            ++res.iterations;
            if (inf_norm(r) <= 0.5 * tol) break;
            const double rs_new = deterministic_dot(r, r, exec);
            const double beta = rs_new / rs;
            rs = rs_new;
            for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
        }
        if (res.iterations >= max_it) break;
    }
    true_residual(A, x, r, exec);
    res.residual = inf_norm(r);
    return res;
}

KrylovResult bicgstab(const System& A, std::vector<double>& x, double tol, int max_it, Execution exec) {
    const std::size_t m = x.size();
    std::vector<double> r(m), r0(m), p(m, 0.0), v(m, 0.0), s(m), t(m), ph(m), sh(m), dinv(m);
    for (std::size_t i = 0; i < m; ++i) dinv[i] = 1.0 / A.diag(i);
    KrylovResult res;
    for (int restart = 0; restart < 6; ++restart) {
        true_residual(A, x, r, exec);
        res.residual = inf_norm(r);
        if (res.residual <= tol) return res;
        r0 = r;
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        bool breakdown = false;
        while (res.iterations < max_it) {
            const double rho_new = deterministic_dot(r0, r, exec);
            if (rho_new == 0.0 || omega == 0.0) {
                breakdown = true;
                break;
            }
            const double beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            for (std::size_t i = 0; i < m; ++i) ph[i] = dinv[i] * p[i];
            A.apply(ph, v, exec);
            const double den = deterministic_dot(r0, v, exec);
            if (den == 0.0) {
                breakdown = true;
                break;
            }
            alpha = rho / den;
            for (std::size_t i = 0; i < m; ++i) s[i] = r[i] - alpha * v[i];
            ++res.iterations;
            if (inf_norm(s) <= 0.5 * tol) {
                for (std::size_t i = 0; i < m; ++i) x[i] += alpha * ph[i];
                break;
            }
            for (std::size_t i = 0; i < m; ++i) sh[i] = dinv[i] * s[i];
            A.apply(sh, t, exec);
            const double tt = deterministic_dot(t, t, exec);
            omega = tt > 0.0 ? deterministic_dot(t, s, exec) / tt : 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            if (inf_norm(r) <= 0.5 * tol) break;
        }
        if (res.iterations >= max_it && !breakdown) break;
    }
    true_residual(A, x, r, exec);
    res.residual = inf_norm(r);
    return res;
}

// Everything the assembly routines need about one problem.
struct Context {
    const DirichletProblem& p;
    const DomainMask& mask;
    const Grid& grid;
    const QuadratureTable& table;
    Layout layout;
};

struct Policy {
    std::size_t words_per_row = 0;
    std::vector<std::uint64_t> bits;
};

// Coefficient of a pair for the current operator; `d2` is δ² of the policy iterate.
struct CoefRule {
    const Operator& op;
    double operator()(double d2, Point x, Point y) const {
        return std::visit(
            [&](const auto& o) -> double {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, LinearOp>) {
                    return o.kernel.multiplier(x, y);
                } else {
                    const EllipticityBounds& b = [&]() -> const EllipticityBounds& {
                        if constexpr (std::is_same_v<T, PucciOp>) return o.bounds;
                        else return o.drift.base.bounds();
                    }();
                    const bool plus = o.which == Extremal::Plus;
                    return plus ? (d2 > 0.0 ? b.Lambda() : b.lambda()) : (d2 > 0.0 ? b.lambda() : b.Lambda());
                }
            },
            op);
    }
};

double tail_multiplier_average(const Context& c, const KernelSpec& k, Point x) {
    if (k.constant_multiplier()) return k.constant_value();
    const TailRule& r = c.table.tail_rule();
    double num = 0.0, den = 0.0;
    for (std::size_t q = 0; q < r.points.size(); ++q) {
        num += k.multiplier(x, r.points[q]) * r.weights[q];
        den += r.weights[q];
    }
    return std::clamp(num / den, k.bounds().lambda(), k.bounds().Lambda());
}

// Assembles the dense system for the policy read off `upol` (ignored for linear operators).
void assemble_dense(const Context& c, const GridFunction& upol, DenseSystem& sys, Policy* policy, Execution exec) {
    const std::size_t m = c.layout.nodes.size();
    const auto& pairs = c.table.pairs();
    const double h = c.grid.spacing();
    const CoefRule rule{c.p.op};
    const bool linear = std::holds_alternative<LinearOp>(c.p.op);
    const DriftPucciOp* drift = std::get_if<DriftPucciOp>(&c.p.op);
    const GridFunction& data = c.p.data;
    const bool zero_ext = data.exterior().is_zero();
    if (policy) {
        policy->words_per_row = (pairs.size() + 63) / 64;
        policy->bits.assign(policy->words_per_row * m, 0);
    }

    for_each_index(m, exec, [&](std::size_t p) {
        const std::size_t node = c.layout.nodes[p];
        const auto ij = c.grid.lattice(node);
        const Point x = c.grid.node(node);
        const double u0 = upol[node];
        double* row = sys.a.data() + p * m;
        std::fill(row, row + m, 0.0);
        double diag = 0.0, known = 0.0;
        auto couple = [&](int i, int j, double cw) {
            if (c.grid.in_box(i, j)) {
                const std::int64_t q = c.layout.unknown_of[c.grid.index(i, j)];
                if (q >= 0) {
                    row[q] -= cw;
                    return;
                }
            }
            known += cw * data.at(i, j);
        };
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const Offset& o = pairs[k];
            const int ip = ij[0] + o.di, jp = ij[1] + o.dj, im = ij[0] - o.di, jm = ij[1] - o.dj;
            const double d2 = linear ? 0.0 : 0.5 * (upol.at(ip, jp) + upol.at(im, jm)) - u0;
            const double coef = rule(d2, x, Point{o.di * h, o.dj * h});
            if (policy && d2 > 0.0) policy->bits[p * policy->words_per_row + k / 64] |= std::uint64_t{1} << (k % 64);
            const double cw = coef * o.w;
            diag += 2.0 * cw;
            couple(ip, jp, cw);
            couple(im, jm, cw);
        }
        if (zero_ext) {
            double a;
            if (const auto* lin = std::get_if<LinearOp>(&c.p.op)) a = tail_multiplier_average(c, lin->kernel, x);
            else a = rule(-u0, x, Point{});
            diag += a * c.table.tail_coefficient();
        } else {
            const TailRule& tr = c.table.tail_rule();
            for (std::size_t k = 0; k < tr.points.size(); ++k) {
                const Point y = tr.points[k];
                const double G = 0.5 * (data_value(data, x + y) + data_value(data, x - y));
                const double coef = rule(G - u0, x, y);
                diag += coef * tr.weights[k];
                known += coef * tr.weights[k] * G;
            }
        }
        if (drift) {
            const Point grad = central_gradient(upol, node);
            const double gn = norm(grad);
            Point bvec{0.0, 0.0};
            if (gn > 0.0) {
                const double sgn = drift->which == Extremal::Plus ? 1.0 : -1.0;
                bvec = (sgn * drift->drift.beta / gn) * grad;
            }
            couple(ij[0] + 1, ij[1], bvec.x / (2.0 * h));
            couple(ij[0] - 1, ij[1], -bvec.x / (2.0 * h));
            if (c.grid.dim() == 2) {
                couple(ij[0], ij[1] + 1, bvec.y / (2.0 * h));
                couple(ij[0], ij[1] - 1, -bvec.y / (2.0 * h));
            }
        }
        row[p] += diag;
        sys.d[p] = row[p];
        sys.b[p] = known - c.p.rhs[node];
    });
}

void assemble_convolution(const Context& c, ConvolutionSystem& sys, Execution exec) {
    const auto& lin = std::get<LinearOp>(c.p.op);
    const KernelSpec& k = lin.kernel;
    const QuadratureTable& t = c.table;
    const int J = t.window();
    const double h = c.grid.spacing();
    const std::vector<double>& w = t.dense();
    sys.coef.resize(w.size());
    const int side = 2 * J + 1;
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
        const int di = c.grid.dim() == 1 ? static_cast<int>(idx) - J : static_cast<int>(idx / side) - J;
        const int dj = c.grid.dim() == 1 ? 0 : static_cast<int>(idx % side) - J;
        sys.coef[idx] = (di == 0 && dj == 0) ? 0.0 : k.multiplier(Point{}, Point{di * h, dj * h}) * w[idx];
    }
    double lattice = 0.0;
    for (const Offset& o : t.pairs()) {
        lattice += 2.0 * (k.multiplier(Point{}, Point{o.di * h, o.dj * h}) * o.w);
    }
    const GridFunction& data = c.p.data;
    const bool zero_ext = data.exterior().is_zero();
    const TailRule& tr = t.tail_rule();
    double tail = 0.0;
    if (zero_ext) {
        tail = tail_multiplier_average(c, k, Point{}) * t.tail_coefficient();
    } else {
        for (std::size_t q = 0; q < tr.points.size(); ++q) tail += k.multiplier(Point{}, tr.points[q]) * tr.weights[q];
    }
    sys.D = lattice + tail;

    // Known values that interior rows can see: non-interior box nodes, then lattice points
    // beyond the box inside the window reach.
    struct Source {
        int i, j;
        double g;
    };
    std::vector<Source> sources;
    const Grid& g = c.grid;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (c.layout.unknown_of[n] >= 0) continue;
        const double v = data[n];
        if (v == 0.0) continue;
        const auto ij = g.lattice(n);
        sources.push_back({ij[0], ij[1], v});
    }
    if (!zero_ext) {
        const int reach = static_cast<int>(std::ceil(c.mask.ball_radius() / h)) + J;
        const int jlo = g.dim() == 1 ? 0 : -reach, jhi = g.dim() == 1 ? 0 : reach;
        for (int i = -reach; i <= reach; ++i) {
            for (int j = jlo; j <= jhi; ++j) {
                if (g.in_box(i, j)) continue;
                const double v = data.exterior()(g.point(i, j));
                require(std::isfinite(v), "exterior data is not finite");
                if (v != 0.0) sources.push_back({i, j, v});
            }
        }
    }

    const std::size_t m = c.layout.nodes.size();
    sys.b.assign(m, 0.0);
    for_each_index(m, exec, [&](std::size_t p) {
        const std::size_t node = c.layout.nodes[p];
        const auto ij = g.lattice(node);
        const Point x = g.node(node);
        double known = 0.0;
        for (const Source& s : sources) {
            const int di = s.i - ij[0], dj = s.j - ij[1];
            if (std::abs(di) > J || std::abs(dj) > J) continue;
            const std::size_t idx = g.dim() == 1 ? static_cast<std::size_t>(di + J)
                                                 : static_cast<std::size_t>(di + J) * side + (dj + J);
            known += sys.coef[idx] * s.g;
        }
        if (!zero_ext) {
            for (std::size_t q = 0; q < tr.points.size(); ++q) {
                const Point y = tr.points[q];
                const double G = 0.5 * (data_value(data, x + y) + data_value(data, x - y));
                known += k.multiplier(Point{}, y) * tr.weights[q] * G;
            }
        }
        sys.b[p] = known - c.p.rhs[node];
    });
}

GridFunction assemble_solution(const Context& c, const std::vector<double>& x) {
    GridFunction u(c.grid, std::vector<double>(c.p.data.values().begin(), c.p.data.values().end()),
                   c.p.data.exterior());
    for (std::size_t p = 0; p < c.layout.nodes.size(); ++p) u[c.layout.nodes[p]] = x[p];
    return u;
}

std::vector<double> unknowns_of(const Context& c, const GridFunction& u) {
    std::vector<double> x(c.layout.nodes.size());
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = u[c.layout.nodes[p]];
    return x;
}

void validate(const DirichletProblem& p) {
    require(p.mask != nullptr, "problem has no domain mask");
    const Grid& g = p.mask->grid();
    require(p.rhs.grid() == g, "rhs lives on a different grid than the mask");
    require(p.data.grid() == g, "data lives on a different grid than the mask");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (p.mask->label(i) == NodeLabel::Zero && p.data[i] != 0.0) {
            throw Error("data must vanish on zero-labelled nodes (node " + std::to_string(i) + ")");
        }
        if (p.mask->label(i) == NodeLabel::Interior) {
            require(std::isfinite(p.rhs[i]), "rhs is not finite at an interior node");
        } else {
            require(std::isfinite(p.data[i]), "data is not finite at a node");
        }
    }
    if (const auto* lin = std::get_if<LinearOp>(&p.op)) {
        require(lin->kernel.dim() == g.dim(), "kernel dimension differs from the grid dimension");
    }
    if (const auto* d = std::get_if<DriftPucciOp>(&p.op)) {
        const DriftReport r = validate_drift(d->drift);
        if (!r.valid) {
            std::string msg = "invalid drift operator:";
            for (const auto& s : r.reasons) msg += " " + s + ";";
            throw Error(msg);
        }
    }
    require(!p.mask->interior_nodes().empty(), "problem has no interior nodes");
}

Solution solve_linear_ti(const Context& c, const SolveOptions& opts) {
    ConvolutionSystem sys(c.layout, c.grid, c.table.window());
    assemble_convolution(c, sys, opts.exec);
    std::vector<double> x(c.layout.nodes.size(), 0.0);
    const KrylovResult kr = conjugate_gradient(sys, x, opts.tol, opts.max_krylov, opts.exec);
    Solution sol{assemble_solution(c, x), {}};
    sol.report.iterations = kr.iterations;
    sol.report.krylov_iterations = kr.iterations;
    sol.report.residual = kr.residual;
    sol.report.converged = kr.residual <= opts.tol;
    sol.report.method = "cg-convolution";
    return sol;
}

void check_dense_size(std::size_t m, const SolveOptions& opts) {
    require(m * m <= opts.dense_limit,
            "problem has " + std::to_string(m) + " unknowns; the assembled matrix exceeds the dense limit");
}

Solution solve_linear_dense(const Context& c, const SolveOptions& opts) {
    const std::size_t m = c.layout.nodes.size();
    check_dense_size(m, opts);
    DenseSystem sys(m);
    assemble_dense(c, c.p.data, sys, nullptr, opts.exec);
    std::vector<double> x(m, 0.0);
    const KrylovResult kr = bicgstab(sys, x, opts.tol, opts.max_krylov, opts.exec);
    Solution sol{assemble_solution(c, x), {}};
    sol.report.iterations = kr.iterations;
    sol.report.krylov_iterations = kr.iterations;
    sol.report.residual = kr.residual;
    sol.report.converged = kr.residual <= opts.tol;
    sol.report.method = "bicgstab-dense";
    return sol;
}

long long count_flips(const Policy& a, const Policy& b) {
    if (a.bits.size() != b.bits.size()) return 0;
    long long n = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) n += std::popcount(a.bits[i] ^ b.bits[i]);
    return n;
}

Solution damped_iteration(const Context& c, GridFunction u, const SolveOptions& opts, SolveReport report);

Solution solve_policy(const Context& c, const SolveOptions& opts) {
    const std::size_t m = c.layout.nodes.size();
    check_dense_size(m, opts);
    DenseSystem sys(m);
    GridFunction u = assemble_solution(c, std::vector<double>(m, 0.0));
    Policy prev, cur;
    SolveReport rep;
    rep.method = "policy-iteration";
    double best = std::numeric_limits<double>::infinity();
    GridFunction best_u = u;
    int stall = 0;
    std::vector<double> r(m);
    for (int round = 0; round < opts.max_policy_rounds; ++round) {
        assemble_dense(c, u, sys, &cur, opts.exec);
        std::vector<double> x = unknowns_of(c, u);
        true_residual(sys, x, r, opts.exec);
        const double res = inf_norm(r);
        if (round > 0) rep.policy_changes += count_flips(prev, cur);
        if (res < best * (1.0 - 1e-3)) {
            stall = 0;
        } else {
            ++stall;
        }
        if (res < best) {
            best = res;
            best_u = u;
        }
        rep.iterations = round;
        rep.residual = res;
        if (res <= opts.tol) {
            rep.converged = true;
            return {u, rep};
        }
        if (stall >= 5) break;
        std::swap(prev, cur);
        const KrylovResult kr = bicgstab(sys, x, 0.1 * opts.tol, opts.max_krylov, opts.exec);
        rep.krylov_iterations += kr.iterations;
        u = assemble_solution(c, x);
    }
    // Policy iteration stalled or ran out of rounds: finish with the damped iteration.
    rep.method = "policy-iteration+damped";
    rep.residual = best;
    return damped_iteration(c, best_u, opts, rep);
}

double op_value(const Context& c, const QuadratureTable& t, const GridFunction& u, std::size_t node) {
    return std::visit(
        [&](const auto& o) -> double {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, LinearOp>) return eval_linear(t, o.kernel, u, node);
            else if constexpr (std::is_same_v<T, PucciOp>) return eval_pucci(t, o.bounds, o.which, u, node);
            else return eval_drift_pucci(t, o.drift, o.which, u, node);
        },
        c.p.op);
}

Solution damped_iteration(const Context& c, GridFunction u, const SolveOptions& opts, SolveReport report) {
    const std::size_t m = c.layout.nodes.size();
    const EllipticityBounds b = operator_bounds(c.p.op);
    double beta = 0.0;
    if (const auto* d = std::get_if<DriftPucciOp>(&c.p.op)) beta = d->drift.beta;
    const double tau =
        1.0 / (2.0 * (b.Lambda() * (c.table.lattice_total() + c.table.tail_coefficient()) + beta / c.grid.spacing()));
    std::vector<double> upd(m);
    int step = 0;
    double res = std::numeric_limits<double>::infinity();
    for (; step <= opts.max_damped_steps; ++step) {
        double r = 0.0;
        for_each_index(m, opts.exec, [&](std::size_t p) {
            const std::size_t node = c.layout.nodes[p];
            upd[p] = op_value(c, c.table, u, node) - c.p.rhs[node];
        });
        for (double v : upd) r = std::fmax(r, std::fabs(v));
        res = r;
        if (res <= opts.tol || step == opts.max_damped_steps) break;
        for (std::size_t p = 0; p < m; ++p) u[c.layout.nodes[p]] += tau * upd[p];
    }
    report.iterations += step;
    report.residual = res;
    report.converged = res <= opts.tol;
    if (report.method.empty()) report.method = "damped";
    return {u, report};
}

}  // namespace

QuadratureTable problem_table(const DirichletProblem& p) {
    const Grid& g = p.mask->grid();
    const double tr = p.tail_radius > 0.0 ? p.tail_radius : g.half_width() + 1.0;
    QuadratureTable t = build_quadrature(g, operator_order(p.op), tr);
    require(t.window() * g.spacing() >= 2.0 * p.mask->ball_radius(),
            "quadrature window must cover the diameter of the equation ball");
    return t;
}

Solution solve(const DirichletProblem& p, const SolveOptions& opts) {
    validate(p);
    const QuadratureTable table = problem_table(p);
    const Context c{p, *p.mask, p.mask->grid(), table, make_layout(*p.mask)};
    if (const auto* lin = std::get_if<LinearOp>(&p.op)) {
        require(std::fabs(lin->kernel.s() - table.s()) < 1e-15, "kernel order mismatch");
        if (lin->kernel.translation_invariant()) return solve_linear_ti(c, opts);
        return solve_linear_dense(c, opts);
    }
    return solve_policy(c, opts);
}

Solution solve_damped(const DirichletProblem& p, const SolveOptions& opts) {
    validate(p);
    const QuadratureTable table = problem_table(p);
    const Context c{p, *p.mask, p.mask->grid(), table, make_layout(*p.mask)};
    GridFunction u = assemble_solution(c, std::vector<double>(c.layout.nodes.size(), 0.0));
    return damped_iteration(c, u, opts, SolveReport{});
}

double pointwise_residual(const DirichletProblem& p, const GridFunction& u, Execution exec) {
    validate(p);
    const QuadratureTable table = problem_table(p);
    const Context c{p, *p.mask, p.mask->grid(), table, make_layout(*p.mask)};
    const std::size_t m = c.layout.nodes.size();
    std::vector<double> r(m);
    for_each_index(m, exec, [&](std::size_t q) {
        const std::size_t node = c.layout.nodes[q];
        r[q] = std::fabs(op_value(c, table, u, node) - p.rhs[node]);
    });
    return inf_norm(r);
}

ComparisonReport comparison_check(const DirichletProblem& first, const DirichletProblem& second,
                                  const SolveOptions& opts) {
    validate(first);
    validate(second);
    const DomainMask& m = *first.mask;
    require(m.grid() == second.mask->grid(), "comparison problems must share the grid");
    for (std::size_t i = 0; i < m.grid().size(); ++i) {
        require(m.label(i) == second.mask->label(i), "comparison problems must share the domain mask");
    }
    require(operator_to_json(first.op) == operator_to_json(second.op), "comparison problems must share the operator");
    for (std::size_t i = 0; i < m.grid().size(); ++i) {
        if (m.label(i) == NodeLabel::Interior) {
            if (first.rhs[i] > second.rhs[i]) {
                throw Error("comparison hypothesis f1 <= f2 fails at node " + std::to_string(i));
            }
        } else if (first.data[i] < second.data[i]) {
            throw Error("comparison hypothesis g1 >= g2 fails at node " + std::to_string(i));
        }
    }
    // Exterior formulas: probe a ring of points beyond the box.
    const double R = m.grid().half_width();
    for (int k = 0; k < 64; ++k) {
        for (double rad : {1.5 * R, 3.0 * R, 10.0 * R}) {
            const double th = 2.0 * std::numbers::pi * k / 64.0;
            const Point x = m.grid().dim() == 1 ? Point{k % 2 ? rad : -rad, 0.0} : Point{rad * std::cos(th), rad * std::sin(th)};
            if (first.data.exterior()(x) < second.data.exterior()(x)) {
                throw Error("comparison hypothesis g1 >= g2 fails beyond the box");
            }
        }
    }
    ComparisonReport rep;
    const Solution a = solve(first, opts);
    const Solution b = solve(second, opts);
    rep.first = a.report;
    rep.second = b.report;
    rep.tolerance = 1e3 * opts.tol;
    rep.min_difference = std::numeric_limits<double>::infinity();
    for (std::size_t i : m.interior_nodes()) {
        const double d = a.u[i] - b.u[i];
        if (d < rep.min_difference) {
            rep.min_difference = d;
            rep.worst_node = i;
        }
        if (d < -rep.tolerance) ++rep.violations;
    }
    rep.holds = rep.violations == 0;
    return rep;
}

}  // namespace nlh
