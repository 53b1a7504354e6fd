// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlh/barrier.hpp"
#include "nlh/config.hpp"
#include "nlh/error.hpp"
#include "nlh/harnack.hpp"
#include "nlh/run.hpp"
#include "oracle.hpp"

using namespace nlh;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path config_dir() {
    if (const char* d = std::getenv("NLH_CONFIG_DIR")) return d;
    return NLH_SOURCE_CONFIG_DIR;
}

ExperimentConfig load(const std::string& name) {
    const auto r = parse_config(config_dir() / (name + ".json"), true);
    if (!r.config) throw Error("cannot parse " + name + ": " + (r.violations.empty() ? "" : r.violations.front()));
    return *r.config;
}

CommandResult execute(const ExperimentConfig& c) {
    StageLog log;
    return run_command(c, log);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const DomainMask> shared_mask(const Grid& g, const Shape& s) {
    return std::make_shared<const DomainMask>(build_domain(g, s));
}

// Values on every node of the box, zero beyond it.
GridFunction random_grid_function(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const int kind = static_cast<int>(rng() % 3);
    const double a = U(rng), b = 4.0 * U(rng), c = U(rng);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.node(i);
        switch (kind) {
            case 0: v[i] = U(rng); break;
            case 1: v[i] = a * std::sin(b * x.x + c) + 0.1 * U(rng); break;
            default: v[i] = std::exp(-b * b * dot(x, x)) * (a + c * x.x); break;
        }
    }
    return GridFunction(g, std::move(v), Exterior::zero());
}

KernelSpec random_kernel(int dim, FractionalOrder s, const EllipticityBounds& b, int k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    switch (k % 5) {
        case 0: return multipliers::constant(dim, s, b, b.lambda() + U(rng) * (b.Lambda() - b.lambda()));
        case 1: return multipliers::radial_step(dim, s, b, 0.05 + U(rng));
        case 2: return multipliers::angular_step(dim, s, b, 2 + static_cast<int>(rng() % 5));
        case 3: return multipliers::checkerboard(dim, s, b, 0.1 + 0.4 * U(rng));
        default: return multipliers::random_trig(dim, s, b, rng());
    }
}

// 1. Torsion on (-1, 1) against the adaptive-quadrature profile.
Outcome torsion() {
    const auto t0 = std::chrono::steady_clock::now();
    const double s = 0.5;
    const oracle::Torsion1D exact(s);
    ProblemSpec p;
    p.dim = 1;
    p.shape = WholeSpace{};
    p.op = LinearOp{KernelSpec::fractional_laplacian(1, FractionalOrder(s))};
    p.rhs = {"constant", json{{"value", -1.0}}};
    std::vector<double> sup_rel, inner;
    for (int e : {7, 8, 9}) {
        const auto prob = make_problem(p, std::ldexp(1.0, -e));
        const auto sol = solve(prob);
        if (!sol.report.converged) return {false, fmt("solver did not converge at h = 2^-%d", e)};
        const Grid& g = prob.mask->grid();
        double err = 0.0, top = 0.0, in = 0.0;
        for (std::size_t i : prob.mask->interior_nodes()) {
            const double x = g.node(i).x, d = std::fabs(sol.u[i] - exact(x));
            err = std::fmax(err, d);
            top = std::fmax(top, exact(x));
            if (std::fabs(x) <= 0.5) in = std::fmax(in, d);
        }
        sup_rel.push_back(err / top);
        inner.push_back(in);
    }
    const double o1 = std::log2(inner[0] / inner[1]), o2 = std::log2(inner[1] / inner[2]);
    const double want = 2.0 - 2.0 * s;
    const double secs = seconds_since(t0);
    const bool ok = sup_rel[2] <= 0.02 && std::fabs(o1 - want) <= 0.3 && std::fabs(o2 - want) <= 0.3 && secs <= 60.0;
    return {ok, fmt("rel sup error at 2^-9 %.4f; order on |x| <= 1/2: %.3f, %.3f (sup-norm order %.3f, %.3f); %.1fs",
                    sup_rel[2], o1, o2, std::log2(sup_rel[0] / sup_rel[1]), std::log2(sup_rel[1] / sup_rel[2]), secs)};
}

// 2. M⁻u ≤ Lu ≤ M⁺u at every interior node, no tolerance.
Outcome extremal_ordering() {
    std::mt19937_64 rng(20261015);
    const Grid g = build_grid(1, 2.0, 1.0 / 128);
    const auto mask = build_domain(g, WholeSpace{});
    long long checked = 0, bad = 0;
    for (int k = 0; k < 10; ++k) {
        const double sv = 0.1 + 0.8 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const EllipticityBounds b(0.5 + (rng() % 4) * 0.25, 2.0 + (rng() % 3));
        const KernelSpec ker = random_kernel(1, FractionalOrder(sv), b, k, rng);
        const auto t = build_quadrature(g, sv);
        for (int f = 0; f < 100; ++f) {
            const auto u = random_grid_function(g, rng);
            const auto lo = apply_on_interior(t, {OperatorKind::PucciMinus, nullptr, &b}, u, mask, Execution::Parallel);
            const auto mid = apply_on_interior(t, {OperatorKind::Linear, &ker, nullptr}, u, mask, Execution::Parallel);
            const auto hi = apply_on_interior(t, {OperatorKind::PucciPlus, nullptr, &b}, u, mask, Execution::Parallel);
            for (std::size_t i = 0; i < mid.size(); ++i) {
                ++checked;
                if (!(lo[i] <= mid[i] && mid[i] <= hi[i])) ++bad;
            }
        }
    }
    return {bad == 0, fmt("%lld node evaluations, %lld violations", checked, bad)};
}

// 3. M⁺(-u) = -M⁻u and λ = Λ collapse, both to 1e-12.
Outcome symmetry_and_collapse() {
    std::mt19937_64 rng(7);
    double sym = 0.0, col = 0.0;
    for (int dim : {1, 2}) {
        const Grid g = build_grid(dim, 2.0, dim == 1 ? 1.0 / 128 : 1.0 / 16);
        const auto mask = build_domain(g, WholeSpace{});
        for (int k = 0; k < (dim == 1 ? 40 : 6); ++k) {
            const double sv = 0.1 + 0.8 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const auto t = build_quadrature(g, sv);
            const EllipticityBounds b(1.0, 3.0);
            const double c = 0.5 + 2.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const EllipticityBounds same(c, c);
            const KernelSpec lin = multipliers::constant(dim, FractionalOrder(sv), same, c);
            const auto u = random_grid_function(g, rng);
            GridFunction neg = u;
            for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -u[i];
            const auto p_neg = apply_on_interior(t, {OperatorKind::PucciPlus, nullptr, &b}, neg, mask, Execution::Parallel);
            const auto m_u = apply_on_interior(t, {OperatorKind::PucciMinus, nullptr, &b}, u, mask, Execution::Parallel);
            const auto l_u = apply_on_interior(t, {OperatorKind::Linear, &lin, nullptr}, u, mask, Execution::Parallel);
            const auto pp = apply_on_interior(t, {OperatorKind::PucciPlus, nullptr, &same}, u, mask, Execution::Parallel);
            const auto pm = apply_on_interior(t, {OperatorKind::PucciMinus, nullptr, &same}, u, mask, Execution::Parallel);
            for (std::size_t i = 0; i < l_u.size(); ++i) {
                sym = std::fmax(sym, std::fabs(p_neg[i] + m_u[i]) / std::fmax(1.0, std::fabs(m_u[i])));
                const double scale = std::fmax(1.0, std::fabs(l_u[i]));
                col = std::fmax(col, std::fmax(std::fabs(pp[i] - l_u[i]), std::fabs(pm[i] - l_u[i])) / scale);
            }
        }
    }
    return {sym <= 1e-12 && col <= 1e-12, fmt("max symmetry defect %.2e, max collapse defect %.2e", sym, col)};
}

// 4. Ordered data gives ordered solutions.
Outcome comparison_pairs() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int holds = 0, violations = 0;
    double worst = 1e300;
    for (int t = 0; t < 50; ++t) {
        const int dim = t < 25 ? 1 : 2;
        const Grid g = build_grid(dim, 2.0, dim == 1 ? 1.0 / 32 : 1.0 / 8);
        const Shape shape = t % 3 == 0 ? Shape{WholeSpace{}} : Shape{HalfSpace{}};
        const auto mask = shared_mask(g, shape);
        const double sv = 0.2 + 0.6 * U(rng), a1 = U(rng), a2 = U(rng), c = U(rng), w = 1.0 + 3.0 * U(rng);
        const EllipticityBounds b(1.0, 2.0);
        const Operator op = [&]() -> Operator {
            switch (t % 4) {
                case 0: return LinearOp{KernelSpec::fractional_laplacian(dim, FractionalOrder(sv))};
                case 1: return LinearOp{multipliers::random_trig(dim, FractionalOrder(sv), b, rng())};
                case 2: return PucciOp{FractionalOrder(sv), b, Extremal::Plus};
                default: return PucciOp{FractionalOrder(sv), b, Extremal::Minus};
            }
        }();
        const std::function<double(Point)> g2 = [=](Point x) { return a1 * (1.0 + std::sin(w * x.x + x.y)); };
        const std::function<double(Point)> g1 = [=](Point x) { return g2(x) + a2; };
        const auto f2 = [=](Point x) { return 0.3 * std::cos(w * x.x) - 0.2 * x.y; };
        const auto f1 = [=](Point x) { return f2(x) - c; };
        auto build = [&](const std::function<double(Point)>& gd, const std::function<double(Point)>& f) {
            std::vector<double> d(g.size(), 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (mask->label(i) == NodeLabel::Data) d[i] = gd(g.node(i));
            }
            return DirichletProblem{mask, op, GridFunction::sample(g, f, Exterior::zero()),
                                    GridFunction(g, std::move(d), Exterior::formula(gd)), 0.0};
        };
        const auto r = comparison_check(build(g1, f1), build(g2, f2));
        holds += r.holds;
        violations += r.violations;
        worst = std::fmin(worst, r.min_difference);
    }
    return {holds == 50 && violations == 0,
            fmt("%d/50 pairs ordered, %d violating nodes, min u1 - u2 = %.3e", holds, violations, worst)};
}

// 5. Barrier ε search over the (η, s) table.
Outcome barrier_table() {
    const auto t0 = std::chrono::steady_clock::now();
    const EllipticityBounds b(1.0, 2.0);
    bool ok = true;
    std::ostringstream d;
    std::size_t min_samples = ~std::size_t{0};
    double worst_h = 0.0;
    for (double eta : {0.5, 1.0, 4.0}) {
        for (double s : {0.3, 0.5, 0.8}) {
            const auto r = find_barrier_epsilon(Cone{{1.0, 0.0}, eta}, 2, FractionalOrder(s), b);
            const bool cell = r.found && r.epsilon > 0.0 && r.certificate.passed &&
                              r.certificate.points.size() >= 200 && r.homogeneity_error <= 0.05;
            ok = ok && cell;
            min_samples = std::min(min_samples, r.certificate.points.size());
            worst_h = std::fmax(worst_h, r.homogeneity_error);
            d << fmt(" (%g,%g):eps=%.3f%s", eta, s, r.epsilon, cell ? "" : "!");
        }
    }
    const double secs = seconds_since(t0);
    ok = ok && secs <= 300.0;
    return {ok, fmt("min samples %zu, worst homogeneity %.4f, %.0fs;", min_samples, worst_h, secs) + d.str()};
}

// 6. Boundary Harnack constants on the canonical domains.
Outcome boundary_harnack() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::ostringstream d;
    for (const char* name : {"bhp_halfspace", "bhp_halfplane", "bhp_sawtooth", "bhp_slit"}) {
        for (double s : {0.4, 0.6}) {
            ExperimentConfig c = load(name);
            c.s = s;
            c.grid = c.dim == 1 ? std::vector<double>{1.0 / 64, 1.0 / 128, 1.0 / 256}
                                : std::vector<double>{1.0 / 32, 1.0 / 64};
            const auto r = execute(c);
            const json& h = r.result.at("harnack");
            const double C = h.at("C"), st = h.at("stability");
            const bool cell = std::isfinite(C) && st <= 0.10;
            ok = ok && cell;
            d << fmt(" %s s=%.1f C=%.3f d=%.4f%s;", name + 4, s, C, st, cell ? "" : "!");
        }
    }
    const double secs = seconds_since(t0);
    return {ok && secs <= 600.0, fmt("%.0fs;", secs) + d.str()};
}

// 7. Hölder fit on the sawtooth and the planted-exponent calibration.
Outcome holder() {
    const auto r = execute(load("holder_sawtooth"));
    const json& f = r.result.at("holder");
    const double alpha = f.at("alpha"), r2 = f.at("r_squared");
    const std::size_t scales = f.at("scales").size();
    const bool domain_ok = alpha > 0.0 && r2 >= 0.9 && scales >= 4;

    // 1 + sgn(x₁)|x|^{1/2} on the upper half-plane: oscillation 2 r^{1/2} on every ball
    const Grid g = build_grid(2, 1.0, 1.0 / 512);
    const auto mask = build_domain(g, HalfSpace{{0.0, 1.0}});
    const auto u2 = GridFunction::sample(g, [](Point) { return 1.0; }, Exterior::zero());
    const auto u1 = GridFunction::sample(
        g, [](Point x) { return 2.0 + (x.x >= 0.0 ? 1.0 : -1.0) * std::sqrt(norm(x)); }, Exterior::zero());
    HolderOptions o;
    o.base = 2.0;
    const auto cal = holder_quotient_fit(u1, u2, mask, 0.5, o);
    const bool cal_ok = std::fabs(cal.alpha - 0.5) <= 0.05;
    return {domain_ok && cal_ok, fmt("sawtooth alpha %.3f, R^2 %.4f, %zu scales; planted 0.5 recovered as %.4f over %zu scales",
                                     alpha, r2, scales, cal.alpha, cal.scales.size())};
}

// 8. Growth exponent on cones and the synthetic distance profiles.
Outcome growth() {
    bool ok = true;
    std::ostringstream d;
    for (double eta : {0.5, 2.0}) {
        for (double s : {0.3, 0.5, 0.7}) {
            ExperimentConfig c = load("growth_cone");
            c.domain["eta"] = eta;
            c.s = s;
            const auto r = execute(c);
            const double p = r.result.at("runs").back().at("p");
            const bool cell = p <= 2.0 * s + 0.1;
            ok = ok && cell;
            d << fmt(" eta=%g s=%.1f p=%.3f%s;", eta, s, p, cell ? "" : "!");
        }
    }
    const Grid g = build_grid(2, 2.0, 1.0 / 256);
    const auto mask = build_domain(g, HalfSpace{});
    double worst = 0.0;
    for (double s : {0.3, 0.5, 0.7}) {
        for (double p : {2.0 * s, s}) {
            std::vector<double> v(g.size(), 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (mask.label(i) == NodeLabel::Interior) v[i] = std::pow(mask.dist(i), p);
            }
            worst = std::fmax(worst, std::fabs(growth_exponent(GridFunction(g, v, Exterior::zero()), mask, s).p - p));
        }
    }
    ok = ok && worst <= 0.03;
    return {ok, fmt("synthetic worst |p - p0| %.2e;", worst) + d.str()};
}

// 9. Half-Harnack ratio studies.
Outcome half_harnack() {
    bool ok = true;
    std::ostringstream d;
    for (const char* name : {"half_harnack_sub", "half_harnack_sup"}) {
        const ExperimentConfig c = load(name);
        const auto r = execute(c);
        const json& res = r.result;
        bool finite = true;
        std::size_t n = 0;
        for (const auto& row : res.at("ratios")) {
            n = row.size();
            for (const auto& v : row) finite = finite && v.is_number() && std::isfinite(v.get<double>());
        }
        const double st = res.at("stability");
        const bool cell = finite && n == 20 && st <= 0.15;
        ok = ok && cell;
        d << fmt(" %s: %zu instances, max ratio %.4f, change %.4f%s;", name + 13, n,
                 res.at("max_ratio").back().get<double>(), st, cell ? "" : "!");
    }
    return {ok, d.str()};
}

// 10. Direct and rescaled solves agree at r = 1/2.
Outcome scaling() {
    bool ok = true;
    std::ostringstream d;
    ProblemSpec one;
    one.dim = 1;
    one.op = LinearOp{KernelSpec::fractional_laplacian(1, FractionalOrder(0.5))};
    one.data = {"indicator_box", json{{"lo", {1.0}}, {"hi", {2.0}}}};
    one.rhs = {"constant", json{{"value", -0.5}}};
    ProblemSpec two;
    two.dim = 2;
    two.shape = HalfSpace{{0.0, 1.0}};
    two.op = LinearOp{KernelSpec::fractional_laplacian(2, FractionalOrder(0.4))};
    two.data = {"indicator_ball", json{{"center", {0.0, 1.3}}, {"radius", 0.3}}};
    for (const auto& [spec, h] : {std::pair{one, 1.0 / 256}, std::pair{two, 1.0 / 32}}) {
        const auto r = scaling_invariance_check(spec, h, 0.5);
        ok = ok && r.agrees && r.nodes > 0;
        d << fmt(" %dD: |diff| %.2e vs tol %.2e on %zu nodes;", spec.dim, r.discrepancy, r.tolerance, r.nodes);
    }
    return {ok, d.str()};
}

// 11. The proof's w with and without the η bump.
Outcome replay() {
    const auto with = execute(load("replay_thm12")).result;
    const auto without = execute(load("replay_thm12_ablation")).result;
    const bool found = with.at("found");
    const bool ok = found && with.at("max_w_outside").get<double>() <= 0.0 &&
                    with.at("min_mplus").get<double>() >= 0.5 && !without.at("found").get<bool>();
    return {ok, fmt("C1 = %.4f, C2 = %.4f, min M+w = %.3f; ablation best min M+w = %.3f",
                    with.at("C1").get<double>(), with.at("C2").get<double>(), with.at("min_mplus").get<double>(),
                    without.at("min_mplus").get<double>())};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// 12. Every shipped config twice, report.json compared byte for byte.
Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "nlh_acceptance_determinism";
    fs::remove_all(root);
    int n = 0, same = 0;
    std::string diff;
    for (const auto& e : fs::directory_iterator(config_dir())) {
        if (e.path().extension() != ".json") continue;
        const auto parsed = parse_config(e.path(), true);
        if (!parsed.config) return {false, "cannot parse " + e.path().filename().string()};
        ++n;
        std::string reports[2];
        for (int k = 0; k < 2; ++k) {
            const fs::path out = root / (e.path().stem().string() + std::to_string(k));
            RunManifest m;
            run(*parsed.config, out, m);
            reports[k] = slurp(out / "report.json");
        }
        if (!reports[0].empty() && reports[0] == reports[1]) {
            ++same;
        } else {
            diff += " " + e.path().stem().string();
        }
    }
    fs::remove_all(root);
    return {n > 0 && same == n, fmt("%d/%d configs byte-identical", same, n) + diff};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"solver correctness (torsion)", torsion},
        {"extremal ordering", extremal_ordering},
        {"Pucci symmetry and collapse", symmetry_and_collapse},
        {"comparison principle", comparison_pairs},
        {"barrier certificate", barrier_table},
        {"boundary Harnack constant", boundary_harnack},
        {"Hölder quotient", holder},
        {"growth bound", growth},
        {"half-Harnack ratios", half_harnack},
        {"scaling invariance", scaling},
        {"proof replay", replay},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %2zu: %s  %s: %s\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
