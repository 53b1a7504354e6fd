#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "nlh/error.hpp"
#include "nlh/harnack.hpp"

using namespace nlh;
using nlohmann::json;

namespace {

GridFunction constant_everywhere(const Grid& g, double c) {
    return GridFunction::sample(g, [c](Point) { return c; }, Exterior::formula([c](Point) { return c; }));
}

ProblemSpec half_line(double s) {
    ProblemSpec p;
    p.dim = 1;
    p.shape = HalfSpace{};
    p.op = LinearOp{KernelSpec::fractional_laplacian(1, FractionalOrder(s))};
    return p;
}

NamedFunction box(double lo, double hi) { return {"indicator_box", json{{"lo", {lo}}, {"hi", {hi}}}}; }

}  // namespace

TEST(NamedFunctions, BuiltIns) {
    const auto c = build_named({"constant", json{{"value", 2.0}, {"scale", 0.5}}}, 1);
    EXPECT_EQ(c.f({7.0, 0.0}), 1.0);
    EXPECT_TRUE(std::isinf(c.support_half_width));
    const auto b = build_named(box(1.0, 2.0), 1);
    EXPECT_EQ(b.f({1.5, 0.0}), 1.0);
    EXPECT_EQ(b.f({1.0, 0.0}), 0.0);
    EXPECT_EQ(b.support_half_width, 2.0);
    const auto ball = build_named({"indicator_ball", json{{"center", {1.0, 1.0}}, {"radius", 0.5}}}, 2);
    EXPECT_EQ(ball.f({1.2, 1.2}), 1.0);
    EXPECT_EQ(ball.f({0.0, 0.0}), 0.0);
    EXPECT_THROW(build_named({"nope", json::object()}, 1), Error);
    EXPECT_THROW(build_named({"constant", json::object()}, 1), Error);
    for (const auto& nf : {NamedFunction{"zero", json::object()}, box(-2.0, -1.0)}) {
        const auto back = named_from_json(named_to_json(nf));
        EXPECT_EQ(back.name, nf.name);
        EXPECT_EQ(back.params, nf.params);
    }
}

TEST(MakeProblem, DataOnlyOutsideTheBallAndZeroOnTheComplement) {
    auto p = half_line(0.5);
    p.data = {"constant", json{{"value", 1.0}}};
    p.rhs = {"constant", json{{"value", -0.25}}};
    const auto prob = make_problem(p, 1.0 / 32);
    const Grid& g = prob.mask->grid();
    for (std::size_t i = 0; i < g.size(); ++i) {
        switch (prob.mask->label(i)) {
            case NodeLabel::Interior: EXPECT_EQ(prob.rhs[i], -0.25); break;
            case NodeLabel::Zero: EXPECT_EQ(prob.data[i], 0.0); break;
            case NodeLabel::Data: EXPECT_EQ(prob.data[i], 1.0); break;
        }
    }
    EXPECT_EQ(prob.data.exterior()({10.0, 0.0}), 1.0);
}

TEST(HalfHarnack, ConstantOneOnTheLine) {
    const Grid g = build_grid(1, 2.0, 1.0 / 64);
    const auto u = constant_everywhere(g, 1.0);
    EXPECT_NEAR(check_half_harnack_sub(u, 0.5, 0.0).ratio, 1.0 / std::numbers::pi, 1e-8);
    EXPECT_NEAR(check_half_harnack_sup(u, 0.5, 0.0).ratio, std::numbers::pi, 1e-8);
}

TEST(HalfHarnack, ZeroFunctionWithUnitC0) {
    const GridFunction u(build_grid(2, 2.0, 1.0 / 8));
    EXPECT_EQ(check_half_harnack_sub(u, 0.5, 1.0).ratio, 0.0);
    EXPECT_EQ(check_half_harnack_sup(u, 0.5, 1.0).ratio, 0.0);
    EXPECT_THROW(check_half_harnack_sub(u, 0.5, 0.0), Error);
}

TEST(HalfHarnack, TorsionRatioIsRefinementStable) {
    ProblemSpec p = half_line(0.5);
    p.shape = WholeSpace{};
    p.rhs = {"constant", json{{"value", -1.0}}};
    std::vector<double> r;
    for (double h : {1.0 / 128, 1.0 / 256}) {
        const auto prob = make_problem(p, h);
        const auto sol = solve(prob);
        r.push_back(check_half_harnack_sub(sol.u, 0.5, 1.0).ratio);
        EXPECT_TRUE(std::isfinite(r.back()));
    }
    EXPECT_LE(std::fabs(r[1] - r[0]) / r[0], 0.10);
}

TEST(HalfHarnack, SupervisedSolutionWithPositiveData) {
    ProblemSpec p = half_line(0.5);
    p.shape = WholeSpace{};
    p.data = box(1.0, 2.0);
    std::vector<double> r;
    for (double h : {1.0 / 128, 1.0 / 256}) {
        const auto sol = solve(make_problem(p, h));
        r.push_back(check_half_harnack_sup(sol.u, 0.5, 1.0).ratio);
    }
    EXPECT_GT(r[0], 0.0);
    EXPECT_LE(std::fabs(r[1] - r[0]) / r[0], 0.10);
}

TEST(SupOverD, Examples) {
    const Grid g = build_grid(1, 2.0, 1.0 / 128);
    const auto mask = build_domain(g, HalfSpace{});
    EXPECT_EQ(check_lemma_supD(mask, GridFunction(g), 1.0).ratio, 0.0);

    ProblemSpec p = half_line(0.5);
    p.data = box(1.0, 2.0);
    std::vector<double> r;
    for (double h : {1.0 / 128, 1.0 / 256}) {
        const auto prob = make_problem(p, h);
        const auto sol = solve(prob);
        r.push_back(check_lemma_supD(*prob.mask, sol.u, 0.0).ratio);
        EXPECT_TRUE(std::isfinite(r.back()));
    }
    EXPECT_LE(std::fabs(r[1] - r[0]) / r[0], 0.10);

    // u concentrated on D: the ratio is at most sup/inf over D
    const auto& D = mask.ball_at(1.0);
    const auto u = sample_bump(g, {D.center, D.rho, 1.5 * D.rho});
    double sup = 0.0, inf = 1e300;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (norm(g.node(i) - D.center) < D.rho) inf = std::fmin(inf, u[i]);
        if (norm(g.node(i)) < 0.75) sup = std::fmax(sup, u[i]);
    }
    EXPECT_LE(check_lemma_supD(mask, u, 0.0).ratio, sup / inf + 1e-14);
}

TEST(Bhp, IdenticalAndProportionalInputs) {
    const Grid g = build_grid(1, 2.0, 1.0 / 64);
    const auto mask = build_domain(g, HalfSpace{});
    const auto u = GridFunction::sample(g, [](Point x) { return x.x > 0.0 ? std::sqrt(x.x) : 0.0; }, Exterior::zero());
    EXPECT_DOUBLE_EQ(bhp_constant(u, u, mask, 0.5).C, 1.0);
    GridFunction twice = u;
    for (std::size_t i = 0; i < g.size(); ++i) twice[i] *= 2.0;
    EXPECT_NEAR(bhp_constant(twice, u, mask, 0.5).C, 1.0, 1e-14);
}

TEST(Bhp, SymmetricAndScaleInvariant) {
    const Grid g = build_grid(2, 2.0, 1.0 / 16);
    const auto mask = build_domain(g, HalfSpace{{0.0, 1.0}});
    const auto u1 = GridFunction::sample(g, [](Point x) { return x.y > 0.0 ? x.y * (1.0 + 0.3 * x.x) : 0.0; }, Exterior::zero());
    const auto u2 = GridFunction::sample(g, [](Point x) { return x.y > 0.0 ? std::pow(x.y, 0.7) : 0.0; }, Exterior::zero());
    const auto a = bhp_constant(u1, u2, mask, 0.4);
    const auto b = bhp_constant(u2, u1, mask, 0.4);
    EXPECT_NEAR(a.C, b.C, 1e-12 * a.C);
    EXPECT_EQ(a.nodes_used, b.nodes_used);
    GridFunction scaled = u1;
    for (std::size_t i = 0; i < g.size(); ++i) scaled[i] *= 37.0;
    EXPECT_NEAR(bhp_constant(scaled, u2, mask, 0.4).C, a.C, 1e-12 * a.C);
    EXPECT_GE(a.C, 1.0);
}

TEST(Bhp, EmptyRegionAfterFlooring) {
    const Grid g = build_grid(1, 2.0, 1.0 / 32);
    const auto mask = build_domain(g, HalfSpace{});
    // mass from far away, nothing in the region
    const auto u = GridFunction::sample(g, [](Point x) { return std::fabs(x.x) > 1.0 ? 1.0 : 0.0; }, Exterior::zero());
    EXPECT_THROW(bhp_constant(u, u, mask, 0.5), Error);
}

TEST(Bhp, HalfLinePipelineIsRefinementStable) {
    BhpExperiment ex;
    ex.first = half_line(0.6);
    ex.second = half_line(0.6);
    ex.first.data = box(1.0, 2.0);
    ex.second.data = box(-2.0, -1.0);
    ex.ladder = {1.0 / 64, 1.0 / 128, 1.0 / 256};
    const auto r = run_bhp_experiment(ex);
    EXPECT_TRUE(std::isfinite(r.report.C));
    EXPECT_GE(r.report.C, 1.0);
    EXPECT_LE(r.report.stability, 0.10);
    EXPECT_EQ(r.report.constants.size(), 3u);
    EXPECT_EQ(r.runs.size(), 3u);
}

TEST(Bhp, RightHandSideMustRespectDelta) {
    BhpExperiment ex;
    ex.first = half_line(0.5);
    ex.second = half_line(0.5);
    ex.first.data = box(1.0, 2.0);
    ex.second.data = box(1.0, 2.0);
    ex.first.rhs = {"constant", json{{"value", 0.2}}};
    ex.ladder = {1.0 / 32};
    ex.delta = 0.1;
    EXPECT_THROW(run_bhp_experiment(ex), Error);
    ex.delta = 0.2;
    EXPECT_NO_THROW(run_bhp_experiment(ex));
    ex.ladder = {1.0 / 32, 1.0 / 16};
    EXPECT_THROW(run_bhp_experiment(ex), Error);
}

TEST(Holder, IdenticalQuotientIsExact) {
    const Grid g = build_grid(1, 2.0, 1.0 / 2048);
    const auto mask = build_domain(g, HalfSpace{});
    const auto u = GridFunction::sample(g, [](Point x) { return x.x > 0.0 ? std::sqrt(x.x) : 0.0; }, Exterior::zero());
    const auto fit = holder_quotient_fit(u, u, mask, 0.5);
    EXPECT_TRUE(fit.resolved);
    EXPECT_TRUE(fit.exact);
    EXPECT_GE(fit.scales.size(), 4u);
}

TEST(Holder, PlantedHalfExponentIsRecovered) {
    // sgn(x₁)|x|^{1/2}: both extremes of the quotient sit near |x| = r on the lattice
    const Grid g = build_grid(2, 1.0, 1.0 / 512);
    const auto mask = build_domain(g, HalfSpace{{0.0, 1.0}});
    const auto u2 = GridFunction::sample(g, [](Point) { return 1.0; }, Exterior::zero());
    const auto u1 = GridFunction::sample(
        g, [](Point x) { return 2.0 + (x.x >= 0.0 ? 1.0 : -1.0) * std::sqrt(norm(x)); }, Exterior::zero());
    HolderOptions o;
    o.base = 2.0;
    const auto fit = holder_quotient_fit(u1, u2, mask, 0.5, o);
    EXPECT_GE(fit.scales.size(), 4u);
    EXPECT_TRUE(fit.monotone);
    EXPECT_NEAR(fit.alpha, 0.5, 0.05);
    EXPECT_GE(fit.r_squared, 0.99);
}

TEST(Holder, RadialQuotientOnTheHalfLineIsBiasedUpward) {
    // 1 + |x|^{1/2}: the inf sits at the first node x = h, which steepens the slope
    const Grid g = build_grid(1, 2.0, 1.0 / 16384);
    const auto mask = build_domain(g, HalfSpace{});
    const auto u2 = GridFunction::sample(g, [](Point) { return 1.0; }, Exterior::zero());
    const auto u1 = GridFunction::sample(g, [](Point x) { return 1.0 + std::sqrt(std::fabs(x.x)); }, Exterior::zero());
    const auto fit = holder_quotient_fit(u1, u2, mask, 0.5);
    EXPECT_GE(fit.alpha, 0.5);
    EXPECT_LE(fit.alpha, 0.6);
}

TEST(Holder, TooFewScales) {
    const Grid g = build_grid(1, 2.0, 1.0 / 64);
    const auto mask = build_domain(g, HalfSpace{});
    const auto u = GridFunction::sample(g, [](Point x) { return x.x > 0.0 ? 1.0 + x.x : 0.0; }, Exterior::zero());
    EXPECT_THROW(holder_quotient_fit(u, u, mask, 0.5), Error);
}

TEST(Growth, SyntheticPowersOfTheDistance) {
    const double h = 1.0 / 256;
    const Grid g = build_grid(2, 2.0, h);
    const auto mask = build_domain(g, HalfSpace{});
    for (double s : {0.3, 0.5, 0.7}) {
        for (double p : {2.0 * s, s}) {
            std::vector<double> v(g.size(), 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (mask.label(i) == NodeLabel::Interior) v[i] = std::pow(mask.dist(i), p);
            }
            const auto fit = growth_exponent(GridFunction(g, v, Exterior::zero()), mask, s);
            EXPECT_NEAR(fit.p, p, 0.03);
            EXPECT_NEAR(fit.gamma, 2.0 * s - p, 0.03);
            EXPECT_GT(fit.r_squared, 0.999);
        }
    }
}

TEST(Growth, RayLeavingTheDomain) {
    const Grid g = build_grid(2, 2.0, 1.0 / 32);
    const auto mask = build_domain(g, HalfSpace{});
    const auto u = GridFunction::sample(g, [](Point x) { return x.x > 0.0 ? x.x : 0.0; }, Exterior::zero());
    GrowthOptions o;
    o.direction = {0.0, 1.0};
    EXPECT_THROW(growth_exponent(u, mask, 0.5, o), Error);
}

TEST(Scaling, ZeroDataGivesZeroOnBothPaths) {
    ProblemSpec p = half_line(0.5);
    const auto r = scaling_invariance_check(p, 1.0 / 64, 0.5);
    EXPECT_EQ(r.discrepancy, 0.0);
    EXPECT_EQ(r.scale, 0.0);
    EXPECT_TRUE(r.agrees);
}

TEST(Scaling, ChangeOfVariablesForTheAnalyticEvaluator) {
    const double s = 0.4, r = 0.5, h = 1.0 / 64;
    const auto k = KernelSpec::fractional_laplacian(2, FractionalOrder(s));
    const auto u = [](Point x) { return std::exp(-4.0 * (x.x * x.x + 2.0 * x.y * x.y)); };
    const auto ur = [&](Point x) { return u(r * x); };
    const QuadratureTable coarse(2, h, s, 3.0);
    const QuadratureTable fine(2, r * h, s, r * 3.0);
    for (Point x : {Point{0.0, 0.0}, Point{0.3, -0.2}, Point{1.0, 0.5}}) {
        const double lhs = eval_linear_function(coarse, k, ur, x);
        const double rhs = std::pow(r, 2.0 * s) * eval_linear_function(fine, k, u, r * x);
        EXPECT_NEAR(lhs, rhs, coarse.consistency_tolerance());
    }
}

TEST(Scaling, HalfLineProblemAgrees) {
    ProblemSpec p = half_line(0.5);
    p.data = box(1.0, 2.0);
    p.rhs = {"constant", json{{"value", -0.5}}};
    const auto r = scaling_invariance_check(p, 1.0 / 128, 0.5);
    EXPECT_GT(r.nodes, 0u);
    EXPECT_LE(r.discrepancy, r.tolerance);
    EXPECT_TRUE(r.agrees);
}

TEST(Scaling, RejectsXDependentKernels) {
    ProblemSpec p = half_line(0.5);
    p.op = LinearOp{multipliers::random_trig(1, FractionalOrder(0.5), EllipticityBounds(1, 2), 3)};
    EXPECT_THROW(scaling_invariance_check(p, 1.0 / 64, 0.5), Error);
}

TEST(Replay, ZeroSolutionCannotBeNormalized) {
    ReplaySetup rs;
    rs.problem = half_line(0.5);
    rs.problem.op = PucciOp{FractionalOrder(0.5), EllipticityBounds(1, 2), Extremal::Plus};
    rs.h = 1.0 / 128;
    EXPECT_THROW(proof_replay_thm12(rs), Error);
}

TEST(Replay, HalfLineFoundAndAblationFails) {
    ReplaySetup rs;
    rs.problem = half_line(0.5);
    rs.problem.op = PucciOp{FractionalOrder(0.5), EllipticityBounds(1, 2), Extremal::Plus};
    rs.problem.data = box(1.0, 2.0);
    rs.h = 1.0 / 128;
    const auto r = proof_replay_thm12(rs);
    ASSERT_TRUE(r.found);
    EXPECT_GT(r.C2, 0.0);
    EXPECT_GE(r.C1, r.sup_u1);
    EXPECT_LE(r.max_w_outside, 0.0);
    EXPECT_GE(r.min_mplus, 0.5);
    rs.force_c2_zero = true;
    const auto ab = proof_replay_thm12(rs);
    EXPECT_FALSE(ab.found);
    EXPECT_LT(ab.min_mplus, 0.5);
}

TEST(HalfHarnackStudy, SmallLadder) {
    for (bool sub : {true, false}) {
        HalfHarnackSetup hs;
        hs.sub = sub;
        hs.ladder = {1.0 / 32, 1.0 / 64};
        hs.instances = 3;
        const auto st = half_harnack_study(hs);
        EXPECT_TRUE(st.finite);
        EXPECT_TRUE(st.hypotheses_hold);
        ASSERT_EQ(st.ratios.size(), 2u);
        EXPECT_EQ(st.ratios[0].size(), 3u);
        // signed data in the sub case can make sup u negative; the sup case has u ≥ 0
        if (!sub) {
            for (double r : st.ratios[1]) EXPECT_GE(r, 0.0);
        }
        // same seed, same instances
        const auto again = half_harnack_study(hs);
        EXPECT_EQ(again.ratios, st.ratios);
    }
}

TEST(RatioCsv, HeaderAndRows) {
    BhpExperiment ex;
    ex.first = half_line(0.5);
    ex.second = half_line(0.5);
    ex.first.data = box(1.0, 2.0);
    ex.second.data = box(-2.0, -1.0);
    ex.ladder = {1.0 / 16};
    const auto r = run_bhp_experiment(ex);
    std::ostringstream os;
    write_ratio_csv(r.runs.back(), 0.5, os);
    const std::string csv = os.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "i,j,x,y,label,u1,u2,ratio");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.runs.back().mask->grid().size() + 1);
}
