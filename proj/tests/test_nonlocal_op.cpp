#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlh/domain.hpp"
#include "nlh/error.hpp"
#include "nlh/nonlocal_op.hpp"
#include "oracle.hpp"

using namespace nlh;

namespace {

GridFunction random_function(const Grid& g, std::mt19937_64& rng, double amp = 1.0) {
    std::uniform_real_distribution<double> U(-amp, amp);
    std::vector<double> v(g.size());
    for (double& x : v) x = U(rng);
    return GridFunction(g, std::move(v), Exterior::zero());
}

std::vector<KernelSpec> random_kernels(int dim, double s, const EllipticityBounds& b, std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<KernelSpec> out;
    for (int k = 0; k < n; ++k) {
        switch (k % 5) {
            case 0: out.push_back(multipliers::constant(dim, FractionalOrder(s), b, b.lambda() + U(rng) * (b.Lambda() - b.lambda()))); break;
            case 1: out.push_back(multipliers::radial_step(dim, FractionalOrder(s), b, 0.05 + U(rng))); break;
            case 2: out.push_back(multipliers::angular_step(dim, FractionalOrder(s), b, 1 + static_cast<int>(U(rng) * 6))); break;
            case 3: out.push_back(multipliers::checkerboard(dim, FractionalOrder(s), b, 0.05 + 0.3 * U(rng))); break;
            default: out.push_back(multipliers::random_trig(dim, FractionalOrder(s), b, rng())); break;
        }
    }
    return out;
}

}  // namespace

TEST(SecondDifference, EvenAndZeroOnAffine) {
    const Grid g = build_grid(2, 2.0, 1.0 / 8);
    const auto aff = [](Point x) { return 1.0 + 2.0 * x.x - 0.5 * x.y; };
    const auto u = GridFunction::sample(g, aff, Exterior::formula(aff));
    std::mt19937_64 rng(1);
    const auto v = random_function(g, rng);
    for (int di = -5; di <= 5; ++di) {
        for (int dj = -5; dj <= 5; ++dj) {
            EXPECT_NEAR(second_difference(u, 2, -3, di, dj), 0.0, 1e-14);
            EXPECT_EQ(second_difference(v, 2, -3, di, dj), second_difference(v, 2, -3, -di, -dj));
        }
    }
}

TEST(EvalLinear, ConstantGivesExactZero) {
    for (int dim : {1, 2}) {
        const Grid g = build_grid(dim, 2.0, dim == 1 ? 1.0 / 64 : 1.0 / 8);
        const auto one = [](Point) { return 1.0; };
        const auto u = GridFunction::sample(g, one, Exterior::formula(one));
        const auto t = build_quadrature(g, 0.5);
        const auto k = multipliers::random_trig(dim, FractionalOrder(0.5), EllipticityBounds(1, 2), 4);
        for (std::size_t i = 0; i < g.size(); i += 7) EXPECT_EQ(eval_linear(t, k, u, i), 0.0);
    }
}

TEST(EvalLinear, AffineWithFormulaExterior) {
    const Grid g = build_grid(1, 2.0, 1.0 / 64);
    const auto f = [](Point x) { return 3.0 * x.x; };
    const auto u = GridFunction::sample(g, f, Exterior::formula(f));
    const auto t = build_quadrature(g, 0.5);
    const auto k = KernelSpec::fractional_laplacian(1, FractionalOrder(0.5));
    for (int i : {-32, 0, 17, 40}) EXPECT_NEAR(eval_linear(t, k, u, g.index(i)), 0.0, 1e-9);
}

TEST(EvalLinear, SquareRootProfileIsConstantInTheBall) {
    const double s = 0.5, h = 1.0 / 512;
    const Grid g = build_grid(1, 2.0, h);
    const auto u = GridFunction::sample(g, [](Point x) { return std::fabs(x.x) < 1.0 ? std::sqrt(1.0 - x.x * x.x) : 0.0; },
                                        Exterior::zero());
    const auto t = build_quadrature(g, s);
    const auto k = KernelSpec::fractional_laplacian(1, FractionalOrder(s));
    const double at0 = eval_linear(t, k, u, g.index(0));
    const double at3 = eval_linear(t, k, u, g.index(static_cast<int>(std::lround(0.3 / h))));
    EXPECT_NEAR(at3 / at0, 1.0, 1e-2);
    const oracle::Torsion1D tor(s);
    EXPECT_NEAR(at0 / tor.c, 1.0, 2e-2);
}

TEST(EvalLinear, ConsistencyOrderAgainstQuadratureOracle) {
    // C³ bump with compact support; the analytic evaluator reads it off-grid
    const auto f1 = [](double x) { return std::fabs(x) < 1.0 ? std::pow(1.0 - x * x, 4) : 0.0; };
    const auto f = [&](Point p) { return f1(p.x); };
    for (double s : {0.3, 0.5, 0.7}) {
        const auto k = KernelSpec::fractional_laplacian(1, FractionalOrder(s));
        for (double x : {0.0, 0.35}) {
            const double want = oracle::linear_1d(f1, x, s, 1.0, 1.0, {-1.0, 1.0});
            std::vector<double> err;
            for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
                const auto t = build_quadrature(build_grid(1, 2.0, h), s);
                err.push_back(std::fabs(eval_linear_function(t, k, f, {x, 0.0}) - want));
            }
            for (std::size_t q = 1; q < err.size(); ++q) {
                // at s = 1/2 the 1D cell errors sum to exactly minus the origin-cell moment, so the
                // h^{2-2s} term cancels and the observed order is 2
                const double order = std::log2(err[q - 1] / err[q]);
                EXPECT_GE(order, 2.0 - 2.0 * s - 0.3) << "s=" << s << " x=" << x;
                if (s != 0.5) {
                    EXPECT_LE(order, 2.0 - 2.0 * s + 0.3) << "s=" << s << " x=" << x;
                }
            }
        }
    }
}

TEST(EvalPucci, MatchesOracleOnSmoothBump) {
    const auto f1 = [](double x) { return std::fabs(x) < 1.0 ? std::pow(1.0 - x * x, 4) : 0.0; };
    const auto f = [&](Point p) { return f1(p.x); };
    const double s = 0.5, h = 1.0 / 256;
    const EllipticityBounds b(1.0, 3.0);
    const auto t = build_quadrature(build_grid(1, 2.0, h), s);
    for (double x : {0.0, 0.6}) {
        // δ²f changes sign at the inflection points; the oracle splits there implicitly
        for (bool plus : {true, false}) {
            const double want = oracle::pucci_1d(f1, x, s, 1.0, 3.0, plus, 1.0, {-1.0, 1.0});
            const double got = eval_pucci_function(t, b, plus ? Extremal::Plus : Extremal::Minus, f, {x, 0.0});
            EXPECT_NEAR(got, want, 50.0 * t.consistency_tolerance()) << x << " " << plus;
        }
    }
}

TEST(EvalPucci, SignSymmetryAndCollapse) {
    std::mt19937_64 rng(21);
    for (int dim : {1, 2}) {
        const Grid g = build_grid(dim, 2.0, dim == 1 ? 1.0 / 64 : 1.0 / 8);
        const auto mask = build_domain(g, HalfSpace{});
        const auto t = build_quadrature(g, 0.6);
        const EllipticityBounds b(0.5, 2.5), same(1.7, 1.7);
        const auto k = multipliers::constant(dim, FractionalOrder(0.6), same, 1.7);
        for (int rep = 0; rep < 5; ++rep) {
            const auto u = random_function(g, rng);
            GridFunction neg = u;
            for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -u[i];
            for (std::size_t i : mask.interior_nodes()) {
                EXPECT_NEAR(eval_pucci_plus(t, b, neg, i), -eval_pucci_minus(t, b, u, i), 1e-12 * (1 + std::fabs(eval_pucci_minus(t, b, u, i))));
                const double L = eval_linear(t, k, u, i);
                EXPECT_NEAR(eval_pucci_plus(t, same, u, i), L, 1e-12 * (1 + std::fabs(L)));
                EXPECT_NEAR(eval_pucci_minus(t, same, u, i), L, 1e-12 * (1 + std::fabs(L)));
            }
        }
    }
}

TEST(EvalPucci, ConvexAtOriginSelectsLambda) {
    // |x|² clipped at the box: δ²u(0, y) = |y|² ≥ 0 on the lattice and u(0) = 0 for the tail
    const double h = 1.0 / 32, s = 0.4;
    const Grid g = build_grid(1, 2.0, h);
    const auto u = GridFunction::sample(g, [](Point x) { return x.x * x.x; }, Exterior::zero());
    const auto t = build_quadrature(g, s);
    const EllipticityBounds b(0.5, 2.0);
    const std::size_t o = g.index(0);
    double sum = 0.0;
    for (const Offset& off : t.pairs()) sum += second_difference(u, 0, 0, off.di, 0) * 2.0 * off.w;
    EXPECT_NEAR(eval_pucci_minus(t, b, u, o), 0.5 * sum, 1e-10 * sum);
    EXPECT_NEAR(eval_pucci_plus(t, b, u, o), 2.0 * sum, 1e-10 * sum);
}

TEST(EvalPucci, OrderingSubadditivityHomogeneity) {
    std::mt19937_64 rng(77);
    const double s = 0.45;
    const EllipticityBounds b(1.0, 2.0);
    for (int dim : {1, 2}) {
        const Grid g = build_grid(dim, 2.0, dim == 1 ? 1.0 / 32 : 1.0 / 8);
        const auto mask = build_domain(g, WholeSpace{});
        const auto t = build_quadrature(g, s);
        const auto kernels = random_kernels(dim, s, b, rng, 5);
        for (int rep = 0; rep < 4; ++rep) {
            const auto u = random_function(g, rng);
            const auto v = random_function(g, rng);
            GridFunction w = u, cu = u;
            for (std::size_t i = 0; i < g.size(); ++i) {
                w[i] = u[i] + v[i];
                cu[i] = 2.5 * u[i];
            }
            for (std::size_t i : mask.interior_nodes()) {
                const double mp = eval_pucci_plus(t, b, u, i), mm = eval_pucci_minus(t, b, u, i);
                for (const auto& k : kernels) {
                    const double L = eval_linear(t, k, u, i);
                    ASSERT_LE(mm, L);
                    ASSERT_LE(L, mp);
                }
                const double tol = 1e-11 * (1.0 + std::fabs(mp) + std::fabs(mm));
                EXPECT_LE(eval_pucci_plus(t, b, w, i), mp + eval_pucci_plus(t, b, v, i) + tol);
                EXPECT_GE(eval_pucci_minus(t, b, w, i), mm + eval_pucci_minus(t, b, v, i) - tol);
                EXPECT_NEAR(eval_pucci_plus(t, b, cu, i), 2.5 * mp, tol * 2.5);
                EXPECT_NEAR(eval_pucci_minus(t, b, cu, i), 2.5 * mm, tol * 2.5);
            }
        }
    }
}

TEST(EvalLinear, TranslationCovariance) {
    const double h = 1.0 / 16, s = 0.6;
    const Grid g = build_grid(2, 2.0, h);
    const auto t = build_quadrature(g, s);
    const auto k = multipliers::angular_step(2, FractionalOrder(s), EllipticityBounds(1, 2), 3);
    const auto bump = [](Point p) { return std::fmax(0.0, 0.5 - norm(p)); };
    const int mi = 5, mj = -3;
    const Point shift{mi * h, mj * h};
    const auto u = GridFunction::sample(g, bump, Exterior::zero());
    const auto us = GridFunction::sample(g, [&](Point p) { return bump(p - shift); }, Exterior::zero());
    for (int i = -6; i <= 6; i += 3) {
        for (int j = -6; j <= 6; j += 3) {
            const double a = eval_linear(t, k, u, g.index(i, j));
            const double b = eval_linear(t, k, us, g.index(i + mi, j + mj));
            EXPECT_NEAR(a, b, 1e-10 * (1.0 + std::fabs(a)));
        }
    }
}

TEST(EvalDrift, Examples) {
    const double h = 1.0 / 64, s = 0.75;
    const Grid g = build_grid(1, 2.0, h);
    const auto t = build_quadrature(g, s);
    const auto base = multipliers::constant(1, FractionalOrder(s), EllipticityBounds(1, 2), 1.5);
    const auto u = GridFunction::sample(g, [](Point x) { return std::clamp(x.x, -0.5, 0.5); }, Exterior::zero());
    const std::size_t o = g.index(0);
    const DriftSpec none{base, {0.0, 0.0}, 0.0};
    EXPECT_EQ(eval_drift_pucci(t, none, Extremal::Plus, u, o), eval_pucci_plus(t, base.bounds(), u, o));
    EXPECT_EQ(eval_drift_pucci(t, none, Extremal::Minus, u, o), eval_pucci_minus(t, base.bounds(), u, o));
    const DriftSpec one{base, {0.0, 0.0}, 1.0};
    EXPECT_NEAR(eval_drift_pucci(t, one, Extremal::Plus, u, o) - eval_pucci_plus(t, base.bounds(), u, o), 1.0, 1e-12);
    EXPECT_NEAR(eval_pucci_minus(t, base.bounds(), u, o) - eval_drift_pucci(t, one, Extremal::Minus, u, o), 1.0, 1e-12);

    const auto c = GridFunction::sample(g, [](Point) { return 2.0; }, Exterior::formula([](Point) { return 2.0; }));
    EXPECT_EQ(eval_drift_pucci(t, one, Extremal::Plus, c, o), 0.0);

    const auto low = multipliers::constant(1, FractionalOrder(0.4), EllipticityBounds(1, 2), 1.5);
    const auto tl = build_quadrature(g, 0.4);
    EXPECT_THROW(eval_drift_pucci(tl, DriftSpec{low, {0.0, 0.0}, 1.0}, Extremal::Plus, u, o), Error);
}

TEST(ApplyOnInterior, MatchesPointwiseEvaluators) {
    std::mt19937_64 rng(8);
    const Grid g = build_grid(2, 2.0, 1.0 / 8);
    const auto mask = build_domain(g, sawtooth(1.0, 0.5, 8.0));
    const auto t = build_quadrature(g, 0.5);
    const auto k = multipliers::random_trig(2, FractionalOrder(0.5), EllipticityBounds(1, 2), 3);
    const EllipticityBounds b(1, 2);
    const auto u = random_function(g, rng);
    const auto lin = apply_on_interior(t, {OperatorKind::Linear, &k, nullptr}, u, mask, Execution::Serial);
    const auto mp = apply_on_interior(t, {OperatorKind::PucciPlus, nullptr, &b}, u, mask, Execution::Serial);
    const auto nodes = mask.interior_nodes();
    ASSERT_EQ(lin.size(), nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        EXPECT_EQ(lin[q], eval_linear(t, k, u, nodes[q]));
        EXPECT_EQ(mp[q], eval_pucci_plus(t, b, u, nodes[q]));
    }
}
