// Serial reference against the OpenMP path for the hot loops. Run with
//   ./build/bench_kernels --benchmark_counters_tabular=true
#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "nlh/parallel.hpp"
#include "nlh/solver.hpp"

using namespace nlh;

namespace {

struct Setup {
    Grid grid;
    DomainMask mask;
    QuadratureTable table;
    GridFunction u;
    KernelSpec fl;
    KernelSpec xdep;
    EllipticityBounds bounds{1.0, 2.0};

    Setup(int dim, double h)
        : grid(build_grid(dim, 2.0, h)),
          mask(build_domain(grid, HalfSpace{})),
          table(build_quadrature(grid, 0.5)),
          u(GridFunction::sample(grid, [](Point x) { return std::sin(3.0 * x.x) * std::cos(2.0 * x.y); }, Exterior::zero())),
          fl(KernelSpec::fractional_laplacian(dim, FractionalOrder(0.5))),
          xdep(multipliers::random_trig(dim, FractionalOrder(0.5), bounds, 5)) {}
};

const Setup& setup(int dim) {
    static const Setup one(1, 1.0 / 1024);
    static const Setup two(2, 1.0 / 16);
    return dim == 1 ? one : two;
}

void apply(benchmark::State& st, int dim, OperatorKind kind, bool xdep, Execution exec) {
    const Setup& s = setup(dim);
    const BatchOperator op{kind, xdep ? &s.xdep : &s.fl, &s.bounds};
    for (auto _ : st) benchmark::DoNotOptimize(apply_on_interior(s.table, op, s.u, s.mask, exec));
    st.counters["threads"] = exec == Execution::Serial ? 1 : max_threads();
    st.counters["nodes"] = static_cast<double>(s.mask.interior_nodes().size());
}

void solve_pucci(benchmark::State& st, Execution exec) {
    const Grid g = build_grid(1, 2.0, 1.0 / 128);
    auto mask = std::make_shared<const DomainMask>(build_domain(g, HalfSpace{}));
    std::vector<double> d(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mask->label(i) == NodeLabel::Data && g.node(i).x > 1.0) d[i] = 1.0;
    }
    const DirichletProblem p{mask, PucciOp{FractionalOrder(0.5), EllipticityBounds(1, 2), Extremal::Plus},
                             GridFunction(g), GridFunction(g, d, Exterior::zero()), 0.0};
    SolveOptions o;
    o.exec = exec;
    for (auto _ : st) benchmark::DoNotOptimize(solve(p, o));
    st.counters["threads"] = exec == Execution::Serial ? 1 : max_threads();
}

}  // namespace

BENCHMARK_CAPTURE(apply, linear_1d_serial, 1, OperatorKind::Linear, false, Execution::Serial);
BENCHMARK_CAPTURE(apply, linear_1d_parallel, 1, OperatorKind::Linear, false, Execution::Parallel);
BENCHMARK_CAPTURE(apply, xdep_2d_serial, 2, OperatorKind::Linear, true, Execution::Serial);
BENCHMARK_CAPTURE(apply, xdep_2d_parallel, 2, OperatorKind::Linear, true, Execution::Parallel);
BENCHMARK_CAPTURE(apply, pucci_2d_serial, 2, OperatorKind::PucciPlus, false, Execution::Serial);
BENCHMARK_CAPTURE(apply, pucci_2d_parallel, 2, OperatorKind::PucciPlus, false, Execution::Parallel);
BENCHMARK_CAPTURE(solve_pucci, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(solve_pucci, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
