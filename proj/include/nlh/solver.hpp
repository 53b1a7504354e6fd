#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <variant>

#include <json.hpp>

#include "nlh/domain.hpp"
#include "nlh/grid.hpp"
#include "nlh/kernel.hpp"
#include "nlh/nonlocal_op.hpp"
#include "nlh/parallel.hpp"

namespace nlh {

struct LinearOp {
    KernelSpec kernel;
};

struct PucciOp {
    FractionalOrder order;
    EllipticityBounds bounds;
    Extremal which = Extremal::Plus;
};

struct DriftPucciOp {
    DriftSpec drift;
    Extremal which = Extremal::Plus;
};

using Operator = std::variant<LinearOp, PucciOp, DriftPucciOp>;

nlohmann::json operator_to_json(const Operator& op);
double operator_order(const Operator& op);
EllipticityBounds operator_bounds(const Operator& op);

// op(u) = f in Ω ∩ B_ρ (interior nodes), u = g elsewhere.
struct DirichletProblem {
    std::shared_ptr<const DomainMask> mask;
    Operator op;
    GridFunction rhs;   // f, read at interior nodes
    GridFunction data;  // g at zero/data nodes and beyond the box; must vanish on zero nodes
    double tail_radius = 0.0;  // 0 → R_box + 1
};

struct SolveOptions {
    double tol = 1e-8;
    int max_policy_rounds = 200;
    int max_damped_steps = 100000;
    int max_krylov = 20000;
    std::size_t dense_limit = 60'000'000;  // entries of the assembled matrix
    Execution exec = Execution::Parallel;
};

struct SolveReport {
    int iterations = 0;        // policy rounds, damped steps or Krylov iterations
    int krylov_iterations = 0;
    double residual = 0.0;     // max over interior nodes of |op(u) - f|
    long long policy_changes = 0;
    bool converged = false;
    std::string method;
};

struct Solution {
    GridFunction u;
    SolveReport report;
};

Solution solve(const DirichletProblem& p, const SolveOptions& opts = {});
// Explicit damped iteration u ← u + τ (op(u) - f); slow, used as an oracle and as a fallback.
Solution solve_damped(const DirichletProblem& p, const SolveOptions& opts = {});

// max |op(u) - f| over interior nodes via the pointwise evaluators (independent of the solver path).
double pointwise_residual(const DirichletProblem& p, const GridFunction& u, Execution exec = Execution::Parallel);

QuadratureTable problem_table(const DirichletProblem& p);

struct ComparisonReport {
    bool holds = false;
    double min_difference = 0.0;  // min over interior nodes of u1 - u2
    std::size_t worst_node = 0;
    int violations = 0;
    double tolerance = 0.0;
    SolveReport first;
    SolveReport second;
};

// Given f1 ≤ f2 and g1 ≥ g2, checks u1 ≥ u2 on the interior.
ComparisonReport comparison_check(const DirichletProblem& first, const DirichletProblem& second,
                                  const SolveOptions& opts = {});

}  // namespace nlh
