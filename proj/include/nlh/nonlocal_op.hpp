#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nlh/domain.hpp"
#include "nlh/grid.hpp"
#include "nlh/kernel.hpp"
#include "nlh/parallel.hpp"
#include "nlh/quadrature.hpp"

namespace nlh {

enum class Extremal { Plus, Minus };

// δ²u(x, y) = (u(x+y) + u(x-y)) / 2 - u(x) at lattice node (i, j) and offset (di, dj).
double second_difference(const GridFunction& u, int i, int j, int di, int dj);

// Pointwise discrete operators at a node of u's grid. The lattice part sums over the table, the
// remainder uses the tail coefficient (zero exterior) or the polar tail rule (formula exterior).
double eval_linear(const QuadratureTable& t, const KernelSpec& k, const GridFunction& u, std::size_t node);
double eval_pucci(const QuadratureTable& t, const EllipticityBounds& b, Extremal which,
                  const GridFunction& u, std::size_t node);
double eval_pucci_plus(const QuadratureTable& t, const EllipticityBounds& b, const GridFunction& u,
                       std::size_t node);
double eval_pucci_minus(const QuadratureTable& t, const EllipticityBounds& b, const GridFunction& u,
                        std::size_t node);
// M± u ± β |∇u| with centred differences; needs s ≥ 1/2.
double eval_drift_pucci(const QuadratureTable& t, const DriftSpec& d, Extremal which, const GridFunction& u,
                        std::size_t node);
Point central_gradient(const GridFunction& u, std::size_t node);

// Operator applied to an analytic function f on the lattice x + h·Z^n (x itself need not be a
// node). Offsets beyond the window use the tail rule.
double eval_linear_function(const QuadratureTable& t, const KernelSpec& k,
                            const std::function<double(Point)>& f, Point x);
double eval_pucci_function(const QuadratureTable& t, const EllipticityBounds& b, Extremal which,
                           const std::function<double(Point)>& f, Point x);

// Batch evaluation over the interior nodes of a mask. The serial path is the reference; the
// parallel path must agree bit for bit.
enum class OperatorKind { Linear, PucciPlus, PucciMinus };

struct BatchOperator {
    OperatorKind kind = OperatorKind::Linear;
    const KernelSpec* kernel = nullptr;       // Linear
    const EllipticityBounds* bounds = nullptr;  // Pucci
};

std::vector<double> apply_on_interior(const QuadratureTable& t, const BatchOperator& op, const GridFunction& u,
                                      const DomainMask& mask, Execution exec);

}  // namespace nlh
