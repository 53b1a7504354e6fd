#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlh/barrier.hpp"
#include "nlh/domain.hpp"
#include "nlh/grid.hpp"
#include "nlh/solver.hpp"

namespace nlh {

// A built-in function referenced by name from a config: exterior data, right-hand sides.
//   zero; constant{value}; indicator_box{lo, hi}; indicator_ball{center, radius};
//   bump{center, r_inner, r_outer}. Every entry also accepts "scale" (default 1).
struct NamedFunction {
    std::string name = "zero";
    nlohmann::json params = nlohmann::json::object();
};

struct BuiltFunction {
    std::function<double(Point)> f;
    double support_half_width = 0.0;  // max |x_i| over the support; +inf if unbounded
    double sup_abs = 0.0;
};

BuiltFunction build_named(const NamedFunction& nf, int dim);
NamedFunction named_from_json(const nlohmann::json& j);
nlohmann::json named_to_json(const NamedFunction& nf);
bool is_builtin_function(const std::string& name);

struct ProblemSpec {
    int dim = 1;
    double box = 2.0;
    Shape shape = HalfSpace{};
    Operator op = LinearOp{KernelSpec::fractional_laplacian(1, FractionalOrder(0.5))};
    NamedFunction data;
    NamedFunction rhs;
    DomainOptions domain;
    double tail_radius = 0.0;
};

// Grid, mask and data for one spacing. The data is forced to 0 on B_ρ \ Ω and is exact beyond
// the box (a formula exterior unless its support fits in the box).
DirichletProblem make_problem(const ProblemSpec& spec, double h);

struct RatioResult {
    double ratio = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
};

// sup_{B_{1/2}} u / (∫ |u| / (1 + |x|^{n+2s}) + C0)
RatioResult check_half_harnack_sub(const GridFunction& u, double s, double C0);
// ∫ u / (1 + |x|^{n+2s}) / (inf_{B_{1/2}} u + C0)
RatioResult check_half_harnack_sup(const GridFunction& u, double s, double C0);
// sup_{B_{3/4}} u / (inf_D u + C0) with D = B_ϱ(x₀) the mask's interior ball at scale 1.
RatioResult check_lemma_supD(const DomainMask& mask, const GridFunction& u, double C0);

// Extremes of M⁺u and M⁻u over the mask's interior nodes, for checking the hypotheses above.
double min_pucci_plus(const QuadratureTable& t, const EllipticityBounds& b, const GridFunction& u,
                      const DomainMask& mask);
double max_pucci_minus(const QuadratureTable& t, const EllipticityBounds& b, const GridFunction& u,
                       const DomainMask& mask);

struct HarnackReport {
    double C = 1.0;
    double sup_ratio = 1.0;  // sup u1/u2
    double inf_ratio = 1.0;  // inf u1/u2
    std::vector<double> spacings;
    std::vector<double> constants;  // C per spacing
    double stability = 0.0;         // |C_fine - C_coarse| / C_coarse over the two finest spacings
    double delta_used = 0.0;
    double C0_used = 0.0;
    std::size_t nodes_used = 0;
    std::size_t nodes_floored = 0;
    double floor = 0.0;
};

struct BhpOptions {
    double region_radius = 0.5;
    double floor_factor = 0.1;  // floor = floor_factor · h^{2s}
};

// max(sup u1/u2, sup u2/u1) over Ω ∩ B_{1/2} after normalizing both to unit weighted mass.
// Nodes where either value is at or below the floor are excluded and counted.
HarnackReport bhp_constant(const GridFunction& u1, const GridFunction& u2, const DomainMask& mask, double s,
                           const BhpOptions& opts = {});

struct HolderFit {
    bool resolved = false;     // at least four scales
    bool exact = false;        // every oscillation is 0: the quotient is constant
    double alpha = 0.0;
    double intercept = 0.0;    // log osc = intercept + alpha log r
    double r_squared = 0.0;
    double base = 4.0;
    std::vector<double> scales;
    std::vector<double> osc;
    std::vector<double> m;     // inf of the quotient per scale
    std::vector<double> mbar;  // sup of the quotient per scale
    bool monotone = true;      // osc_{k+1} ≤ osc_k + tolerance
};

struct HolderOptions {
    double base = 4.0;
    double min_scale_factor = 8.0;  // r_k ≥ factor · h
    double floor_factor = 0.1;
    double monotone_tolerance = 1e-9;
};

// Oscillation of u1/u2 over Ω ∩ B_{r_k}, r_k = base^{-k}, k ≥ 1, and the log-log slope.
HolderFit holder_quotient_fit(const GridFunction& u1, const GridFunction& u2, const DomainMask& mask, double s,
                              const HolderOptions& opts = {});

struct GrowthFit {
    double p = 0.0;
    double gamma = 0.0;
    double c0 = 0.0;
    double r_squared = 0.0;
    double normalizer = 1.0;  // inf over D_1 used to scale u
    std::vector<double> d;
    std::vector<double> u;
};

struct GrowthOptions {
    Point direction{1.0, 0.0};
    double d_min_factor = 4.0;  // d ≥ factor · h
    double r_max = 0.5;         // ray from the origin up to this radius
};

// Fits log u ≈ log c0 + p log d along the ray t · direction, u normalized so inf_{D_1} u = 1.
GrowthFit growth_exponent(const GridFunction& u, const DomainMask& mask, double s, const GrowthOptions& opts = {});

struct ScalingReport {
    double r = 0.5;
    double discrepancy = 0.0;  // max over shared nodes of |u_direct - v_substituted|
    double scale = 0.0;        // max |u_direct|
    double tolerance = 0.0;    // consistency tolerance of the direct table
    std::size_t nodes = 0;
    bool agrees = false;
};

// Solves the problem posed on Ω ∩ B_r directly at spacing h, and as v(x) = u(rx) on (Ω/r) ∩ B_1 at
// spacing h/r with rhs r^{2s} f(r·) and data g(r·), then compares on the shared lattice.
ScalingReport scaling_invariance_check(const ProblemSpec& spec, double h, double r, const SolveOptions& opts = {});

struct ReplaySetup {
    ProblemSpec problem;       // u1's problem; the operator's bounds define M⁺
    double h = 1.0 / 256.0;
    double threshold = 0.5;    // required lower bound of M⁺w on the annular region
    bool force_c2_zero = false;
    std::vector<double> c1_factors = {1.0, 1.25, 1.5, 2.0, 3.0, 4.0};
    double c2_min = 1.0 / 64.0;
    double c2_max = 1.0e5;
};

struct ReplayReport {
    bool found = false;
    double C1 = 0.0;
    double C2 = 0.0;
    double sup_u1 = 0.0;          // sup over B_{3/4}
    double min_mplus = 0.0;       // min of M⁺w over the region for the reported constants
    double max_w_outside = 0.0;   // max of w outside B_{1/2}
    std::size_t region_nodes = 0;
    std::size_t worst_node = 0;
    Point x0;
    double rho = 0.0;
    int trials = 0;
    SolveReport solve;
};

// Builds w = u1 χ_{B_{3/4}} + C1 (b - 1) + C2 η and searches (C1, C2) such that w ≤ 0 outside B_{1/2}
// and M⁺w ≥ threshold on Ω ∩ B_{1/2} \ B_ϱ(x₀).
ReplayReport proof_replay_thm12(const ReplaySetup& setup, const SolveOptions& opts = {});

struct BhpExperiment {
    ProblemSpec first;   // u1: data g1, rhs f1
    ProblemSpec second;  // u2: data g2, rhs f2
    std::vector<double> ladder;
    double delta = 0.0;
    double C0 = 0.0;
    BhpOptions bhp;
    std::optional<HolderOptions> holder;
};

struct GridRun {
    double h = 0.0;
    std::shared_ptr<const DomainMask> mask;
    Solution u1;
    Solution u2;
    HarnackReport report;
};

struct BhpResult {
    HarnackReport report;
    std::optional<HolderFit> holder;
    std::vector<GridRun> runs;
};

BhpResult run_bhp_experiment(const BhpExperiment& ex, const SolveOptions& opts = {});

struct HalfHarnackSetup {
    bool sub = true;  // sub: sup over B_{1/2} against the mass; otherwise mass against the inf
    int dim = 1;
    double s = 0.5;
    EllipticityBounds bounds{1.0, 2.0};
    double C0 = 1.0;
    double box = 2.0;
    std::vector<double> ladder;
    int instances = 20;
    std::uint64_t seed = 1;
};

struct HalfHarnackStudy {
    std::vector<double> ladder;
    std::vector<std::vector<double>> ratios;  // [spacing][instance]
    std::vector<double> max_ratio;            // per spacing
    double stability = 0.0;                   // relative change of max_ratio over the two finest spacings
    double worst_hypothesis = 0.0;            // min over runs of M⁺u + C0 (sub) or C0 - M⁻u (sup)
    bool hypotheses_hold = true;
    bool finite = true;
};

// Random instances: an x-dependent kernel, exterior data made of indicator balls beyond B_1 and a
// smooth right-hand side bounded by C0, solved on B_1 at every spacing of the ladder. The sub case
// uses signed data and Lu = f ≥ -C0, so M⁺u ≥ -C0; the sup case nonnegative data and -C0 ≤ f ≤ 0,
// so u ≥ 0 and M⁻u ≤ C0.
HalfHarnackStudy half_harnack_study(const HalfHarnackSetup& setup, const SolveOptions& opts = {});

// Ratio field at the finest spacing: i, j, x, y, label, u1, u2, ratio.
void write_ratio_csv(const GridRun& run, double s, std::ostream& os);

}  // namespace nlh
