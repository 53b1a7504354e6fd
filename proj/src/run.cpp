#include "nlh/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "nlh/barrier.hpp"
#include "nlh/error.hpp"

namespace nlh {

namespace {

using nlohmann::json;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

json solve_report_json(const SolveReport& r) {
    return {{"method", r.method},
            {"iterations", r.iterations},
            {"krylov_iterations", r.krylov_iterations},
            {"residual", r.residual},
            {"policy_changes", r.policy_changes},
            {"converged", r.converged}};
}

json harnack_json(const HarnackReport& r) {
    return {{"C", r.C},
            {"sup_ratio", r.sup_ratio},
            {"inf_ratio", r.inf_ratio},
            {"spacings", r.spacings},
            {"constants", r.constants},
            {"stability", r.stability},
            {"delta_used", r.delta_used},
            {"C0_used", r.C0_used},
            {"nodes_used", r.nodes_used},
            {"nodes_floored", r.nodes_floored},
            {"floor", r.floor}};
}

json holder_json(const HolderFit& f) {
    json j = {{"resolved", f.resolved}, {"exact", f.exact},     {"base", f.base}, {"scales", f.scales},
              {"osc", f.osc},           {"m", f.m},             {"mbar", f.mbar}, {"monotone", f.monotone},
              {"r_squared", f.r_squared}, {"intercept", f.intercept}};
    j["alpha"] = f.exact ? json("exact") : json(f.alpha);
    return j;
}

std::string field_csv(const DomainMask& mask, const std::vector<std::pair<std::string, const GridFunction*>>& cols) {
    const Grid& g = mask.grid();
    std::ostringstream os;
    os << "i,j,x,y,label";
    for (const auto& c : cols) os << ',' << c.first;
    os << '\n';
    char buf[128];
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto ij = g.lattice(i);
        const Point x = g.node(i);
        const NodeLabel l = mask.label(i);
        const char* name = l == NodeLabel::Interior ? "interior" : (l == NodeLabel::Zero ? "zero" : "data");
        std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%s", ij[0], ij[1], x.x, x.y, name);
        os << buf;
        for (const auto& c : cols) {
            std::snprintf(buf, sizeof buf, ",%.17g", (*c.second)[i]);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

SolveOptions solve_options(const ExperimentConfig& c) {
    SolveOptions o;
    o.tol = c.tol.solver;
    return o;
}

std::string h_label(double h) { return fmt("h=%g", h); }

CommandResult cmd_solve(const ExperimentConfig& c, StageLog& log) {
    CommandResult out;
    const ProblemSpec spec = problem_spec(c, 0);
    const SolveOptions opts = solve_options(c);
    json runs = json::array();
    bool all_converged = true;
    std::shared_ptr<const DomainMask> last_mask;
    std::optional<GridFunction> last_u;
    for (double h : c.grid) {
        const DirichletProblem p = log.run("build " + h_label(h), [&] { return make_problem(spec, h); });
        const Solution sol = log.run("solve " + h_label(h), [&] { return solve(p, opts); });
        const double check = log.run("residual " + h_label(h), [&] { return pointwise_residual(p, sol.u); });
        double umax = 0.0, umin = 0.0;
        for (std::size_t i : p.mask->interior_nodes()) {
            umax = std::fmax(umax, sol.u[i]);
            umin = std::fmin(umin, sol.u[i]);
        }
        json r = solve_report_json(sol.report);
        r["h"] = h;
        r["interior_nodes"] = p.mask->interior_nodes().size();
        r["pointwise_residual"] = check;
        r["u_max"] = umax;
        r["u_min"] = umin;
        const Grid& g = p.mask->grid();
        r["u_origin"] = sol.u[g.index(0, 0)];
        runs.push_back(r);
        all_converged = all_converged && sol.report.converged;
        last_mask = p.mask;
        last_u = sol.u;
    }
    out.result["operator"] = operator_to_json(spec.op);
    out.result["runs"] = runs;
    out.asserted.push_back({"solver converged on every grid", all_converged, ""});
    out.files.emplace_back("fields.csv", field_csv(*last_mask, {{"u", &*last_u}}));
    return out;
}

CommandResult cmd_barrier(const ExperimentConfig& c, StageLog& log) {
    CommandResult out;
    const BarrierConfig& b = c.barrier;
    const Cone cone{b.e, b.eta};
    const FractionalOrder s(c.s);
    const EllipticityBounds bounds(c.lambda, c.Lambda);
    SubsolutionReport cert;
    json res;
    if (b.epsilon) {
        cert = log.run("verify", [&] {
            const QuadratureTable t(c.dim, b.spacing, c.s, b.window);
            return verify_subsolution(BarrierParams{cone, *b.epsilon, s}, bounds,
                                      barrier_samples(cone, c.dim, b.spacing, b.per_radius), t);
        });
        res["mode"] = "verify";
        out.asserted.push_back({"min M-Phi >= -bound on every sample", cert.passed, fmt("min margin %.3e", cert.min_margin)});
    } else {
        EpsilonSearchOptions o;
        o.spacing = b.spacing;
        o.window = b.window;
        o.bisection_steps = b.bisection_steps;
        o.per_radius = b.per_radius;
        const EpsilonSearch es = log.run("epsilon search", [&] { return find_barrier_epsilon(cone, c.dim, s, bounds, o); });
        cert = es.certificate;
        res["mode"] = "search";
        json trace = json::array();
        for (const auto& [e, m] : es.trace) trace.push_back({{"epsilon", e}, {"min_margin", m}});
        res["trace"] = trace;
        res["homogeneity_error"] = es.homogeneity_error;
        out.asserted.push_back({"epsilon found", es.found, ""});
        out.asserted.push_back({"homogeneity within tolerance", es.found && es.homogeneity_error <= c.tol.homogeneity,
                                fmt("relative error %.4f", es.homogeneity_error)});
    }
    out.asserted.push_back({"at least 200 cone samples", cert.points.size() >= 200 || c.dim == 1,
                            std::to_string(cert.points.size()) + " samples"});
    const json certificate = {{"eta", b.eta},
                              {"s", c.s},
                              {"lambda", c.lambda},
                              {"Lambda", c.Lambda},
                              {"epsilon", cert.epsilon},
                              {"min_value", cert.min_value},
                              {"min_margin", cert.min_margin},
                              {"tolerance", cert.max_bound},
                              {"spacing", cert.spacing},
                              {"samples", cert.points.size()}};
    res["certificate"] = certificate;
    out.result = res;
    out.files.emplace_back("certificate.json", certificate.dump(2) + "\n");
    std::ostringstream csv;
    csv << "x,y,value,bound\n";
    char buf[160];
    for (std::size_t k = 0; k < cert.points.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", cert.points[k].x, cert.points[k].y, cert.values[k],
                      cert.bounds[k]);
        csv << buf;
    }
    out.files.emplace_back("samples.csv", csv.str());
    return out;
}

BhpExperiment experiment(const ExperimentConfig& c) {
    BhpExperiment ex;
    ex.first = problem_spec(c, 0);
    ex.second = problem_spec(c, 1);
    ex.ladder = c.grid;
    ex.delta = c.delta;
    ex.C0 = c.C0;
    ex.bhp = c.bhp;
    return ex;
}

CommandResult cmd_bhp(const ExperimentConfig& c, StageLog& log, bool holder) {
    CommandResult out;
    BhpExperiment ex = experiment(c);
    if (holder) ex.holder = c.holder;
    const BhpResult r = log.run("bhp pipeline", [&] { return run_bhp_experiment(ex, solve_options(c)); });
    json runs = json::array();
    for (const GridRun& g : r.runs) {
        runs.push_back({{"h", g.h},
                        {"C", g.report.C},
                        {"sup_ratio", g.report.sup_ratio},
                        {"inf_ratio", g.report.inf_ratio},
                        {"nodes_used", g.report.nodes_used},
                        {"nodes_floored", g.report.nodes_floored},
                        {"u1", solve_report_json(g.u1.report)},
                        {"u2", solve_report_json(g.u2.report)}});
    }
    out.result["harnack"] = harnack_json(r.report);
    out.result["runs"] = runs;
    const bool finite = std::isfinite(r.report.C) && r.report.C >= 1.0;
    out.asserted.push_back({"C finite and >= 1", finite, fmt("C = %.6g", r.report.C)});
    if (!holder && r.runs.size() >= 2) {
        out.asserted.push_back({"C stable between the two finest grids", r.report.stability <= c.tol.stability,
                                fmt("relative change %.4f", r.report.stability)});
    }
    if (holder) {
        const HolderFit& f = *r.holder;
        out.result["holder"] = holder_json(f);
        out.asserted.push_back({"alpha > 0", f.exact || f.alpha > 0.0, fmt("alpha = %.4f", f.alpha)});
        out.asserted.push_back({"R^2 above tolerance", f.exact || f.r_squared >= c.tol.r_squared,
                                fmt("R^2 = %.4f", f.r_squared)});
    }
    std::ostringstream csv;
    write_ratio_csv(r.runs.back(), c.s, csv);
    out.files.emplace_back("ratio.csv", csv.str());
    return out;
}

CommandResult cmd_growth(const ExperimentConfig& c, StageLog& log) {
    CommandResult out;
    const ProblemSpec spec = problem_spec(c, 0);
    json runs = json::array();
    std::ostringstream csv;
    csv << "h,d,u\n";
    GrowthFit last;
    for (double h : c.grid) {
        const DirichletProblem p = log.run("build " + h_label(h), [&] { return make_problem(spec, h); });
        const Solution sol = log.run("solve " + h_label(h), [&] { return solve(p, solve_options(c)); });
        const GrowthFit f = log.run("fit " + h_label(h), [&] { return growth_exponent(sol.u, *p.mask, c.s, c.growth); });
        runs.push_back({{"h", h},
                        {"p", f.p},
                        {"gamma", f.gamma},
                        {"c0", f.c0},
                        {"r_squared", f.r_squared},
                        {"normalizer", f.normalizer},
                        {"points", f.d.size()},
                        {"solve", solve_report_json(sol.report)}});
        char buf[128];
        for (std::size_t k = 0; k < f.d.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", h, f.d[k], f.u[k]);
            csv << buf;
        }
        last = f;
    }
    out.result["runs"] = runs;
    out.asserted.push_back({"p <= 2s + slack", last.p <= 2.0 * c.s + c.tol.growth_slack,
                            fmt("p = %.4f", last.p) + fmt(", 2s = %.3f", 2.0 * c.s)});
    out.files.emplace_back("growth.csv", csv.str());
    return out;
}

CommandResult cmd_half_harnack(const ExperimentConfig& c, StageLog& log, std::uint64_t seed) {
    CommandResult out;
    HalfHarnackSetup hs;
    hs.sub = c.half_harnack.theorem == "sub";
    hs.dim = c.dim;
    hs.s = c.s;
    hs.bounds = EllipticityBounds(c.lambda, c.Lambda);
    hs.C0 = c.C0;
    hs.box = c.box;
    hs.ladder = c.grid;
    hs.instances = c.half_harnack.instances;
    hs.seed = seed;
    const HalfHarnackStudy st = log.run("instances", [&] { return half_harnack_study(hs, solve_options(c)); });
    out.result = {{"theorem", c.half_harnack.theorem},
                  {"ladder", st.ladder},
                  {"max_ratio", st.max_ratio},
                  {"ratios", st.ratios},
                  {"stability", st.stability},
                  {"worst_hypothesis_margin", st.worst_hypothesis},
                  {"seed", hash_hex(seed)}};
    out.asserted.push_back({"ratios finite", st.finite, ""});
    out.asserted.push_back({"hypotheses hold numerically", st.hypotheses_hold, fmt("worst margin %.3e", st.worst_hypothesis)});
    if (st.ladder.size() >= 2) {
        out.asserted.push_back({"max ratio stable between the two finest grids",
                                st.stability <= c.tol.half_harnack_stability, fmt("relative change %.4f", st.stability)});
    }
    std::ostringstream csv;
    csv << "h,instance,ratio\n";
    char buf[96];
    for (std::size_t k = 0; k < st.ladder.size(); ++k) {
        for (std::size_t i = 0; i < st.ratios[k].size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\n", st.ladder[k], i, st.ratios[k][i]);
            csv << buf;
        }
    }
    out.files.emplace_back("ratios.csv", csv.str());
    return out;
}

CommandResult cmd_replay(const ExperimentConfig& c, StageLog& log) {
    CommandResult out;
    ReplaySetup rs;
    rs.problem = problem_spec(c, 0);
    rs.h = c.grid.back();
    rs.threshold = c.replay.threshold;
    rs.force_c2_zero = c.replay.force_c2_zero;
    const ReplayReport r = log.run("replay", [&] { return proof_replay_thm12(rs, solve_options(c)); });
    out.result = {{"found", r.found},
                  {"C1", r.C1},
                  {"C2", r.C2},
                  {"sup_u1", r.sup_u1},
                  {"min_mplus", r.min_mplus},
                  {"max_w_outside", r.max_w_outside},
                  {"region_nodes", r.region_nodes},
                  {"x0", {r.x0.x, r.x0.y}},
                  {"rho", r.rho},
                  {"trials", r.trials},
                  {"threshold", rs.threshold},
                  {"force_c2_zero", rs.force_c2_zero},
                  {"solve", solve_report_json(r.solve)}};
    if (rs.force_c2_zero) {
        out.asserted.push_back({"ablation without the eta bump fails", !r.found, fmt("best min M+w = %.4g", r.min_mplus)});
    } else {
        out.asserted.push_back({"constants found", r.found, fmt("min M+w = %.4g", r.min_mplus)});
    }
    return out;
}

}  // namespace

double StageLog::now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

bool CommandResult::passed() const {
    for (const auto& a : asserted) {
        if (!a.holds) return false;
    }
    return true;
}

CommandResult run_command(const ExperimentConfig& c, StageLog& log) {
    const std::uint64_t hash = config_hash(c);
    if (c.command == "solve" || c.command == "pucci-solve") return cmd_solve(c, log);
    if (c.command == "verify-barrier") return cmd_barrier(c, log);
    if (c.command == "bhp") return cmd_bhp(c, log, false);
    if (c.command == "holder") return cmd_bhp(c, log, true);
    if (c.command == "growth") return cmd_growth(c, log);
    if (c.command == "half-harnack") return cmd_half_harnack(c, log, hash);
    if (c.command == "replay-thm12") return cmd_replay(c, log);
    throw Error("unknown command '" + c.command + "'");
}

json build_report(const ExperimentConfig& c, const CommandResult& r) {
    json cfg = config_to_json(c);
    cfg.erase("output");
    json asserted = json::array();
    for (const auto& a : r.asserted) asserted.push_back({{"name", a.name}, {"holds", a.holds}, {"detail", a.detail}});
    return {{"artifact_version", kArtifactVersion},
            {"command", c.command},
            {"config_hash", hash_hex(config_hash(c))},
            {"config", cfg},
            {"result", r.result},
            {"asserted", asserted},
            {"passed", r.passed()}};
}

json RunManifest::to_json() const {
    json st = json::array();
    for (const auto& s : stages) st.push_back({{"name", s.name}, {"seconds", s.seconds}, {"ok", s.ok}});
    return {{"config_hash", config_hash},
            {"artifact_version", artifact_version},
            {"command", command},
            {"started", started},
            {"finished", finished},
            {"stages", st},
            {"outputs", outputs},
            {"failed_stage", failed_stage.empty() ? json(nullptr) : json(failed_stage)},
            {"error", error.empty() ? json(nullptr) : json(error)},
            {"exit_code", exit_code}};
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(out_dir / "manifest.json");
    os << m.to_json().dump(2) << '\n';
}

int run(const ExperimentConfig& c, const std::filesystem::path& out_dir, RunManifest& manifest) {
    manifest.config_hash = hash_hex(config_hash(c));
    manifest.command = c.command;
    manifest.started = utc_timestamp();
    StageLog log;
    int code = kExitOk;
    try {
        const CommandResult r = run_command(c, log);
        log.run("write", [&] {
            std::filesystem::create_directories(out_dir);
            {
                std::ofstream os(out_dir / "report.json");
                os << build_report(c, r).dump(2) << '\n';
                if (!os) throw Error("cannot write report.json");
            }
            manifest.outputs.push_back("report.json");
            for (const auto& [name, text] : r.files) {
                std::ofstream os(out_dir / name);
                os << text;
                if (!os) throw Error("cannot write " + name);
                manifest.outputs.push_back(name);
            }
        });
        code = r.passed() ? kExitOk : kExitAssertion;
    } catch (const std::exception& e) {
        manifest.failed_stage = log.current().empty() ? "setup" : log.current();
        manifest.error = e.what();
        code = kExitStage;
    }
    manifest.stages = log.records();
    manifest.finished = utc_timestamp();
    manifest.exit_code = code;
    manifest.outputs.push_back("manifest.json");
    write_manifest(manifest, out_dir);
    return code;
}

}  // namespace nlh
