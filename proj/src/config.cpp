#include "nlh/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "nlh/error.hpp"

namespace nlh {

namespace {

using nlohmann::json;

// Reads one JSON object, recording type errors and unknown keys under a dotted path.
class Reader {
public:
    Reader(const json& j, std::string path, ParseResult& out, bool strict)
        : j_(j), path_(std::move(path)), out_(out), strict_(strict) {}

    bool ok() const { return j_.is_object(); }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    void number(const char* key, double& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_number()) return fail(key, "must be a number");
        v = x.get<double>();
        if (!std::isfinite(v)) fail(key, "must be finite");
    }
    void integer(const char* key, int& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_number_integer()) return fail(key, "must be an integer");
        v = x.get<int>();
    }
    void boolean(const char* key, bool& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_boolean()) return fail(key, "must be true or false");
        v = x.get<bool>();
    }
    void string(const char* key, std::string& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_string()) return fail(key, "must be a string");
        v = x.get<std::string>();
    }
    void point(const char* key, Point& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number()) {
            return fail(key, "must be an array of two numbers");
        }
        v = {x[0].get<double>(), x[1].get<double>()};
    }
    void numbers(const char* key, std::vector<double>& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_array()) return fail(key, "must be an array of numbers");
        v.clear();
        for (const json& e : x) {
            if (!e.is_number()) return fail(key, "must be an array of numbers");
            v.push_back(e.get<double>());
        }
    }
    void object(const char* key, json& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_object()) return fail(key, "must be an object");
        v = x;
    }
    void functions(const char* key, std::vector<NamedFunction>& v) {
        if (!has(key)) return;
        const json& x = j_.at(key);
        if (!x.is_array()) return fail(key, "must be an array of function references");
        v.clear();
        for (const json& e : x) {
            try {
                v.push_back(named_from_json(e));
            } catch (const Error& err) {
                fail(key, err.what());
            }
        }
    }
    // Nested block: returns a reader over j[key], or an empty object if absent.
    json child(const char* key) {
        if (!has(key)) return json::object();
        const json& x = j_.at(key);
        if (!x.is_object()) {
            fail(key, "must be an object");
            return json::object();
        }
        return x;
    }
    std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (seen_.count(it.key())) continue;
            const std::string msg = "unknown key '" + sub(it.key().c_str()) + "'";
            if (strict_) {
                out_.violations.push_back(msg);
            } else {
                out_.warnings.push_back(msg + " ignored");
            }
        }
    }

    void fail(const char* key, const std::string& what) { out_.violations.push_back(sub(key) + ": " + what); }

private:
    const json& j_;
    std::string path_;
    ParseResult& out_;
    bool strict_;
    std::set<std::string> seen_;
};

json pt(Point p) { return json::array({p.x, p.y}); }

// Every key of `in` appears in `canon` with an equal value (numbers compared as doubles).
bool subset_equal(const json& in, const json& canon, const std::string& path, std::string& where) {
    if (in.is_object()) {
        if (!canon.is_object()) {
            where = path;
            return false;
        }
        for (auto it = in.begin(); it != in.end(); ++it) {
            if (!canon.contains(it.key())) continue;  // unknown keys are reported separately
            const std::string p = path.empty() ? it.key() : path + "." + it.key();
            if (!subset_equal(it.value(), canon.at(it.key()), p, where)) return false;
        }
        return true;
    }
    if (in.is_array()) {
        if (!canon.is_array() || canon.size() != in.size()) {
            where = path;
            return false;
        }
        for (std::size_t k = 0; k < in.size(); ++k) {
            if (!subset_equal(in[k], canon[k], path + "[" + std::to_string(k) + "]", where)) return false;
        }
        return true;
    }
    if (in.is_number() && canon.is_number()) {
        if (in.get<double>() == canon.get<double>()) return true;
        where = path;
        return false;
    }
    if (in == canon) return true;
    where = path;
    return false;
}

std::size_t data_count(const std::string& command) {
    if (command == "bhp" || command == "holder") return 2;
    if (command == "solve" || command == "pucci-solve" || command == "growth" || command == "replay-thm12") return 1;
    return 0;
}

void validate(const ExperimentConfig& c, ParseResult& out) {
    auto bad = [&](const std::string& m) { out.violations.push_back(m); };
    auto attempt = [&](const std::string& prefix, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            bad(prefix + ": " + e.what());
        }
    };
    const auto& cmds = known_commands();
    if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end()) {
        bad("command: unknown command '" + c.command + "'");
    }
    if (c.dim != 1 && c.dim != 2) bad("dim: must be 1 or 2");
    if (!(c.s > 0.0 && c.s < 1.0)) bad("s: order out of range, s must lie in (0, 1)");
    if (!(c.lambda > 0.0 && c.lambda <= c.Lambda)) bad("lambda, Lambda: need 0 < lambda <= Lambda");
    if (c.delta < 0.0) bad("delta: must be nonnegative");
    if (c.C0 < 0.0) bad("C0: must be nonnegative");
    static const std::set<std::string> ops = {"linear", "pucci_plus", "pucci_minus", "drift_pucci_plus",
                                              "drift_pucci_minus"};
    if (!ops.count(c.op)) bad("operator: unknown operator '" + c.op + "'");
    if (c.command == "pucci-solve" && c.op.rfind("pucci", 0) != 0 && c.op.rfind("drift", 0) != 0) {
        bad("operator: pucci-solve needs a Pucci or drift operator");
    }
    const bool dims_ok = (c.dim == 1 || c.dim == 2) && c.s > 0.0 && c.s < 1.0 && c.lambda > 0.0 && c.lambda <= c.Lambda;
    if (dims_ok && ops.count(c.op)) attempt("operator", [&] { (void)make_operator(c); });
    if (dims_ok) attempt("domain", [&] { (void)shape_from_json(c.domain, c.dim); });
    if (!(c.box > 0.0)) bad("box: must be positive");
    if (!(c.ball_radius > 0.0 && c.ball_radius <= c.box)) bad("ball_radius: must lie in (0, box]");

    const bool needs_grid = c.command != "verify-barrier";
    if (needs_grid && c.grid.empty()) bad("grid: ladder must list at least one spacing");
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
        if (!(c.grid[k] > 0.0)) {
            bad("grid[" + std::to_string(k) + "]: spacing must be positive");
            continue;
        }
        if (k > 0 && !(c.grid[k] < c.grid[k - 1])) bad("grid: ladder must be strictly decreasing");
        if (dims_ok && c.box > 0.0) attempt("grid[" + std::to_string(k) + "]", [&] { (void)build_grid(c.dim, c.box, c.grid[k]); });
    }

    const std::size_t need = data_count(c.command);
    if (need > 0 && c.data.size() != need) {
        bad("data: command '" + c.command + "' needs " + std::to_string(need) + " exterior data entries");
    }
    if (!c.rhs.empty() && c.rhs.size() != c.data.size()) bad("rhs: must be empty or match the length of data");
    for (std::size_t k = 0; k < c.data.size(); ++k) {
        if (!is_builtin_function(c.data[k].name)) {
            bad("data[" + std::to_string(k) + "]: unknown function '" + c.data[k].name + "'");
        } else if (c.dim == 1 || c.dim == 2) {
            attempt("data[" + std::to_string(k) + "]", [&] { (void)build_named(c.data[k], c.dim); });
        }
    }
    for (std::size_t k = 0; k < c.rhs.size(); ++k) {
        if (!is_builtin_function(c.rhs[k].name)) {
            bad("rhs[" + std::to_string(k) + "]: unknown function '" + c.rhs[k].name + "'");
        } else if (c.dim == 1 || c.dim == 2) {
            attempt("rhs[" + std::to_string(k) + "]", [&] {
                const BuiltFunction f = build_named(c.rhs[k], c.dim);
                if (c.command == "bhp" && f.sup_abs > c.delta) throw Error("sup |f| exceeds delta");
            });
        }
    }

    const Tolerances& t = c.tol;
    for (double v : {t.solver, t.stability, t.half_harnack_stability, t.homogeneity}) {
        if (!(v > 0.0)) {
            bad("tolerances: every tolerance must be positive");
            break;
        }
    }
    if (!(t.r_squared > 0.0 && t.r_squared <= 1.0)) bad("tolerances.r_squared: must lie in (0, 1]");
    if (t.growth_slack < 0.0) bad("tolerances.growth_slack: must be nonnegative");

    const BarrierConfig& b = c.barrier;
    if (!(b.eta >= 0.0)) bad("barrier.eta: must be nonnegative");
    if (std::fabs(norm(b.e) - 1.0) > 1e-12) bad("barrier.e: must be a unit vector");
    if (c.dim == 1 && b.e.y != 0.0) bad("barrier.e: must lie on the axis in 1D");
    if (!(b.spacing > 0.0 && b.window > 0.0)) bad("barrier: spacing and window must be positive");
    if (b.per_radius < 3) bad("barrier.per_radius: need at least 3");
    if (b.bisection_steps < 0) bad("barrier.bisection_steps: must be nonnegative");
    if (b.epsilon && !(*b.epsilon > 0.0 && *b.epsilon < 2.0 * c.s)) bad("barrier.epsilon: must lie in (0, 2s)");

    if (!(c.bhp.floor_factor >= 0.0)) bad("bhp.floor_factor: must be nonnegative");
    if (!(c.bhp.region_radius > 0.0)) bad("bhp.region_radius: must be positive");
    if (!(c.holder.base > 1.0)) bad("holder.base: must exceed 1");
    if (!(c.holder.min_scale_factor > 0.0)) bad("holder.min_scale_factor: must be positive");
    if (norm(c.growth.direction) == 0.0) bad("growth.direction: must be nonzero");
    if (!(c.growth.r_max > 0.0)) bad("growth.r_max: must be positive");
    if (c.half_harnack.theorem != "sub" && c.half_harnack.theorem != "sup") {
        bad("half_harnack.theorem: must be 'sub' or 'sup'");
    }
    if (c.half_harnack.instances < 1) bad("half_harnack.instances: must be positive");
    if (c.command == "half-harnack" && !(c.C0 > 0.0)) bad("C0: half-harnack instances need C0 > 0");
}

}  // namespace

const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> c = {"solve", "pucci-solve", "verify-barrier", "bhp",
                                               "holder", "half-harnack", "growth", "replay-thm12"};
    return c;
}

ParseResult parse_config_json(const json& j, bool strict) {
    ParseResult out;
    if (!j.is_object()) {
        out.violations.push_back("config must be a JSON object");
        return out;
    }
    ExperimentConfig c;
    Reader r(j, "", out, strict);
    if (!r.has("command")) out.violations.push_back("command: missing");
    r.string("command", c.command);
    r.integer("dim", c.dim);
    if (!r.has("s")) out.violations.push_back("s: missing");
    r.number("s", c.s);
    r.number("lambda", c.lambda);
    r.number("Lambda", c.Lambda);
    r.number("beta", c.beta);
    r.point("drift", c.drift);
    r.number("delta", c.delta);
    r.number("C0", c.C0);
    r.string("operator", c.op);
    r.object("kernel", c.kernel);
    r.object("domain", c.domain);
    r.number("box", c.box);
    r.number("ball_radius", c.ball_radius);
    r.numbers("grid", c.grid);
    r.functions("data", c.data);
    r.functions("rhs", c.rhs);
    r.string("output", c.output);

    {
        const json t = r.child("tolerances");
        Reader q(t, "tolerances", out, strict);
        q.number("solver", c.tol.solver);
        q.number("stability", c.tol.stability);
        q.number("half_harnack_stability", c.tol.half_harnack_stability);
        q.number("r_squared", c.tol.r_squared);
        q.number("growth_slack", c.tol.growth_slack);
        q.number("homogeneity", c.tol.homogeneity);
        q.finish();
    }
    {
        const json t = r.child("barrier");
        Reader q(t, "barrier", out, strict);
        q.point("e", c.barrier.e);
        q.number("eta", c.barrier.eta);
        q.number("spacing", c.barrier.spacing);
        q.number("window", c.barrier.window);
        q.integer("per_radius", c.barrier.per_radius);
        q.integer("bisection_steps", c.barrier.bisection_steps);
        if (q.has("epsilon") && !t.at("epsilon").is_null()) {
            double e = 0.0;
            q.number("epsilon", e);
            c.barrier.epsilon = e;
        }
        q.finish();
    }
    {
        const json t = r.child("bhp");
        Reader q(t, "bhp", out, strict);
        q.number("floor_factor", c.bhp.floor_factor);
        q.number("region_radius", c.bhp.region_radius);
        q.finish();
    }
    {
        const json t = r.child("holder");
        Reader q(t, "holder", out, strict);
        q.number("base", c.holder.base);
        q.number("min_scale_factor", c.holder.min_scale_factor);
        q.number("floor_factor", c.holder.floor_factor);
        q.finish();
    }
    {
        const json t = r.child("growth");
        Reader q(t, "growth", out, strict);
        q.point("direction", c.growth.direction);
        q.number("d_min_factor", c.growth.d_min_factor);
        q.number("r_max", c.growth.r_max);
        q.finish();
    }
    {
        const json t = r.child("half_harnack");
        Reader q(t, "half_harnack", out, strict);
        q.string("theorem", c.half_harnack.theorem);
        q.integer("instances", c.half_harnack.instances);
        q.finish();
    }
    {
        const json t = r.child("replay");
        Reader q(t, "replay", out, strict);
        q.number("threshold", c.replay.threshold);
        q.boolean("force_c2_zero", c.replay.force_c2_zero);
        q.finish();
    }
    r.finish();

    if (out.violations.empty()) validate(c, out);
    if (strict && out.violations.empty()) {
        std::string where;
        if (!subset_equal(j, config_to_json(c), "", where)) {
            out.violations.push_back("config does not round-trip at '" + where + "'");
        }
    }
    if (out.violations.empty()) out.config = c;
    return out;
}

ParseResult parse_config(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) {
        ParseResult r;
        r.violations.push_back("cannot read config file '" + path.string() + "'");
        return r;
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        ParseResult r;
        r.violations.push_back(std::string("malformed JSON: ") + e.what());
        return r;
    }
    return parse_config_json(j, strict);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["command"] = c.command;
    j["dim"] = c.dim;
    j["s"] = c.s;
    j["lambda"] = c.lambda;
    j["Lambda"] = c.Lambda;
    j["beta"] = c.beta;
    j["drift"] = pt(c.drift);
    j["delta"] = c.delta;
    j["C0"] = c.C0;
    j["operator"] = c.op;
    j["kernel"] = c.kernel;
    j["domain"] = c.domain;
    j["box"] = c.box;
    j["ball_radius"] = c.ball_radius;
    j["grid"] = c.grid;
    j["data"] = json::array();
    for (const auto& f : c.data) j["data"].push_back(named_to_json(f));
    j["rhs"] = json::array();
    for (const auto& f : c.rhs) j["rhs"].push_back(named_to_json(f));
    j["output"] = c.output;
    j["tolerances"] = {{"solver", c.tol.solver},
                       {"stability", c.tol.stability},
                       {"half_harnack_stability", c.tol.half_harnack_stability},
                       {"r_squared", c.tol.r_squared},
                       {"growth_slack", c.tol.growth_slack},
                       {"homogeneity", c.tol.homogeneity}};
    j["barrier"] = {{"e", pt(c.barrier.e)},
                    {"eta", c.barrier.eta},
                    {"spacing", c.barrier.spacing},
                    {"window", c.barrier.window},
                    {"per_radius", c.barrier.per_radius},
                    {"bisection_steps", c.barrier.bisection_steps},
                    {"epsilon", c.barrier.epsilon ? json(*c.barrier.epsilon) : json(nullptr)}};
    j["bhp"] = {{"floor_factor", c.bhp.floor_factor}, {"region_radius", c.bhp.region_radius}};
    j["holder"] = {{"base", c.holder.base},
                   {"min_scale_factor", c.holder.min_scale_factor},
                   {"floor_factor", c.holder.floor_factor}};
    j["growth"] = {{"direction", pt(c.growth.direction)},
                   {"d_min_factor", c.growth.d_min_factor},
                   {"r_max", c.growth.r_max}};
    j["half_harnack"] = {{"theorem", c.half_harnack.theorem}, {"instances", c.half_harnack.instances}};
    j["replay"] = {{"threshold", c.replay.threshold}, {"force_c2_zero", c.replay.force_c2_zero}};
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    json j = config_to_json(c);
    j.erase("output");
    const std::string text = j.dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Operator make_operator(const ExperimentConfig& c) {
    const FractionalOrder s(c.s);
    const EllipticityBounds b(c.lambda, c.Lambda);
    if (c.op == "linear") return LinearOp{kernel_from_json(c.kernel, c.dim, s, b)};
    if (c.op == "pucci_plus") return PucciOp{s, b, Extremal::Plus};
    if (c.op == "pucci_minus") return PucciOp{s, b, Extremal::Minus};
    const Extremal which = c.op == "drift_pucci_plus" ? Extremal::Plus : Extremal::Minus;
    require(c.op == "drift_pucci_plus" || c.op == "drift_pucci_minus", "unknown operator '" + c.op + "'");
    DriftSpec d{kernel_from_json(c.kernel, c.dim, s, b), c.drift, c.beta};
    const DriftReport rep = validate_drift(d);
    if (!rep.valid) {
        std::string msg = "invalid drift operator:";
        for (const auto& r : rep.reasons) msg += " " + r + ";";
        throw Error(msg);
    }
    return DriftPucciOp{d, which};
}

ProblemSpec problem_spec(const ExperimentConfig& c, std::size_t k) {
    ProblemSpec p;
    p.dim = c.dim;
    p.box = c.box;
    p.shape = shape_from_json(c.domain, c.dim);
    p.op = make_operator(c);
    if (k < c.data.size()) p.data = c.data[k];
    if (k < c.rhs.size()) p.rhs = c.rhs[k];
    p.domain.ball_radius = c.ball_radius;
    return p;
}

}  // namespace nlh
