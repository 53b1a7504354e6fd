#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlh/harnack.hpp"

namespace nlh {

inline constexpr const char* kArtifactVersion = "0.3.0";

struct Tolerances {
    double solver = 1e-8;
    double stability = 0.10;              // bhp: relative change of C between the two finest grids
    double half_harnack_stability = 0.15; // half-harnack: relative change of the max ratio
    double r_squared = 0.9;               // holder
    double growth_slack = 0.1;            // growth: p ≤ 2s + slack
    double homogeneity = 0.05;            // verify-barrier
};

struct BarrierConfig {
    Point e{1.0, 0.0};
    double eta = 1.0;
    double spacing = 1.0 / 32.0;
    double window = 2.5;
    int per_radius = 41;
    int bisection_steps = 6;
    std::optional<double> epsilon;  // fixed ε: verify only, no search
};

struct HalfHarnackConfig {
    std::string theorem = "sub";  // sub | sup
    int instances = 20;
};

struct ReplayConfig {
    double threshold = 0.5;
    bool force_c2_zero = false;
};

struct ExperimentConfig {
    std::string command;
    int dim = 1;
    double s = 0.5;
    double lambda = 1.0;
    double Lambda = 1.0;
    double beta = 0.0;
    Point drift{0.0, 0.0};
    double delta = 0.0;
    double C0 = 1.0;
    std::string op = "linear";  // linear | pucci_plus | pucci_minus | drift_pucci_plus | drift_pucci_minus
    nlohmann::json kernel = {{"variant", "fractional_laplacian"}};
    nlohmann::json domain = {{"shape", "half_space"}};
    double box = 2.0;
    double ball_radius = 1.0;
    std::vector<double> grid;
    std::vector<NamedFunction> data;
    std::vector<NamedFunction> rhs;
    std::string output = "out";
    Tolerances tol;
    BarrierConfig barrier;
    BhpOptions bhp;
    HolderOptions holder;
    GrowthOptions growth;
    HalfHarnackConfig half_harnack;
    ReplayConfig replay;
};

const std::vector<std::string>& known_commands();

struct ParseResult {
    std::optional<ExperimentConfig> config;
    std::vector<std::string> violations;  // every problem found, not just the first
    std::vector<std::string> warnings;    // unknown keys outside strict mode
};

ParseResult parse_config_json(const nlohmann::json& j, bool strict);
ParseResult parse_config(const std::filesystem::path& path, bool strict);

// Full canonical form with every default filled in.
nlohmann::json config_to_json(const ExperimentConfig& c);
// FNV-1a over the canonical form without the output directory.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hash_hex(std::uint64_t h);

// Problem built from the config's operator, domain and the k-th data/rhs pair.
ProblemSpec problem_spec(const ExperimentConfig& c, std::size_t k);
Operator make_operator(const ExperimentConfig& c);

}  // namespace nlh
