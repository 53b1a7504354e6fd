#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "nlh/config.hpp"
#include "nlh/parallel.hpp"
#include "nlh/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal boundary Harnack experiments"};
    std::string config_path;
    std::string out_dir;
    bool strict = false;
    int jobs = 0;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (overrides the config's \"output\")");
    app.add_flag("--strict", strict, "reject unknown keys and configs that do not round-trip");
    app.add_option("--jobs", jobs, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    CLI11_PARSE(app, argc, argv);

    if (jobs > 0) nlh::set_threads(jobs);

    const nlh::ParseResult parsed = nlh::parse_config(config_path, strict);
    for (const auto& w : parsed.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!parsed.config) {
        for (const auto& v : parsed.violations) std::fprintf(stderr, "config error: %s\n", v.c_str());
        if (!out_dir.empty()) {
            nlh::RunManifest m;
            m.started = m.finished = nlh::utc_timestamp();
            m.failed_stage = "parse";
            m.error = parsed.violations.empty() ? "invalid config" : parsed.violations.front();
            m.exit_code = nlh::kExitConfig;
            m.outputs.push_back("manifest.json");
            nlh::write_manifest(m, out_dir);
        }
        return nlh::kExitConfig;
    }
    const nlh::ExperimentConfig& cfg = *parsed.config;
    const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(out_dir);

    nlh::RunManifest manifest;
    const int code = nlh::run(cfg, out, manifest);
    if (!manifest.failed_stage.empty()) {
        std::fprintf(stderr, "stage '%s' failed: %s\n", manifest.failed_stage.c_str(), manifest.error.c_str());
    }
    std::printf("%s %s -> %s (exit %d)\n", cfg.command.c_str(), manifest.config_hash.c_str(), out.string().c_str(), code);
    return code;
}
