#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nlh/config.hpp"

namespace nlh {

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    bool ok = true;
};

// Wall-clock log of the pipeline stages; only the manifest sees it.
class StageLog {
public:
    template <class F>
    auto run(const std::string& name, F&& f) {
        current_ = name;
        const double t0 = now();
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                records_.push_back({name, now() - t0, true});
                current_.clear();
            } else {
                auto r = f();
                records_.push_back({name, now() - t0, true});
                current_.clear();
                return r;
            }
        } catch (...) {
            records_.push_back({name, now() - t0, false});
            throw;
        }
    }
    const std::vector<StageRecord>& records() const { return records_; }
    const std::string& current() const { return current_; }

private:
    static double now();
    std::vector<StageRecord> records_;
    std::string current_;
};

struct AssertedProperty {
    std::string name;
    bool holds = false;
    std::string detail;
};

struct CommandResult {
    nlohmann::json result = nlohmann::json::object();
    std::vector<AssertedProperty> asserted;
    std::vector<std::pair<std::string, std::string>> files;  // name, contents
    bool passed() const;
};

// Runs the configured pipeline without touching the filesystem.
CommandResult run_command(const ExperimentConfig& c, StageLog& log);

// Deterministic report body: no timings, no paths.
nlohmann::json build_report(const ExperimentConfig& c, const CommandResult& r);

struct RunManifest {
    std::string config_hash;
    std::string artifact_version = kArtifactVersion;
    std::string command;
    std::string started;
    std::string finished;
    std::vector<StageRecord> stages;
    std::vector<std::string> outputs;
    std::string failed_stage;
    std::string error;
    int exit_code = 0;
    nlohmann::json to_json() const;
};

enum ExitCode : int { kExitOk = 0, kExitAssertion = 1, kExitConfig = 2, kExitStage = 3 };

// Runs the config and writes report.json, the CSV fields and manifest.json into out_dir.
// The manifest is written on every path, naming the failing stage if there is one.
int run(const ExperimentConfig& c, const std::filesystem::path& out_dir, RunManifest& manifest);

std::string utc_timestamp();
void write_manifest(const RunManifest& m, const std::filesystem::path& out_dir);

}  // namespace nlh
