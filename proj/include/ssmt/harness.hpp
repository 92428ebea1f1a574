#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssmt/io.hpp"
#include "ssmt/spine.hpp"

namespace ssmt {

struct ExperimentConfig {
    CharacteristicQuadruplet quadruplet;
    std::optional<CharacteristicQuadruplet> bv_quadruplet;  // structural checks in BV mode
    Mode mode = Mode::Diffusion;
    double dt = 1e-3;
    double x_min = 1e-3;
    std::vector<double> levels{0.5, 1.0, 2.0};
    std::size_t replicas = 10000;
    std::uint64_t seed = 0;
    std::vector<std::string> suites;
    double spine_level = 0.5;
    unsigned threads = 0;  // 0: hardware concurrency

    static ExperimentConfig from_json(const Json& j);
    static ExperimentConfig load(const std::filesystem::path& p);
    // SSMT_N and SSMT_DT
    void apply_env();
    void validate() const;
    Json to_json() const;
    std::string hash() const;
    TreeOptions tree_options() const;
};

const std::vector<std::string>& known_suites();

enum class Predicate { RelErrLe, AbsErrLe, PGreater, PLessEq, Less, GreaterEq };
const char* to_string(Predicate p);

struct CheckResult {
    std::string suite;
    std::string name;
    std::string statistic;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    Predicate predicate = Predicate::AbsErrLe;
    bool pass = false;
    bool gate = true;  // false: diagnostic, reported but not part of the exit code
    std::string note;
};

bool evaluate(Predicate p, double value, double target, double tolerance);

CheckResult make_check(std::string suite, std::string name, std::string statistic, double value, double target,
                       double tolerance, Predicate p, bool gate = true);

struct RunReport {
    std::string config_hash;
    Json config;
    Json environment;
    std::vector<CheckResult> results;
    bool pass() const;
    const CheckResult* find(const std::string& name) const;
    Json to_json() const;
    static RunReport from_json(const Json& j);
};

// Runs the selected suites; writes report.json and exports under `out`
// unless `out` is empty.
RunReport run(const ExperimentConfig& cfg, const std::filesystem::path& out);

std::vector<CheckResult> run_levy_suite(const ExperimentConfig& cfg);

// Tree JSON, decoration polylines CSV and an overlay JSON with the first-hit
// points of level x, the local-time atoms of level x and (optionally) one
// marked spine.
struct ExportPaths {
    std::filesystem::path tree, polylines, overlay;
};
ExportPaths export_tree(const DecoratedTree& tree, double resolution, double x, const std::filesystem::path& dir,
                        const std::string& stem = "tree", std::uint64_t mark_seed = 0);

void write_report_table(std::ostream& os, const RunReport& r);

}  // namespace ssmt
