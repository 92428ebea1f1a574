#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "common.hpp"
#include "doctest.h"
#include "ssmt/harness.hpp"

using namespace ssmt;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ssmt_unit_" + name);
    std::filesystem::remove_all(p);
    return p;
}

ExperimentConfig canonical_config() { return ExperimentConfig::from_json(test::config_json("canonical.json")); }

}  // namespace

TEST_CASE("canonical config loads and validates") {
    const auto c = canonical_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.replicas == 10000);
    CHECK(c.bv_quadruplet.has_value());
    CHECK(c.suites.size() == known_suites().size());
}

TEST_CASE("config validation errors") {
    auto c = canonical_config();
    c.suites = {"nope"};
    CHECK_THROWS_AS(c.validate(), Error);
    c = canonical_config();
    c.replicas = 10;
    CHECK_THROWS_AS(c.validate(), Error);
    c.suites = {"levy"};  // no tree replicas needed
    CHECK_NOTHROW(c.validate());
    c = canonical_config();
    c.levels = {0.005};
    CHECK_THROWS_AS(c.validate(), Error);
    Json j = test::config_json("canonical.json");
    j.erase("seed");
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
}

TEST_CASE("environment overrides for N and dt") {
    auto c = canonical_config();
    setenv("SSMT_N", "1234", 1);
    setenv("SSMT_DT", "0.002", 1);
    c.apply_env();
    CHECK(c.replicas == 1234);
    CHECK(c.dt == doctest::Approx(0.002));
    setenv("SSMT_N", "abc", 1);
    CHECK_THROWS_AS(c.apply_env(), Error);
    unsetenv("SSMT_N");
    unsetenv("SSMT_DT");
}

TEST_CASE("config hash is stable and sensitive") {
    auto a = canonical_config(), b = canonical_config();
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.seed += 1;
    CHECK(a.hash() != b.hash());
    CHECK(ExperimentConfig::from_json(a.to_json()).hash() == a.hash());
}

TEST_CASE("check predicates") {
    CHECK(evaluate(Predicate::RelErrLe, 1.04, 1.0, 0.05));
    CHECK_FALSE(evaluate(Predicate::RelErrLe, 1.06, 1.0, 0.05));
    CHECK(evaluate(Predicate::AbsErrLe, 0.0, 0.0, 0.0));
    CHECK(evaluate(Predicate::PGreater, 0.01, 0.0, 0.001));
    CHECK_FALSE(evaluate(Predicate::PGreater, 0.001, 0.0, 0.001));
    CHECK(evaluate(Predicate::PLessEq, 0.001, 0.0, 0.001));
    CHECK(evaluate(Predicate::Less, -1.0, 0.0, 0.0));
    CHECK(evaluate(Predicate::GreaterEq, 5000, 5000, 0.0));
    const auto c = make_check("s", "n", "stat", 2.0, 1.0, 0.1, Predicate::RelErrLe, false);
    CHECK_FALSE(c.pass);
    CHECK_FALSE(c.gate);
}

TEST_CASE("report pass ignores diagnostics, JSON round trip") {
    RunReport r;
    r.config_hash = "abc";
    r.results.push_back(make_check("s", "gated", "x", 1.0, 1.0, 0.0, Predicate::AbsErrLe));
    r.results.push_back(make_check("s", "diag", "x", 2.0, 1.0, 0.0, Predicate::AbsErrLe, false));
    CHECK(r.pass());
    const RunReport back = RunReport::from_json(r.to_json());
    REQUIRE(back.results.size() == 2);
    CHECK(back.find("diag")->gate == false);
    CHECK(back.find("gated")->pass);
    CHECK(back.to_json().at("schema") == "ssmt.report/1");
    r.results[0].pass = false;
    CHECK_FALSE(r.pass());
}

TEST_CASE("empty suite list gives an empty passing report") {
    auto c = canonical_config();
    c.suites.clear();
    const auto out = scratch("empty");
    const RunReport r = run(c, out);
    CHECK(r.results.empty());
    CHECK(r.pass());
    CHECK(std::filesystem::exists(out / "report.json"));
}

TEST_CASE("runs are deterministic across thread counts") {
    auto c = canonical_config();
    c.suites = {"excursion"};
    c.replicas = 1000;
    c.threads = 1;
    const RunReport a = run(c, {});
    c.threads = 3;
    const RunReport b = run(c, {});
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        CHECK(a.results[i].name == b.results[i].name);
        CHECK(a.results[i].value == b.results[i].value);
    }
    CHECK(a.to_json().at("results") == b.to_json().at("results"));
}

TEST_CASE("export_tree writes tree, polylines and overlay") {
    auto q = test::canonical();
    const auto out = scratch("export");
    SUBCASE("single segment") {
        q.events.clear();
        const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), 1);
        const auto p = export_tree(t, 0.05, 0.5, out);
        const Json tj = read_json_file(p.tree);
        CHECK(tj.at("nodes").size() == 1);
        std::ifstream f(p.polylines);
        std::string header;
        std::getline(f, header);
        CHECK(header == "node,t,X");
    }
    SUBCASE("overlay first hits equal the hitting line") {
        const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), 8);
        const auto p = export_tree(t, 0.05, 0.5, out);
        const Json o = read_json_file(p.overlay);
        const auto h = hitting_line(t, 0.5);
        REQUIRE(o.at("points").size() == h.count());
        for (const auto& pt : o.at("points")) CHECK(pt.at("kind") == "first_hit");
        CHECK(tree_from_json(read_json_file(p.tree)).index == t.index);
    }
}
