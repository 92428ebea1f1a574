#include <cmath>

#include "common.hpp"
#include "doctest.h"
#include "ssmt/spine.hpp"

using namespace ssmt;

namespace {

TreeLevelMeasure two_atoms() {
    TreeLevelMeasure m;
    m.level = 1.0;
    NodeProfile a;
    a.node = 0;
    a.profile.atoms = {{0.5, 1.0}};
    NodeProfile b;
    b.node = 1;
    b.profile.atoms = {{0.25, 3.0}};
    m.nodes = {a, b};
    return m;
}

}  // namespace

TEST_CASE("marked point from a single atom") {
    TreeLevelMeasure m;
    NodeProfile a;
    a.node = 4;
    a.profile.atoms = {{0.7, 2.0}};
    m.nodes = {a};
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
        const auto p = sample_marked_point(m, rng);
        CHECK(p.node == 4);
        CHECK(p.age == doctest::Approx(0.7));
    }
}

TEST_CASE("marked points follow the atom masses") {
    const auto m = two_atoms();
    Rng rng(2);
    const int n = 10000;
    int second = 0;
    for (int i = 0; i < n; ++i) second += sample_marked_point(m, rng).node == 1;
    const double p = 0.75, se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(second / double(n) - p) < 4 * se);
}

TEST_CASE("empty measure is an error") {
    TreeLevelMeasure m;
    Rng rng(3);
    try {
        sample_marked_point(m, rng);
        FAIL("expected EmptyMeasure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyMeasure);
    }
}

TEST_CASE("property: spines start at 1, end near x and are deterministic") {
    const auto q = test::canonical();
    const double x = 0.5;
    int checked = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), s);
        const auto m = level_local_time(t, x, kDefaultWindow);
        if (!(m.total() > 0.0)) continue;
        Rng rng(s);
        const auto mp = sample_marked_point(m, rng);
        const auto a = extract_spine(t, mp.node, mp.age, 0.01);
        const auto b = extract_spine(t, mp.node, mp.age, 0.01);
        CHECK(a.length == b.length);
        CHECK(a.max_value == b.max_value);
        REQUIRE(!a.path.empty());
        CHECK(a.path.front().second == doctest::Approx(1.0));
        // windowed marking: endpoint within the window exp(+-eps) of x
        CHECK(std::abs(std::log(a.end_value / x)) <= kDefaultWindow + 1e-6);
        CHECK(a.max_value >= std::max(1.0, a.end_value) - 1e-12);
        CHECK(a.min_value <= std::min(1.0, a.end_value) + 1e-12);
        // concatenated segment lengths equal z'
        double len = 0.0;
        std::size_t u = mp.node;
        double cut = mp.age;
        while (true) {
            len += cut;
            if (t.nodes[u].parent < 0) break;
            cut = t.nodes[u].attach_age;
            u = static_cast<std::size_t>(t.nodes[u].parent);
        }
        CHECK(a.length == doctest::Approx(len));
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("reference spines end at x") {
    const auto q = test::canonical();
    const auto a = analyze_cumulant(q);
    ConditionOptions co;
    const auto s = reference_spines(q, a.gamma0, 0.5, 20, co, 7);
    REQUIRE(s.size() == 20);
    for (const auto& y : s) CHECK(y.end_value == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("marking at x = 1: max Y and 1/min Y are at least 1") {
    const auto q = test::canonical();
    const auto a = analyze_cumulant(q);
    ConditionOptions co;
    for (const auto& y : reference_spines(q, a.gamma0, 1.0, 20, co, 9)) {
        CHECK(y.max_value >= 1.0 - 1e-12);
        CHECK(1.0 / y.min_value >= 1.0 - 1e-12);
    }
}

TEST_CASE("no branching: reference law is the pssMp conditioned to hit x") {
    auto q = test::canonical();
    q.events.clear();
    // kappa = psi; the reference characteristics at gamma are the Esscher tilt of psi
    const auto a = analyze_cumulant(q);
    const auto r = spine_reference_characteristics(q, a.gamma0);
    const auto t = esscher_tilt(q.first_projection(), a.gamma0);
    for (double g : {-0.5, 0.0, 0.5}) CHECK(evaluate_exponent(r, g) == doctest::Approx(evaluate_exponent(t, g)));
}

TEST_CASE("spine law test flags different laws") {
    const auto q = test::canonical();
    const auto a = analyze_cumulant(q);
    ConditionOptions co;
    const auto s1 = reference_spines(q, a.gamma0, 0.5, 1500, co, 11);
    const auto s2 = reference_spines(q, a.gamma0, 0.5, 1500, co, 12);
    const auto s3 = reference_spines(q, a.gamma0, 0.25, 1500, co, 13);
    CHECK(spine_law_test(s1, s2).pass(1e-3));
    CHECK_FALSE(spine_law_test(s1, s3).pass(1e-3));
}
