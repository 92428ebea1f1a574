#include <cmath>

#include "common.hpp"
#include "doctest.h"
#include "ssmt/measures.hpp"

using namespace ssmt;

namespace {

const MeanFormulas& formulas() {
    static const MeanFormulas f = [] {
        const auto q = test::canonical();
        return make_mean_formulas(q, analyze_cumulant(q));
    }();
    return f;
}

}  // namespace

TEST_CASE("canonical mean formulas") {
    const auto& f = formulas();
    CHECK(f.v.at(0.0) == doctest::Approx(0.753742).epsilon(1e-5));
    CHECK(f.mean_weighted_length() == doctest::Approx(1.0 / 0.451076).epsilon(1e-5));
    CHECK(f.mean_level_individuals() == doctest::Approx(1.24542).epsilon(1e-5));
    CHECK(f.z_integral() == doctest::Approx(0.261442).epsilon(1e-5));
    CHECK(f.mean_local_time(1.0) == doctest::Approx(0.938728).epsilon(1e-5));
    CHECK(f.mean_hits(1.0) == doctest::Approx(1.0));
    CHECK(f.z_integral() == doctest::Approx(1.0 / f.v.at(0.0) - 1.0 / f.w_gamma0.at(0.0)));
}

TEST_CASE("w^(gamma0) is the kappa^(gamma0) potential: e^{gamma y} scaling between tilts") {
    const auto q = test::canonical();
    const auto& f = formulas();
    const double g = f.analysis.gamma0;
    const LevelGrid grid{-2.0, 2.0, 41};
    const auto w1 = potential_w(q, g - 0.1, grid);
    const auto w0 = potential_w(q, g, grid);
    // both potentials exist; w^(gamma) integrates to -1/kappa(gamma) over the line
    double s = 0.0;
    const auto wide = potential_w(q, g, {-40.0, 40.0, 8001});
    for (std::size_t i = 0; i < wide.grid.n; ++i) s += wide.values[i] * wide.grid.step();
    CHECK(s == doctest::Approx(-1.0 / cumulant(q, g)).epsilon(1e-3));
    CHECK(w1.values.size() == w0.values.size());
}

TEST_CASE("the untilt shift at omega does not depend on delta") {
    const auto q = test::canonical();
    const double w = *formulas().analysis.omega;
    const LevelGrid grid{-1.0, 1.0, 21};
    const auto a = potential_w(q, w, grid, 0.05), b = potential_w(q, w, grid, 0.1);
    for (std::size_t i = 0; i < grid.n; ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-4));
}

TEST_CASE("levels below 10 x_min are rejected") {
    const auto t = build_tree(test::canonical(), 1.0, test::options(Mode::Diffusion), 1);
    try {
        level_local_time(t, 5e-3, kDefaultWindow);
        FAIL("expected LevelTooLow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::LevelTooLow);
    }
    CHECK_THROWS_AS(hitting_line(t, 5e-3), Error);
}

TEST_CASE("property: hitting line is an antichain of first hits") {
    const auto q = test::canonical();
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), s);
        const auto h = hitting_line(t, 0.5);
        for (std::size_t i = 0; i < h.points.size(); ++i)
            for (std::size_t j = 0; j < h.points.size(); ++j) {
                if (i == j) continue;
                const auto& a = h.points[i];
                const auto& b = h.points[j];
                CHECK_FALSE((a.node == b.node));
                if (t.ancestor_or_self(a.node, b.node)) {
                    // b descends from a: it must branch off before a's hit
                    std::size_t c = b.node;
                    while (t.nodes[c].parent != static_cast<long>(a.node)) c = static_cast<std::size_t>(t.nodes[c].parent);
                    CHECK(t.nodes[c].attach_age < a.age);
                }
            }
        for (const auto& p : h.points) CHECK(t.nodes[p.node].decoration.value_at(p.age) == doctest::Approx(0.5).epsilon(0.05));
    }
}

TEST_CASE("root hits level 1 at age 0") {
    const auto t = build_tree(test::canonical(), 1.0, test::options(Mode::Diffusion), 2);
    const auto h = hitting_line(t, 1.0);
    REQUIRE(h.count() == 1);
    CHECK(h.points[0].node == 0);
    CHECK(h.points[0].age == 0.0);
}

TEST_CASE("property: level local time is the sum of node local times") {
    const auto q = test::canonical();
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), s);
        const auto m = level_local_time(t, 0.5, kDefaultWindow);
        double sum = 0.0;
        for (const auto& n : t.nodes) sum += node_local_time(n, 0.5, kDefaultWindow);
        CHECK(m.total() == doctest::Approx(sum));
        CHECK(level_local_time_total(t, 0.5, kDefaultWindow) == doctest::Approx(sum));
    }
}

TEST_CASE("node level is log(x / birth size) in the node's Levy coordinates") {
    const auto t = build_tree(test::canonical(), 1.0, test::options(Mode::Diffusion), 6);
    for (const auto& n : t.nodes)
        CHECK(node_level(n, 0.5) == doctest::Approx(n.decoration.source().start + std::log(0.5 / n.birth_size)));
}

TEST_CASE("harmonic germs of a tree that never enters (0, x_cut]") {
    auto q = test::canonical();
    q.events.clear();
    const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), 4);
    // a single segment dies by killing, usually before getting small
    const auto g = harmonic_germs(t, 0.02);
    CHECK(g.size() <= 1);
    const double proxy = harmonic_mass_proxy(t, 0.3, 0.02);
    double expected = 0.0;
    for (const auto& x : g) expected += std::pow(x.value, 0.3);
    CHECK(proxy == doctest::Approx(expected));
}

TEST_CASE("pearson correlation") {
    CHECK(pearson({{1, 2}, {2, 4}, {3, 6}}) == doctest::Approx(1.0));
    CHECK(pearson({{1, 3}, {2, 2}, {3, 1}}) == doctest::Approx(-1.0));
}
