#include <cmath>

#include "common.hpp"
#include "doctest.h"
#include "ssmt/tree.hpp"

using namespace ssmt;

TEST_CASE("canonical cumulant: gamma0, omega and their values") {
    const auto q = test::canonical();
    CHECK(cumulant(q, 0.0) == doctest::Approx(0.35));
    const CumulantAnalysis a = analyze_cumulant(q);
    CHECK(a.gamma0 == doctest::Approx(1.039530).epsilon(1e-5));
    CHECK(a.kappa_gamma0 == doctest::Approx(-0.451076).epsilon(1e-5));
    REQUIRE(a.omega);
    CHECK(*a.omega == doctest::Approx(0.251426).epsilon(1e-5));
    CHECK(std::abs(cumulant(q, *a.omega)) < 1e-10);
    CHECK(*a.kappa_prime_omega == doctest::Approx(-1.180237).epsilon(1e-5));
    CHECK(*a.omega < a.gamma0);
}

TEST_CASE("cumulant derivative matches a central difference") {
    const auto q = test::canonical();
    for (double g : {0.2, 0.8, 1.5}) {
        const double h = 1e-6;
        CHECK(cumulant_derivative(q, g) == doctest::Approx((cumulant(q, g + h) - cumulant(q, g - h)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("complex cumulant agrees on the real line") {
    const auto q = test::canonical();
    CHECK(cumulant(q, std::complex<double>(0.7, 0.0)).real() == doctest::Approx(cumulant(q, 0.7)));
}

TEST_CASE("first projection adds one atom per non-death event") {
    auto q = test::canonical();
    const auto l0 = q.first_projection();
    CHECK(l0.jumps.size() == 2);
    CHECK(l0.slope() == doctest::Approx(-0.5));
    CHECK(q.atom_events() == std::vector<int>{-1, 0});
    q.events.push_back({0.2, std::nullopt, {}});
    CHECK(q.death_rate() == doctest::Approx(0.2));
    CHECK(q.first_projection().kill == doctest::Approx(q.base.kill + 0.2));
}

TEST_CASE("spine reference characteristics have exponent kappa(gamma + .)") {
    const auto q = test::canonical();
    const double g0 = analyze_cumulant(q).gamma0;
    const auto r = spine_reference_characteristics(q, g0);
    for (double g : {-0.5, 0.0, 0.3}) CHECK(evaluate_exponent(r, g) == doctest::Approx(cumulant(q, g0 + g)).epsilon(1e-10));
}

TEST_CASE("no events: the tree is a single segment") {
    auto q = test::canonical();
    q.events.clear();
    const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), 3);
    CHECK(t.nodes.size() == 1);
    CHECK(t.root().label.empty());
    CHECK(t.root().decoration.value_at(0.0) == doctest::Approx(1.0));
}

TEST_CASE("property: tree structure over seeds") {
    for (Mode m : {Mode::Diffusion, Mode::BV}) {
        const auto q = m == Mode::BV ? test::bv() : test::canonical();
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto t = build_tree(q, 1.0, test::options(m), s);
            for (std::size_t i = 0; i < t.nodes.size(); ++i) {
                const auto& n = t.nodes[i];
                CHECK(t.find(n.label) == i);
                CHECK(n.generation == n.label.size());
                if (n.parent < 0) continue;
                const auto& p = t.nodes[static_cast<std::size_t>(n.parent)];
                CHECK(n.birth_size >= t.x_min);
                CHECK(n.attach_age <= p.lifetime + 1e-12);
                CHECK(n.decoration.value_at(0.0) == doctest::Approx(n.birth_size));
                CHECK(t.ancestor_or_self(static_cast<std::size_t>(n.parent), i));
            }
            for (const auto& n : t.nodes)
                for (const auto& a : n.offspring)
                    if (a.node >= 0) CHECK(a.size == doctest::Approx(a.parent_before * 0.5));
        }
    }
}

TEST_CASE("trees are reproducible under a seed") {
    const auto q = test::canonical();
    const auto a = build_tree(q, 1.0, test::options(Mode::Diffusion), 42);
    const auto b = build_tree(q, 1.0, test::options(Mode::Diffusion), 42);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].label == b.nodes[i].label);
        CHECK(a.nodes[i].lifetime == b.nodes[i].lifetime);
    }
}

TEST_CASE("weighted length with gamma = alpha is the total lifetime") {
    const auto q = test::bv();
    const auto t = build_tree(q, 1.0, test::options(Mode::BV), 5);
    double total = 0.0;
    for (const auto& n : t.nodes) total += n.lifetime;
    CHECK(weighted_length(t, q.alpha) == doctest::Approx(total));
}

TEST_CASE("tree JSON round trip keeps the node map") {
    const auto q = test::canonical();
    const auto t = build_tree(q, 1.0, test::options(Mode::Diffusion), 11);
    const auto r = tree_from_json(tree_to_json(t, 0.01));
    REQUIRE(r.nodes.size() == t.nodes.size());
    CHECK(r.index == t.index);
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        CHECK(r.nodes[i].parent == t.nodes[i].parent);
        CHECK(r.nodes[i].lifetime == doctest::Approx(t.nodes[i].lifetime));
        CHECK(r.nodes[i].attach_age == doctest::Approx(t.nodes[i].attach_age));
    }
}

TEST_CASE("quadruplet JSON round trip and validation") {
    const auto q = test::canonical();
    CHECK(quadruplet_from_json(to_json(q)) == q);
    Json bad = to_json(q);
    bad["base"]["kill"] = -1.0;
    CHECK_THROWS_AS(quadruplet_from_json(bad), Error);
}

TEST_CASE("label strings") {
    CHECK(label_string({}) == "0");
    CHECK(label_string({1, 2}) == "1.2");
    CHECK(label_string({1, 2}) != label_string({12}));
}
