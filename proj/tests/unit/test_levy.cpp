#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ssmt/levy.hpp"
#include "ssmt/stats.hpp"

using namespace ssmt;

namespace {

LevyCharacteristics closed_form() {
    LevyCharacteristics c;
    c.sigma2 = 1.0;
    c.kill = 0.5;
    return c;
}

LevyCharacteristics canonical_base() {
    LevyCharacteristics c;
    c.sigma2 = 1.0;
    c.drift = -1.1931471805599454;
    c.jumps = {{std::log(0.5), 0.4}};
    c.kill = 0.25;
    return c;
}

LevyCharacteristics bv_base() {
    LevyCharacteristics c;
    c.drift = 1.0;
    c.jumps = {{-1.5, 0.7}};
    c.kill = 0.3;
    return c;
}

}  // namespace

TEST_CASE("exponent of Brownian motion with drift and killing") {
    LevyCharacteristics c = closed_form();
    c.drift = 0.3;
    for (double g : {-2.0, -0.5, 0.0, 1.0, 2.5}) CHECK(evaluate_exponent(c, g) == doctest::Approx(0.5 * g * g + 0.3 * g - 0.5));
    CHECK(evaluate_exponent(c, 0.0) == doctest::Approx(-c.kill));
}

TEST_CASE("real and complex exponents agree on the real line") {
    const auto c = canonical_base();
    for (double g : {-1.0, 0.0, 0.7, 2.0}) CHECK(evaluate_exponent(c, std::complex<double>(g, 0.0)).real() == doctest::Approx(evaluate_exponent(c, g)));
}

TEST_CASE("exponent derivative matches a central difference") {
    const auto c = canonical_base();
    for (double g : {-1.0, 0.0, 0.5, 1.5}) {
        const double h = 1e-6;
        const double fd = (evaluate_exponent(c, g + h) - evaluate_exponent(c, g - h)) / (2 * h);
        CHECK(exponent_derivative(c, g) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("slope nets out the compensator of small atoms") {
    LevyCharacteristics c = canonical_base();
    c.jumps[0].rate = 1.0;  // base atom plus the branching atom of the canonical first projection
    CHECK(c.slope() == doctest::Approx(-0.5));
    c.jumps.push_back({-2.0, 3.0});  // |y| > 1: not compensated
    CHECK(c.slope() == doctest::Approx(-0.5));
}

TEST_CASE("validate rejects bad characteristics") {
    LevyCharacteristics c;
    c.sigma2 = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.sigma2 = 0.0;
    c.jumps = {{1.0, 0.0}};
    CHECK_THROWS_AS(c.validate(), Error);
    c.jumps = {{1.0, 1.0}};
    c.kill = std::nan("");
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("Esscher tilt shifts the exponent") {
    const auto c = canonical_base();
    for (double beta : {-0.1, 0.1}) {
        const auto t = esscher_tilt(c, beta);
        for (double g = -1.0; g <= 1.0; g += 0.25) CHECK(std::abs(evaluate_exponent(t, g) - evaluate_exponent(c, beta + g)) < 1e-12);
    }
}

TEST_CASE("Esscher tilt with psi(beta) > 0 is rejected") {
    try {
        esscher_tilt(closed_form(), 3.0);
        FAIL("expected InvalidTilt");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidTilt);
    }
}

TEST_CASE("dual negates the exponent argument") {
    const auto c = canonical_base();
    const auto d = dual(c);
    for (double g : {-0.8, 0.0, 0.6}) CHECK(evaluate_exponent(d, g) == doctest::Approx(evaluate_exponent(c, -g)));
}

TEST_CASE("Fourier potential of the closed-form model is exp(-|y|)") {
    const LevelGrid g{-5.0, 5.0, 201};
    const auto v = potential_fourier(closed_form(), g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) err = std::max(err, std::abs(v.values[i] - std::exp(-std::abs(g.at(i)))));
    CHECK(err < 1e-6);
}

TEST_CASE("closed-form and Fourier potentials agree with drift") {
    LevyCharacteristics c = closed_form();
    c.drift = -0.4;
    const LevelGrid g{-3.0, 3.0, 61};
    const auto a = potential_closed_form(c, g), b = potential_fourier(c, g);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-6));
}

TEST_CASE("potential table interpolation and grid errors") {
    const auto v = potential_fourier(closed_form(), {-1.0, 1.0, 21});
    CHECK(v.at(0.05) == doctest::Approx(0.5 * (v.values[10] + v.values[11])));
    try {
        v.at(2.0);
        FAIL("expected OutOfGrid");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutOfGrid);
    }
}

TEST_CASE("hitting probability oracle") {
    const auto v = potential_fourier(closed_form(), {-3.0, 3.0, 601});
    CHECK(hitting_probability(v, 0.0, 0.0) == doctest::Approx(1.0));
    CHECK(hitting_probability(v, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    CHECK(hitting_probability(v, 0.5, -0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("Esscher tilt of the potential density") {
    const auto c = canonical_base();
    const double beta = -0.1;
    const LevelGrid g{-4.0, 4.0, 81};
    const auto v = potential_fourier(c, g), vb = potential_fourier(esscher_tilt(c, beta), g);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(vb.values[i] == doctest::Approx(std::exp(beta * g.at(i)) * v.values[i]).epsilon(1e-4));
}

TEST_CASE("Cramer root of the closed-form model") {
    const CramerRoot r = cramer_root(closed_form());
    CHECK(r.rho == doctest::Approx(-1.0));
    CHECK(r.limit() == doctest::Approx(1.0));
    CHECK(evaluate_exponent(closed_form(), r.rho) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sample paths are deterministic under a seed") {
    const auto c = canonical_base();
    const auto a = sample_path(c, 0.0, Mode::Diffusion, 1e-3, 7);
    const auto b = sample_path(c, 0.0, Mode::Diffusion, 1e-3, 7);
    const auto d = sample_path(c, 0.0, Mode::Diffusion, 1e-3, 8);
    CHECK(a == b);
    CHECK_FALSE(a == d);
}

TEST_CASE("BV path parts are continuous between jumps") {
    const auto c = bv_base();
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto p = sample_path(c, 0.3, Mode::BV, 1e-3, s);
        double t = 0.0, v = p.start;
        p.for_each_part([&](const LinearPart& lp) {
            CHECK(lp.t0 == doctest::Approx(t));
            CHECK(lp.v0 == doctest::Approx(v));
            t = lp.t0 + lp.h;
            v = lp.v1 + lp.jump;
            return true;
        });
        CHECK(t == doctest::Approx(p.lifetime));
        CHECK(v == doctest::Approx(p.terminal()));
    }
}

TEST_CASE("reversing a path twice gives it back") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 3);
    const auto r = reverse_path(p);
    CHECK(r.start == doctest::Approx(p.terminal()));
    CHECK(r.lifetime == doctest::Approx(p.lifetime));
    const auto rr = reverse_path(r);
    CHECK(r.terminal() == doctest::Approx(p.start).epsilon(1e-12));
    CHECK(rr.start == doctest::Approx(p.start));
    CHECK(rr.terminal() == doctest::Approx(p.terminal()));
    CHECK(rr.pieces.size() == p.pieces.size());
}

TEST_CASE("window time of a linear stretch") {
    LinearPart p;
    p.h = 2.0;
    p.v0 = -1.0;
    p.v1 = 1.0;  // slope 1
    CHECK(window_time(p, 0.0, 0.1) == doctest::Approx(0.2));
    CHECK(window_time(p, 5.0, 0.1) == doctest::Approx(0.0));
    p.v1 = p.v0 = 0.0;
    CHECK(window_time(p, 0.0, 0.1) == doctest::Approx(2.0));
}

TEST_CASE("exact BV local time: one atom of mass 1/|slope| per passage") {
    PathSkeleton p;
    p.mode = Mode::BV;
    p.start = -1.0;
    p.pieces = {{2.0, 1.0, true, -3.0, 0}, {1.0, 2.0, false, 0.0, -1}};
    p.lifetime = 3.0;
    // passes 0 at time 1 with slope 1; second piece starts at -2 and ends at 0 (kill point: half atom)
    const auto lt = local_time(p, 0.0, kExact);
    REQUIRE(lt.atoms.size() == 2);
    CHECK(lt.atoms[0].time == doctest::Approx(1.0));
    CHECK(lt.atoms[0].mass == doctest::Approx(1.0));
    CHECK(lt.atoms[1].mass == doctest::Approx(0.25));
}

TEST_CASE("occupation density formula on a BV path") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 11);
    TestFunction f{[](double y) { return std::exp(-y * y); }, {}};
    const auto r = occupation_check(p, f, kExact, 1e-3);
    CHECK(r.lhs == doctest::Approx(r.rhs).epsilon(1e-3));
}

TEST_CASE("property: windowed local time integrates to the lifetime") {
    const auto c = canonical_base();
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto p = sample_path(c, 0.0, Mode::Diffusion, 1e-3, s);
        TestFunction one{[](double) { return 1.0; }, {}};
        const auto r = occupation_check(p, one, 1.0 / 64.0, 1e-2);
        CHECK(r.rhs == doctest::Approx(r.lhs).epsilon(0.05));
    }
}
