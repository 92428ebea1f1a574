#include <cmath>

#include "doctest.h"
#include "ssmt/lamperti.hpp"

using namespace ssmt;

namespace {

LevyCharacteristics bv_base() {
    LevyCharacteristics c;
    c.drift = 1.0;
    c.jumps = {{-1.5, 0.7}};
    c.kill = 0.3;
    return c;
}

}  // namespace

TEST_CASE("constant-slope path has the explicit Lamperti time change") {
    // xi_s = s on [0, 1]: t(s) = (e^{alpha s} - 1)/alpha, X = e^s
    PathSkeleton p;
    p.mode = Mode::BV;
    p.pieces = {{1.0, 1.0, false, 0.0, -1}};
    p.lifetime = 1.0;
    for (double alpha : {0.5, 1.0, 2.0}) {
        const PssmpPath x = to_pssmp(p, alpha, 1.0);
        CHECK(x.lifetime() == doctest::Approx(std::expm1(alpha) / alpha));
        CHECK(x.time_of(0.5) == doctest::Approx(std::expm1(0.5 * alpha) / alpha));
        CHECK(x.levy_time(x.time_of(0.3)) == doctest::Approx(0.3));
        CHECK(x.value_at(x.time_of(0.5)) == doctest::Approx(std::exp(0.5)));
    }
}

TEST_CASE("self-similarity: start c scales time by c^alpha and size by c") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 5);
    const double alpha = 1.0, c = 3.0;
    const PssmpPath a = to_pssmp(p, alpha, 1.0), b = to_pssmp(p, alpha, c);
    CHECK(b.lifetime() == doctest::Approx(std::pow(c, alpha) * a.lifetime()));
    for (double f : {0.1, 0.4, 0.8}) {
        const double t = f * a.lifetime();
        CHECK(b.value_at(std::pow(c, alpha) * t) == doctest::Approx(c * a.value_at(t)));
    }
}

TEST_CASE("Lamperti round trip returns the source") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 9);
    const PssmpPath x = to_pssmp(p, 1.0, 1.0);
    CHECK(from_pssmp(x) == p);
}

TEST_CASE("inverting a sampled polyline recovers the Levy values") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 21);
    const PssmpPath x = to_pssmp(p, 1.0, 1.0);
    const PssmpPath y = PssmpPath::from_samples(1.0, x.polyline(1e-3));
    const PathSkeleton q = from_pssmp(y);
    CHECK(q.lifetime == doctest::Approx(p.lifetime).epsilon(1e-3));
    CHECK(q.terminal() == doctest::Approx(p.terminal()).epsilon(1e-3));
}

TEST_CASE("weighted integral with gamma = alpha is the Levy lifetime") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 2);
    const PssmpPath x = to_pssmp(p, 1.0, 2.0);
    // start^gamma int e^{gamma xi} ds with gamma = 0 is the Levy lifetime
    CHECK(x.weighted_integral(0.0) == doctest::Approx(p.lifetime));
    // gamma = alpha gives the pssMp lifetime
    CHECK(x.weighted_integral(1.0) == doctest::Approx(x.lifetime()));
}

TEST_CASE("value is zero at and after the lifetime") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 4);
    const PssmpPath x = to_pssmp(p, 1.0, 1.0);
    CHECK(x.value_at(x.lifetime()) == 0.0);
    CHECK(x.value_at(x.lifetime() + 1.0) == 0.0);
    CHECK(x.value_at(0.0) == doctest::Approx(1.0));
}

TEST_CASE("polyline ends at (z, 0) and respects the resolution") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 6);
    const PssmpPath x = to_pssmp(p, 1.0, 1.0);
    const auto pl = x.polyline(0.01);
    REQUIRE(pl.size() >= 2);
    CHECK(pl.back().first == doctest::Approx(x.lifetime()));
    CHECK(pl.back().second == 0.0);
    for (std::size_t i = 1; i < pl.size(); ++i) CHECK(pl[i].first - pl[i - 1].first <= 0.01 + 1e-12);
}

TEST_CASE("local time transfer keeps masses and maps atom times") {
    const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 8);
    const PssmpPath x = to_pssmp(p, 1.0, 1.0);
    const auto lt = local_time(p, 0.0, kExact);
    const auto tr = transfer_local_time(lt, x);
    REQUIRE(tr.atoms.size() == lt.atoms.size());
    for (std::size_t i = 0; i < lt.atoms.size(); ++i) {
        CHECK(tr.atoms[i].mass == doctest::Approx(lt.atoms[i].mass));
        CHECK(tr.atoms[i].time == doctest::Approx(x.time_of(lt.atoms[i].time)));
    }
}

TEST_CASE("property: pssMp occupation formula") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto p = sample_path(bv_base(), 0.0, Mode::BV, 1e-3, 100 + s);
        const PssmpPath x = to_pssmp(p, 1.0, 1.0);
        TestFunction f{[](double v) { return v * v; }, {}};
        const auto r = pssmp_occupation_check(x, f, kExact, 1e-3);
        CHECK(r.lhs == doctest::Approx(r.rhs).epsilon(2e-3));
    }
}
