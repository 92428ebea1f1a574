#include <cmath>
#include <random>

#include "doctest.h"
#include "ssmt/common.hpp"
#include "ssmt/stats.hpp"

using namespace ssmt;

TEST_CASE("Kolmogorov tail at known points") {
    CHECK(kolmogorov_q(1.0) == doctest::Approx(0.269999).epsilon(1e-5));
    CHECK(kolmogorov_q(1.358) == doctest::Approx(0.05).epsilon(1e-2));
    CHECK(kolmogorov_q(0.0) == doctest::Approx(1.0));
}

TEST_CASE("chi-square survival function") {
    CHECK(chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(chi_square_sf(5.991465, 2) == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));
}

TEST_CASE("Welford accumulator and merge") {
    MeanAccumulator a, b, all;
    for (int i = 0; i < 10; ++i) {
        (i < 4 ? a : b).add(i);
        all.add(i);
    }
    a.merge(b);
    CHECK(a.count() == 10);
    CHECK(a.mean() == doctest::Approx(4.5));
    CHECK(a.variance() == doctest::Approx(all.variance()));
    CHECK(all.variance() == doctest::Approx(55.0 / 6.0));
    CHECK(all.std_error() == doctest::Approx(std::sqrt(55.0 / 6.0 / 10.0)));
}

TEST_CASE("KS one-sample: uniform data passes, shifted data fails") {
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(2000), y(2000);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = 0.1 + u(rng);
    auto cdf = [](double t) { return std::clamp(t, 0.0, 1.0); };
    CHECK(ks_one_sample(x, cdf).p_value > 0.001);
    CHECK(ks_one_sample(y, cdf).p_value < 0.001);
}

TEST_CASE("KS statistic of a single point") {
    const auto r = ks_one_sample({0.5}, [](double t) { return std::clamp(t, 0.0, 1.0); });
    CHECK(r.statistic == doctest::Approx(0.5));
}

TEST_CASE("weighted KS reduces to the unweighted one with unit weights") {
    Rng rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> a(500), b(700);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    const auto u = ks_two_sample(a, b);
    const auto w = ks_two_sample_weighted(a, std::vector<double>(a.size(), 2.0), b, {});
    CHECK(w.statistic == doctest::Approx(u.statistic));
    CHECK(w.p_value == doctest::Approx(u.p_value));
    CHECK(w.n_eff == doctest::Approx(500.0 * 700.0 / 1200.0));
}

TEST_CASE("weighted KS sees the reweighted law") {
    // exponential(1) sample reweighted by e^{-x}/2 ... times 2 is exponential(2)
    Rng rng(3);
    std::exponential_distribution<double> e1(1.0), e2(2.0);
    std::vector<double> a(20000), wa(20000), b(5000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = e1(rng);
        wa[i] = std::exp(-a[i]);
    }
    for (auto& v : b) v = e2(rng);
    CHECK(ks_two_sample_weighted(a, wa, b, {}).p_value > 0.001);
    CHECK(ks_two_sample(a, b).p_value < 0.001);
}

TEST_CASE("chi-square goodness of fit with pooling") {
    const std::vector<double> probs{0.5, 0.3, 0.15, 0.04, 0.01};
    const std::vector<double> exact{500, 300, 150, 40, 10};
    const auto r = chi_square_gof(exact, probs);
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.p_value == doctest::Approx(1.0));
    const std::vector<double> off{600, 250, 100, 40, 10};
    CHECK(chi_square_gof(off, probs).p_value < 0.001);
}

TEST_CASE("chi-square with an estimated reference law is deflated") {
    const std::vector<double> probs{0.5, 0.5};
    const std::vector<double> obs{540, 460};
    const auto plain = chi_square_gof(obs, probs);
    const auto ref = chi_square_gof(obs, probs, 0, 5.0, 1000.0);
    CHECK(ref.statistic == doctest::Approx(plain.statistic / 2.0));
    CHECK(ref.p_value > plain.p_value);
}

TEST_CASE("two-sample chi-square") {
    CHECK(chi_square_two_sample({100, 200, 300}, {100, 200, 300}).p_value == doctest::Approx(1.0));
    CHECK(chi_square_two_sample({300, 200, 100}, {100, 200, 300}).p_value < 1e-6);
}

TEST_CASE("seed splitting is order independent and distinct") {
    CHECK(split_seed(5, 3) == split_seed(5, 3));
    CHECK(split_seed(5, 3) != split_seed(5, 4));
    CHECK(split_seed(5, 3) != split_seed(6, 3));
    auto a = make_rng(9, 2), b = make_rng(9, 2);
    CHECK(a() == b());
    CHECK(label_seed(1, {1, 2}) != label_seed(1, {2, 1}));
}

TEST_CASE("error kinds carry their names") {
    const Error e(ErrorKind::EmptyMeasure, "nothing");
    CHECK(e.kind() == ErrorKind::EmptyMeasure);
    CHECK(std::string(e.what()).find("nothing") != std::string::npos);
    CHECK(mode_from_string("BV") == Mode::BV);
    CHECK(mode_from_string("DIFFUSION") == Mode::Diffusion);
    CHECK_THROWS_AS(mode_from_string("bogus"), Error);
}
