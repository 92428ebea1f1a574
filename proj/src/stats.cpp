#include "ssmt/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ssmt/common.hpp"

namespace ssmt {

void MeanAccumulator::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void MeanAccumulator::merge(const MeanAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
}

double MeanAccumulator::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double MeanAccumulator::std_error() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.0) {
        // P(K <= l) = sqrt(2 pi)/l sum exp(-(2k-1)^2 pi^2 / (8 l^2))
        double s = 0.0;
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        for (int k = 1; k <= 50; ++k) {
            const double t = std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * c);
            s += t;
            if (t < 1e-18) break;
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double t = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * t;
        if (t < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

double ks_p(double d, double n) {
    const double sn = std::sqrt(n);
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    KsResult r;
    if (x.empty()) return r;
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        r.statistic = std::max({r.statistic, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    r.n_eff = n;
    r.p_value = ks_p(r.statistic, n);
    return r;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    return ks_two_sample_weighted(a, {}, b, {});
}

KsResult ks_two_sample_weighted(const std::vector<double>& a, const std::vector<double>& wa,
                                const std::vector<double>& b, const std::vector<double>& wb) {
    KsResult r;
    if (a.empty() || b.empty()) return r;
    struct Item {
        double x;
        double w;
        int side;
    };
    std::vector<Item> all;
    double sa = 0.0, sa2 = 0.0, sb = 0.0, sb2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = wa.empty() ? 1.0 : wa[i];
        if (w <= 0.0) continue;
        all.push_back({a[i], w, 0});
        sa += w;
        sa2 += w * w;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double w = wb.empty() ? 1.0 : wb[i];
        if (w <= 0.0) continue;
        all.push_back({b[i], w, 1});
        sb += w;
        sb2 += w * w;
    }
    if (sa <= 0.0 || sb <= 0.0) return r;
    std::sort(all.begin(), all.end(), [](const Item& p, const Item& q) { return p.x < q.x; });
    double fa = 0.0, fb = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        (all[i].side == 0 ? fa : fb) += all[i].w / (all[i].side == 0 ? sa : sb);
        if (i + 1 < all.size() && all[i + 1].x == all[i].x) continue;
        r.statistic = std::max(r.statistic, std::abs(fa - fb));
    }
    const double na = sa * sa / sa2, nb = sb * sb / sb2;
    r.n_eff = na * nb / (na + nb);
    r.p_value = ks_p(r.statistic, r.n_eff);
    return r;
}

double chi_square_sf(double stat, double dof) {
    if (dof <= 0.0) return 1.0;
    if (stat <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

namespace {

// merge sparse cells from the right into their left neighbour
std::vector<std::size_t> pool_cells(const std::vector<double>& expected, double min_expected) {
    std::vector<std::size_t> group(expected.size());
    std::size_t g = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        group[i] = g;
        acc += expected[i];
        if (acc >= min_expected) {
            ++g;
            acc = 0.0;
        }
    }
    // a light last group joins the previous one
    if (acc > 0.0 && acc < min_expected && g > 0)
        for (auto& x : group)
            if (x == g) x = g - 1;
    return group;
}

}  // namespace

ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& probs,
                               std::size_t fitted_params, double min_expected, double reference_size) {
    if (observed.size() != probs.size()) throw Error(ErrorKind::ConfigInvalid, "chi-square: size mismatch");
    const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
    std::vector<double> expected(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) expected[i] = n * probs[i];
    const auto group = pool_cells(expected, min_expected);
    const std::size_t k = group.empty() ? 0 : group.back() + 1;
    std::vector<double> o(k, 0.0), e(k, 0.0);
    for (std::size_t i = 0; i < group.size(); ++i) {
        o[group[i]] += observed[i];
        e[group[i]] += expected[i];
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < k; ++i)
        if (e[i] > 0.0) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
    if (reference_size > 0.0) r.statistic /= 1.0 + n / reference_size;
    r.dof = static_cast<double>(k) - 1.0 - static_cast<double>(fitted_params);
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b, double min_expected) {
    const std::size_t m = std::max(a.size(), b.size());
    std::vector<double> ca(m, 0.0), cb(m, 0.0), tot(m, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) ca[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) cb[i] = b[i];
    const double na = std::accumulate(ca.begin(), ca.end(), 0.0);
    const double nb = std::accumulate(cb.begin(), cb.end(), 0.0);
    const double n = na + nb;
    ChiSquareResult r;
    if (na <= 0.0 || nb <= 0.0) return r;
    // pool on the smaller expected count of the two rows
    std::vector<double> emin(m);
    for (std::size_t i = 0; i < m; ++i) emin[i] = (ca[i] + cb[i]) * std::min(na, nb) / n;
    const auto group = pool_cells(emin, min_expected);
    const std::size_t k = group.empty() ? 0 : group.back() + 1;
    std::vector<double> ga(k, 0.0), gb(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        ga[group[i]] += ca[i];
        gb[group[i]] += cb[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
        const double t = ga[i] + gb[i];
        if (t <= 0.0) continue;
        const double ea = t * na / n, eb = t * nb / n;
        r.statistic += (ga[i] - ea) * (ga[i] - ea) / ea + (gb[i] - eb) * (gb[i] - eb) / eb;
    }
    r.dof = static_cast<double>(k) - 1.0;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

}  // namespace ssmt
