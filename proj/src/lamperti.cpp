#include "ssmt/lamperti.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ssmt {

namespace {

// expm1(x)/x, 1 at 0
double phi1(double x) { return std::abs(x) < 1e-12 ? 1.0 + 0.5 * x : std::expm1(x) / x; }

}  // namespace

PssmpPath to_pssmp(std::shared_ptr<const PathSkeleton> path, double alpha, double start) {
    if (!(alpha > 0.0)) throw Error(ErrorKind::ConfigInvalid, "alpha must be > 0");
    if (!(start > 0.0)) throw Error(ErrorKind::ConfigInvalid, "start must be > 0");
    PssmpPath x;
    x.alpha_ = alpha;
    x.start_ = start;
    x.xi0_ = path->start;
    x.parts_.reserve(path->parts());
    x.part_t_.reserve(path->parts() + 1);
    x.source_ = std::move(path);
    x.part_t_.push_back(0.0);
    x.source_->for_each_part([&](const LinearPart& p) {
        x.parts_.push_back(p);
        x.part_t_.push_back(x.part_t_.back() + x.part_time(x.parts_.size() - 1, p.h));
        return true;
    });
    x.lifetime_ = x.part_t_.back();
    return x;
}

PssmpPath to_pssmp(const PathSkeleton& path, double alpha, double start) {
    return to_pssmp(std::make_shared<const PathSkeleton>(path), alpha, start);
}

const PathSkeleton& PssmpPath::source() const {
    if (!source_) throw Error(ErrorKind::MismatchedPath, "pssMp path has no source");
    return *source_;
}

double PssmpPath::to_size(double xi) const { return start_ * std::exp(xi - xi0_); }

double PssmpPath::part_time(std::size_t k, double tau) const {
    const LinearPart& p = parts_[k];
    const double base = std::pow(start_, alpha_);
    if (source_->mode == Mode::BV) {
        const double m = p.h > 0.0 ? (p.v1 - p.v0) / p.h : 0.0;
        return base * std::exp(alpha_ * (p.v0 - xi0_)) * tau * phi1(alpha_ * m * tau);
    }
    // exponential of the midpoint on every grid step
    return base * std::exp(alpha_ * (0.5 * (p.v0 + p.v1) - xi0_)) * tau;
}

double PssmpPath::part_tau(std::size_t k, double dt) const {
    const LinearPart& p = parts_[k];
    const double base = std::pow(start_, alpha_);
    double tau;
    if (source_->mode == Mode::BV) {
        const double m = p.h > 0.0 ? (p.v1 - p.v0) / p.h : 0.0;
        const double K = base * std::exp(alpha_ * (p.v0 - xi0_));
        const double am = alpha_ * m;
        tau = std::abs(am * dt / K) < 1e-12 ? dt / K : std::log1p(am * dt / K) / am;
    } else {
        tau = dt / (base * std::exp(alpha_ * (0.5 * (p.v0 + p.v1) - xi0_)));
    }
    return std::clamp(tau, 0.0, p.h);
}

double PssmpPath::time_of(double s) const {
    source();
    if (s <= 0.0) return 0.0;
    if (s >= source_->lifetime) return lifetime_;
    std::size_t lo = 0, hi = parts_.size();
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (parts_[mid].t0 <= s ? lo : hi) = mid;
    }
    return part_t_[lo] + part_time(lo, s - parts_[lo].t0);
}

double PssmpPath::levy_time(double t) const {
    source();
    if (t <= 0.0) return 0.0;
    if (t >= lifetime_) return source_->lifetime;
    const auto it = std::upper_bound(part_t_.begin(), part_t_.end(), t);
    const std::size_t k = std::min(static_cast<std::size_t>(it - part_t_.begin()) - 1, parts_.size() - 1);
    return parts_[k].t0 + part_tau(k, t - part_t_[k]);
}

double PssmpPath::value_at(double t) const {
    if (t < 0.0 || t >= lifetime_) return 0.0;
    if (source_) {
        const auto it = std::upper_bound(part_t_.begin(), part_t_.end(), t);
        const std::size_t k = std::min(static_cast<std::size_t>(it - part_t_.begin()) - 1, parts_.size() - 1);
        const LinearPart& p = parts_[k];
        const double tau = part_tau(k, t - part_t_[k]);
        const double v = p.h > 0.0 ? p.v0 + (p.v1 - p.v0) * tau / p.h : p.v0;
        return to_size(v);
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double a, const std::pair<double, double>& s) { return a < s.first; });
    const std::size_t i = static_cast<std::size_t>(it - samples_.begin()) - 1;
    if (i + 1 >= samples_.size()) return samples_.back().second;
    const auto& [t0, x0] = samples_[i];
    const auto& [t1, x1] = samples_[i + 1];
    return t1 > t0 ? x0 + (x1 - x0) * (t - t0) / (t1 - t0) : x1;
}

double PssmpPath::value_before(double t) const {
    if (t <= 0.0) return start_;
    if (t > lifetime_) return 0.0;
    if (source_) {
        auto it = std::lower_bound(part_t_.begin(), part_t_.end(), t);
        std::size_t k = static_cast<std::size_t>(it - part_t_.begin());
        k = std::clamp<std::size_t>(k, 1, parts_.size()) - 1;
        const LinearPart& p = parts_[k];
        const double tau = part_tau(k, t - part_t_[k]);
        const double v = p.h > 0.0 ? p.v0 + (p.v1 - p.v0) * tau / p.h : p.v0;
        return to_size(v);
    }
    auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                               [](const std::pair<double, double>& s, double a) { return s.first < a; });
    const std::size_t i = static_cast<std::size_t>(it - samples_.begin());
    if (i == 0) return samples_.front().second;
    const auto& [t0, x0] = samples_[i - 1];
    if (i >= samples_.size()) return x0;
    const auto& [t1, x1] = samples_[i];
    return t1 > t0 ? x0 + (x1 - x0) * (t - t0) / (t1 - t0) : x0;
}

double PssmpPath::weighted_integral(double gamma) const {
    double s = 0.0;
    if (source_) {
        const double base = std::pow(start_, gamma);
        const bool bv = source_->mode == Mode::BV;
        for (const auto& p : parts_) {
            if (bv) {
                const double m = p.h > 0.0 ? (p.v1 - p.v0) / p.h : 0.0;
                s += base * std::exp(gamma * (p.v0 - xi0_)) * p.h * phi1(gamma * m * p.h);
            } else {
                s += base * std::exp(gamma * (0.5 * (p.v0 + p.v1) - xi0_)) * p.h;
            }
        }
        return s;
    }
    const double q = gamma - alpha_;
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
        const auto& [t0, x0] = samples_[i];
        const auto& [t1, x1] = samples_[i + 1];
        const double d = t1 - t0;
        if (d <= 0.0) continue;
        if (x0 == x1) {
            s += std::pow(x0, q) * d;
        } else if (std::abs(q + 1.0) < 1e-14) {
            s += d * std::log(x1 / x0) / (x1 - x0);
        } else {
            s += d * (std::pow(x1, q + 1.0) - std::pow(x0, q + 1.0)) / ((q + 1.0) * (x1 - x0));
        }
    }
    return s;
}

double PssmpPath::supremum() const {
    if (source_) {
        double hi = xi0_;
        for (const auto& p : parts_) hi = std::max({hi, p.v0, p.v1});
        return to_size(hi);
    }
    double hi = 0.0;
    for (const auto& s : samples_) hi = std::max(hi, s.second);
    return hi;
}

double PssmpPath::infimum() const {
    if (source_) {
        double lo = xi0_;
        for (const auto& p : parts_) lo = std::min({lo, p.v0, p.v1});
        return to_size(lo);
    }
    double lo = kInf;
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) lo = std::min(lo, samples_[i].second);
    return samples_.size() > 1 ? lo : start_;
}

std::vector<std::pair<double, double>> PssmpPath::polyline(double resolution) const {
    if (!source_) return samples_;
    std::vector<std::pair<double, double>> out;
    for (std::size_t k = 0; k < parts_.size(); ++k) {
        const LinearPart& p = parts_[k];
        const double t0 = part_t_[k], t1 = part_t_[k + 1];
        const std::size_t n =
            resolution > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((t1 - t0) / resolution))) : 1;
        const double x0 = to_size(p.v0);
        if (out.empty() || out.back().first != t0 || out.back().second != x0) out.emplace_back(t0, x0);
        for (std::size_t j = 1; j <= n; ++j) {
            if (j == n) {
                out.emplace_back(t1, to_size(p.v1));
                break;
            }
            const double t = t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(n);
            const double tau = part_tau(k, t - t0);
            out.emplace_back(t, to_size(p.h > 0.0 ? p.v0 + (p.v1 - p.v0) * tau / p.h : p.v0));
        }
    }
    if (out.empty()) out.emplace_back(0.0, start_);
    out.emplace_back(lifetime_, 0.0);
    return out;
}

void PssmpPath::write_csv(std::ostream& os, double resolution) const {
    os << "t,X\n";
    os.precision(17);
    for (const auto& [t, v] : polyline(resolution)) os << t << ',' << v << '\n';
}

PssmpPath PssmpPath::from_samples(double alpha, std::vector<std::pair<double, double>> samples) {
    if (samples.empty()) throw Error(ErrorKind::DegeneratePath, "no samples");
    if (!(alpha > 0.0)) throw Error(ErrorKind::ConfigInvalid, "alpha must be > 0");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i].first < samples[i - 1].first) throw Error(ErrorKind::DegeneratePath, "sample times decrease");
    if (!(samples.front().second > 0.0)) throw Error(ErrorKind::DegeneratePath, "start value must be > 0");
    PssmpPath x;
    x.alpha_ = alpha;
    x.start_ = samples.front().second;
    x.lifetime_ = samples.back().first;
    x.samples_ = std::move(samples);
    return x;
}

PathSkeleton from_pssmp(const PssmpPath& x, double horizon, double drop) {
    if (x.has_source()) return x.source();
    const auto& sm = x.samples();
    const double a = x.alpha();
    PathSkeleton p;
    p.mode = Mode::BV;
    p.start = 0.0;
    p.killed = false;
    double s = 0.0, xi = 0.0;
    for (std::size_t i = 0; i + 1 < sm.size(); ++i) {
        const auto [t0, x0] = sm[i];
        const auto [t1, x1] = sm[i + 1];
        const bool last = i + 2 == sm.size();
        if (!(x0 > 0.0)) throw Error(ErrorKind::DegeneratePath, "zero before the lifetime");
        if (t1 == t0) {
            if (x1 <= 0.0) {
                if (!last) throw Error(ErrorKind::DegeneratePath, "zero before the lifetime");
                p.killed = true;
                break;
            }
            const double j = std::log(x1 / x0);
            if (p.pieces.empty()) p.pieces.push_back({0.0, 0.0, false, 0.0, -1});
            Piece& q = p.pieces.back();
            q.jump = q.has_jump ? q.jump + j : j;
            q.has_jump = true;
            xi += j;
            continue;
        }
        const double d = t1 - t0;
        if (x1 <= 0.0) {
            if (!last) throw Error(ErrorKind::DegeneratePath, "zero before the lifetime");
            // continuous approach to 0: cut in Levy time
            const double slope = (x1 - x0) / d * std::pow(x0, a - 1.0);
            const double dur = std::min((xi + drop) / -slope, horizon - s);
            if (dur > 0.0) p.pieces.push_back({dur, slope, false, 0.0, -1});
            s += std::max(dur, 0.0);
            break;
        }
        double ds;
        if (x0 == x1)
            ds = d * std::pow(x0, -a);
        else if (std::abs(a - 1.0) < 1e-14)
            ds = d * std::log(x1 / x0) / (x1 - x0);
        else
            ds = d * (std::pow(x1, 1.0 - a) - std::pow(x0, 1.0 - a)) / ((1.0 - a) * (x1 - x0));
        const double dxi = std::log(x1 / x0);
        if (s + ds > horizon) {
            const double dur = horizon - s;
            p.pieces.push_back({dur, dxi / ds, false, 0.0, -1});
            s = horizon;
            break;
        }
        p.pieces.push_back({ds, dxi / ds, false, 0.0, -1});
        s += ds;
        xi += dxi;
    }
    if (!p.pieces.empty() && p.pieces.back().has_jump) {
        p.pieces.push_back({0.0, 0.0, false, 0.0, -1});
    }
    if (p.pieces.empty()) throw Error(ErrorKind::DegeneratePath, "empty path");
    p.lifetime = 0.0;
    for (const auto& q : p.pieces) p.lifetime += q.duration;
    return p;
}

namespace {

bool near_level(const std::vector<LinearPart>& parts, double time, double y, double tol) {
    auto it = std::upper_bound(parts.begin(), parts.end(), time, [](double t, const LinearPart& p) { return t < p.t0; });
    std::size_t k = static_cast<std::size_t>(it - parts.begin());
    if (k == 0) return false;
    --k;
    // the atom may sit at the right end of the previous part
    for (std::size_t j = (k > 0 ? k - 1 : 0); j <= k; ++j) {
        const LinearPart& p = parts[j];
        if (time < p.t0 - 1e-12 || time > p.t0 + p.h + 1e-12) continue;
        const double tau = std::clamp(time - p.t0, 0.0, p.h);
        const double v = p.h > 0.0 ? p.v0 + (p.v1 - p.v0) * tau / p.h : p.v0;
        if (std::abs(v - y) <= tol) return true;
    }
    return false;
}

}  // namespace

LocalTimeProfile transfer_local_time(const LocalTimeProfile& profile, const PssmpPath& x) {
    const PathSkeleton& src = x.source();
    LocalTimeProfile out;
    out.level = x.to_size(profile.level);
    out.eps = profile.eps;
    const double tol = profile.eps + 1e-9 * (1.0 + std::abs(profile.level));
    for (const auto& a : profile.atoms) {
        if (a.time > src.lifetime + 1e-12 || !near_level(x.parts(), a.time, profile.level, tol))
            throw Error(ErrorKind::MismatchedPath, "profile atom does not lie on the source path");
        out.atoms.push_back({x.time_of(a.time), a.mass});
    }
    return out;
}

OccupationResult pssmp_occupation_check(const PssmpPath& x, const TestFunction& f, double eps, double grid_step) {
    const PathSkeleton& src = x.source();
    const double a = x.alpha();
    TestFunction g;
    g.f = [&](double y) {
        const double v = x.to_size(y);
        return f.f(v) * std::pow(v, a);
    };
    for (double b : f.breaks)
        if (b > 0.0) g.breaks.push_back(src.start + std::log(b / x.start()));
    // int g(xi_s) ds = int f(X_t) dt
    return occupation_check(src, g, eps, grid_step);
}

}  // namespace ssmt
