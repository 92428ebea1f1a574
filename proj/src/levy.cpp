#include "ssmt/levy.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

namespace ssmt {

namespace {

bool compensated(double y) { return std::abs(y) <= 1.0; }

}  // namespace

void LevyCharacteristics::validate() const {
    auto bad = [](double v) { return !std::isfinite(v); };
    if (bad(sigma2) || sigma2 < 0.0) throw Error(ErrorKind::ConfigInvalid, "sigma2 must be finite and >= 0");
    if (bad(drift)) throw Error(ErrorKind::ConfigInvalid, "drift must be finite");
    if (bad(kill) || kill < 0.0) throw Error(ErrorKind::ConfigInvalid, "kill rate must be finite and >= 0");
    for (const auto& j : jumps) {
        if (bad(j.size)) throw Error(ErrorKind::ConfigInvalid, "jump size must be finite");
        if (bad(j.rate) || j.rate <= 0.0) throw Error(ErrorKind::ConfigInvalid, "jump rates must be > 0");
    }
}

double LevyCharacteristics::sigma() const { return std::sqrt(sigma2); }

double LevyCharacteristics::total_jump_rate() const {
    double r = 0.0;
    for (const auto& j : jumps) r += j.rate;
    return r;
}

double LevyCharacteristics::slope() const {
    double s = drift;
    for (const auto& j : jumps)
        if (compensated(j.size)) s -= j.rate * j.size;
    return s;
}

double LevyCharacteristics::mean() const {
    double m = slope();
    for (const auto& j : jumps) m += j.rate * j.size;
    return m;
}

std::complex<double> evaluate_exponent(const LevyCharacteristics& c, std::complex<double> g) {
    std::complex<double> r = 0.5 * c.sigma2 * g * g + c.drift * g - c.kill;
    for (const auto& j : c.jumps) {
        std::complex<double> term = std::exp(g * j.size) - 1.0;
        if (compensated(j.size)) term -= g * j.size;
        r += j.rate * term;
    }
    return r;
}

double evaluate_exponent(const LevyCharacteristics& c, double g) {
    double r = 0.5 * c.sigma2 * g * g + c.drift * g - c.kill;
    for (const auto& j : c.jumps) {
        double term = std::expm1(g * j.size);
        if (compensated(j.size)) term -= g * j.size;
        r += j.rate * term;
    }
    return r;
}

double exponent_derivative(const LevyCharacteristics& c, double g) {
    double r = c.sigma2 * g + c.drift;
    for (const auto& j : c.jumps) {
        double term = j.size * std::exp(g * j.size);
        if (compensated(j.size)) term -= j.size;
        r += j.rate * term;
    }
    return r;
}

LevyCharacteristics esscher_tilt(const LevyCharacteristics& c, double beta) {
    const double psi = evaluate_exponent(c, beta);
    if (!std::isfinite(psi) || psi > 1e-12)
        throw Error(ErrorKind::InvalidTilt, "psi(beta) = " + std::to_string(psi) + " > 0");
    LevyCharacteristics t;
    t.sigma2 = c.sigma2;
    t.drift = c.drift + c.sigma2 * beta;
    for (const auto& j : c.jumps) {
        if (compensated(j.size)) t.drift += j.rate * j.size * std::expm1(beta * j.size);
        t.jumps.push_back({j.size, j.rate * std::exp(beta * j.size)});
    }
    t.kill = std::max(0.0, -psi);
    return t;
}

LevyCharacteristics dual(const LevyCharacteristics& c) {
    LevyCharacteristics d = c;
    d.drift = -c.drift;
    for (auto& j : d.jumps) j.size = -j.size;
    return d;
}

// ---------------------------------------------------------------------------

std::size_t PathSkeleton::parts() const {
    if (mode == Mode::BV) return pieces.size();
    return values.empty() ? 0 : values.size() - 1;
}

double PathSkeleton::node_time(std::size_t k) const {
    if (k == 0) return 0.0;
    const std::size_t n = parts();
    if (k >= n) return lifetime;
    return first_step + static_cast<double>(k - 1) * dt;
}

double PathSkeleton::terminal() const {
    if (mode == Mode::BV) {
        double v = start;
        for (const auto& q : pieces) v += q.slope * q.duration + (q.has_jump ? q.jump : 0.0);
        return v;
    }
    return values.empty() ? start : values.back();
}

double PathSkeleton::value_at(double s) const {
    if (s < 0.0 || s >= lifetime) return -kInf;
    double out = -kInf;
    for_each_part([&](const LinearPart& p) {
        if (s < p.t0 + p.h) {
            out = p.h > 0.0 ? p.v0 + (p.v1 - p.v0) * (s - p.t0) / p.h : p.v0;
            return false;
        }
        return true;
    });
    return out;
}

std::pair<double, double> PathSkeleton::range() const {
    double lo = start, hi = start;
    for_each_part([&](const LinearPart& p) {
        lo = std::min({lo, p.v0, p.v1, p.v1 + p.jump});
        hi = std::max({hi, p.v0, p.v1, p.v1 + p.jump});
        return true;
    });
    return {lo, hi};
}

namespace {

double exp_draw(Rng& rng, double rate) {
    if (rate <= 0.0) return kInf;
    return std::exponential_distribution<double>(rate)(rng);
}

PathSkeleton sample_bv(const LevyCharacteristics& c, double start, const SampleOptions& opt, Rng& rng) {
    PathSkeleton p;
    p.mode = Mode::BV;
    p.start = start;
    const double zeta = exp_draw(rng, c.kill);
    const bool absorb = c.kill <= 0.0 && !std::isfinite(opt.horizon);
    const double end = std::min(zeta, opt.horizon);
    p.killed = zeta <= opt.horizon;
    const double m = c.slope();
    const double rate = c.total_jump_rate();
    std::vector<double> rates;
    for (const auto& j : c.jumps) rates.push_back(j.rate);
    std::discrete_distribution<int> pick(rates.begin(), rates.end());
    const double floor_value = start - opt.drop;

    double t = 0.0, v = start;
    while (true) {
        const double tau = t + exp_draw(rng, rate);
        double d = std::min(tau, end) - t;
        if (absorb && m < 0.0 && v + m * d < floor_value) {
            d = (floor_value - v) / m;
            p.pieces.push_back({d, m, false, 0.0, -1});
            t += d;
            p.killed = true;
            break;
        }
        if (tau >= end) {
            p.pieces.push_back({d, m, false, 0.0, -1});
            t = end;
            break;
        }
        const int a = pick(rng);
        const double y = c.jumps[static_cast<std::size_t>(a)].size;
        p.pieces.push_back({d, m, true, y, a});
        t = tau;
        v += m * d + y;
        if (absorb && v < floor_value) {
            p.pieces.back().has_jump = false;
            p.pieces.back().jump = 0.0;
            p.pieces.back().atom = -1;
            p.killed = true;
            break;
        }
    }
    p.lifetime = t;
    return p;
}

PathSkeleton sample_diffusion(const LevyCharacteristics& c, double start, const SampleOptions& opt, Rng& rng) {
    if (!(opt.dt > 0.0)) throw Error(ErrorKind::ConfigInvalid, "dt must be > 0");
    PathSkeleton p;
    p.mode = Mode::Diffusion;
    p.start = start;
    p.dt = opt.dt;
    const double zeta = exp_draw(rng, c.kill);
    const bool absorb = c.kill <= 0.0 && !std::isfinite(opt.horizon);
    const double end = std::min(zeta, opt.horizon);
    p.killed = zeta <= opt.horizon;
    const double m = c.slope();
    const double sig = c.sigma();
    const double rate = c.total_jump_rate();
    std::vector<double> rates;
    for (const auto& j : c.jumps) rates.push_back(j.rate);
    std::discrete_distribution<int> pick(rates.begin(), rates.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    const double floor_value = start - opt.drop;
    const double sdt = sig * std::sqrt(opt.dt);

    if (std::isfinite(end)) p.values.reserve(static_cast<std::size_t>(end / opt.dt) + 2);
    p.values.push_back(start);
    p.first_step = std::min(opt.dt, end);
    double next_jump = exp_draw(rng, rate);
    double v = start;
    std::size_t k = 0;
    std::vector<std::pair<double, int>> pending;
    while (true) {
        const double t0 = k == 0 ? 0.0 : opt.dt * static_cast<double>(k);
        const double rest = end - t0;
        if (!(rest > 1e-12 * opt.dt)) {
            p.lifetime = k == 0 ? end : t0;
            break;
        }
        const bool last = rest <= opt.dt;
        const double h = last ? rest : opt.dt;
        const double inc = h == opt.dt ? m * h + sdt * normal(rng) : m * h + sig * std::sqrt(h) * normal(rng);
        const double v1 = v + inc;
        pending.clear();
        while (next_jump < t0 + h) {
            pending.emplace_back(next_jump, pick(rng));
            next_jump += exp_draw(rng, rate);
        }
        if (absorb && v1 < floor_value) {
            p.values.push_back(v1);
            p.lifetime = t0 + h;
            p.killed = true;
            break;
        }
        if (last) {
            // no jump may sit at the kill time: move to the previous node
            if (k > 0) {
                for (const auto& [tj, a] : pending) {
                    const double y = c.jumps[static_cast<std::size_t>(a)].size;
                    p.jumps.push_back({k - 1, y, a});
                    p.values[k] += y;
                }
            }
            const double shift = p.values[k] - v;
            p.values.push_back(v1 + shift);
            p.lifetime = end;
            break;
        }
        double w = v1;
        for (const auto& [tj, a] : pending) {
            const double y = c.jumps[static_cast<std::size_t>(a)].size;
            p.jumps.push_back({k, y, a});
            w += y;
        }
        p.values.push_back(w);
        v = w;
        ++k;
    }
    if (p.values.size() == 1) {
        p.values.push_back(start);
        p.first_step = p.lifetime;
    }
    return p;
}

}  // namespace

PathSkeleton sample_path(const LevyCharacteristics& c, double start, const SampleOptions& opt, Rng& rng) {
    c.validate();
    if (c.kill <= 0.0 && !std::isfinite(opt.horizon) && c.mean() >= 0.0)
        throw Error(ErrorKind::NonTerminating, "no killing and nonnegative mean");
    if (opt.mode == Mode::BV) {
        if (c.sigma2 > 0.0) throw Error(ErrorKind::ExactUnavailable, "BV mode needs sigma2 = 0");
        return sample_bv(c, start, opt, rng);
    }
    return sample_diffusion(c, start, opt, rng);
}

PathSkeleton sample_path(const LevyCharacteristics& c, double start, Mode mode, double dt, std::uint64_t seed) {
    Rng rng(seed);
    SampleOptions opt;
    opt.mode = mode;
    opt.dt = dt;
    return sample_path(c, start, opt, rng);
}

PathSkeleton reverse_path(const PathSkeleton& p) {
    PathSkeleton r;
    r.mode = p.mode;
    r.lifetime = p.lifetime;
    r.killed = p.killed;
    r.start = p.terminal();
    if (p.mode == Mode::BV) {
        const std::size_t n = p.pieces.size();
        r.pieces.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = n - 1 - j;
            Piece q;
            q.duration = p.pieces[i].duration;
            q.slope = -p.pieces[i].slope;
            if (i >= 1 && p.pieces[i - 1].has_jump) {
                q.has_jump = true;
                q.jump = -p.pieces[i - 1].jump;
                q.atom = p.pieces[i - 1].atom;
            }
            r.pieces[j] = q;
        }
        return r;
    }
    r.dt = p.dt;
    const std::size_t n = p.parts();
    if (n == 0) {
        r.values = p.values;
        r.first_step = p.first_step;
        return r;
    }
    r.first_step = p.lifetime - p.node_time(n - 1);
    std::vector<double> jsum(n, 0.0);
    for (const auto& j : p.jumps) jsum[j.step] += j.size;
    r.values.resize(n + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = n - 1 - j;
        r.values[j] = p.values[k + 1] - jsum[k];
    }
    r.values[n] = p.values[0];
    for (auto it = p.jumps.rbegin(); it != p.jumps.rend(); ++it) {
        if (it->step + 1 >= n) continue;
        r.jumps.push_back({n - 2 - it->step, -it->size, it->atom});
    }
    return r;
}

double window_time(const LinearPart& p, double y, double eps) {
    const double lo = y - eps, hi = y + eps;
    const double a = part_min(p), b = part_max(p);
    if (b <= lo || a >= hi) return 0.0;
    if (b == a) return p.h;
    const double overlap = std::min(b, hi) - std::max(a, lo);
    return overlap > 0.0 ? p.h * overlap / (b - a) : 0.0;
}

// ---------------------------------------------------------------------------

double LocalTimeProfile::total() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
}

double LocalTimeProfile::cumulative(double t) const {
    double s = 0.0;
    for (const auto& a : atoms) {
        if (a.time > t) break;
        s += a.mass;
    }
    return s;
}

std::vector<std::pair<double, double>> LocalTimeProfile::cumulative_samples() const {
    std::vector<std::pair<double, double>> out;
    out.emplace_back(0.0, 0.0);
    double s = 0.0;
    for (const auto& a : atoms) {
        s += a.mass;
        out.emplace_back(a.time, s);
    }
    return out;
}

namespace {

void exact_atoms(const PathSkeleton& path, double y, const std::function<void(double, double)>& emit) {
    path.for_each_part([&](const LinearPart& p) {
        if (p.v0 == p.v1) {
            if (p.v0 == y && p.h > 0.0) throw Error(ErrorKind::ExactUnavailable, "flat piece at the level");
            return true;
        }
        const double m = std::abs(p.v1 - p.v0) / p.h;
        const double full = 1.0 / m;
        const double a = part_min(p), b = part_max(p);
        if (y > a && y < b)
            emit(p.t0 + (y - p.v0) / (p.v1 - p.v0) * p.h, full);
        else if (y == p.v0)
            emit(p.t0, 0.5 * full);
        else if (y == p.v1)
            emit(p.t0 + p.h, 0.5 * full);
        return true;
    });
}

}  // namespace

LocalTimeProfile local_time(const PathSkeleton& path, double y, double eps) {
    LocalTimeProfile prof;
    prof.level = y;
    prof.eps = eps;
    if (eps == kExact) {
        if (path.mode != Mode::BV) throw Error(ErrorKind::ExactUnavailable, "exact local time needs BV mode");
        exact_atoms(path, y, [&](double t, double m) {
            if (!prof.atoms.empty() && prof.atoms.back().time == t)
                prof.atoms.back().mass += m;
            else
                prof.atoms.push_back({t, m});
        });
        return prof;
    }
    if (!(eps > 0.0)) throw Error(ErrorKind::ConfigInvalid, "window must be > 0");
    const double inv = 1.0 / (2.0 * eps);
    path.for_each_part([&](const LinearPart& p) {
        const double w = window_time(p, y, eps);
        if (w <= 0.0) return true;
        double t;
        if (y >= part_min(p) && y <= part_max(p))
            t = p.v1 == p.v0 ? p.t0 : p.t0 + (y - p.v0) / (p.v1 - p.v0) * p.h;
        else
            t = std::abs(p.v0 - y) <= std::abs(p.v1 - y) ? p.t0 : p.t0 + p.h;
        prof.atoms.push_back({t, w * inv});
        return true;
    });
    return prof;
}

double local_time_total(const PathSkeleton& path, double y, double eps) {
    if (eps == kExact) {
        if (path.mode != Mode::BV) throw Error(ErrorKind::ExactUnavailable, "exact local time needs BV mode");
        double s = 0.0;
        exact_atoms(path, y, [&](double, double m) { s += m; });
        return s;
    }
    double s = 0.0;
    path.for_each_part([&](const LinearPart& p) {
        s += window_time(p, y, eps);
        return true;
    });
    return s / (2.0 * eps);
}

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

double integrate_breaks(const std::function<double(double)>& f, double a, double b, std::vector<double> breaks) {
    if (!(b > a)) return 0.0;
    std::vector<double> pts{a};
    std::sort(breaks.begin(), breaks.end());
    for (double x : breaks)
        if (x > a && x < b) pts.push_back(x);
    pts.push_back(b);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i + 1] > pts[i]) s += Gauss::integrate(f, pts[i], pts[i + 1]);
    return s;
}

// windowed local time totals at levels lo + i*step
std::vector<double> grid_local_times(const PathSkeleton& path, double lo, double step, std::size_t n, double eps) {
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    path.for_each_part([&](const LinearPart& p) {
        const double a = part_min(p) - eps, b = part_max(p) + eps;
        long i0 = static_cast<long>(std::ceil((a - lo) / step));
        long i1 = static_cast<long>(std::floor((b - lo) / step));
        i0 = std::max(i0, 0L);
        i1 = std::min(i1, static_cast<long>(n) - 1);
        for (long i = i0; i <= i1; ++i) out[static_cast<std::size_t>(i)] += window_time(p, lo + step * i, eps);
        return true;
    });
    for (auto& v : out) v /= 2.0 * eps;
    return out;
}

}  // namespace

OccupationResult occupation_check(const PathSkeleton& path, const TestFunction& tf, double eps, double grid_step) {
    OccupationResult r;
    path.for_each_part([&](const LinearPart& p) {
        if (p.h <= 0.0) return true;
        std::vector<double> tb;
        if (p.v1 != p.v0)
            for (double b : tf.breaks) tb.push_back((b - p.v0) / (p.v1 - p.v0) * p.h);
        auto g = [&](double tau) { return tf.f(p.v0 + (p.v1 - p.v0) * tau / p.h); };
        r.lhs += integrate_breaks(g, 0.0, p.h, tb);
        return true;
    });
    if (eps == kExact) {
        std::vector<double> ys = tf.breaks;
        path.for_each_part([&](const LinearPart& p) {
            ys.push_back(p.v0);
            ys.push_back(p.v1);
            return true;
        });
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
        for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
            const double l = local_time_total(path, 0.5 * (ys[i] + ys[i + 1]), kExact);
            if (l > 0.0) r.rhs += l * integrate_breaks(tf.f, ys[i], ys[i + 1], {});
        }
        return r;
    }
    const double step = grid_step > 0.0 ? grid_step : eps;
    auto [lo, hi] = path.range();
    lo -= 2.0 * eps;
    hi += 2.0 * eps;
    const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
    const auto lt = grid_local_times(path, lo, step, n, eps);
    for (std::size_t i = 0; i < n; ++i) r.rhs += tf.f(lo + step * static_cast<double>(i)) * lt[i] * step;
    return r;
}

// ---------------------------------------------------------------------------

const char* to_string(PotentialMethod m) {
    switch (m) {
        case PotentialMethod::Fourier: return "FOURIER";
        case PotentialMethod::MonteCarlo: return "MONTE_CARLO";
        case PotentialMethod::ClosedForm: return "CLOSED_FORM";
    }
    return "?";
}

double PotentialTable::at(double y) const {
    const double step = grid.step();
    const double tol = 1e-9 * std::max(1.0, std::abs(grid.hi - grid.lo));
    if (y < grid.lo - tol || y > grid.hi + tol || values.empty())
        throw Error(ErrorKind::OutOfGrid, "level " + std::to_string(y) + " outside the potential grid");
    if (values.size() == 1 || step <= 0.0) return values.front();
    double u = (y - grid.lo) / step;
    u = std::clamp(u, 0.0, static_cast<double>(values.size() - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(u), values.size() - 2);
    const double f = u - static_cast<double>(i);
    return values[i] * (1.0 - f) + values[i + 1] * f;
}

namespace {

// Potential of psi_ref(g) = sigma2 g^2/2 + m g - c.
double reference_potential(double sigma2, double m, double c, double y) {
    if (sigma2 > 0.0) {
        const double disc = std::sqrt(m * m + 2.0 * sigma2 * c);
        const double gp = (-m + disc) / sigma2, gm = (-m - disc) / sigma2;
        const double k = 2.0 / (sigma2 * (gp - gm));
        return y >= 0.0 ? k * std::exp(-gp * y) : k * std::exp(-gm * y);
    }
    const double am = std::abs(m);
    const double val = std::exp(-(c / m) * y) / am;
    if (y == 0.0) return 0.5 / am;
    return (y > 0.0) == (m > 0.0) ? val : 0.0;
}

// positive and negative roots of the real exponent (nan when absent)
std::pair<double, double> exponent_roots(const LevyCharacteristics& c) {
    auto psi = [&](double g) { return evaluate_exponent(c, g); };
    auto find = [&](double dir) {
        double a = 0.0, b = dir * 0.125;
        while (psi(b) < 0.0) {
            a = b;
            b *= 2.0;
            if (std::abs(b) > 1e4) return std::nan("");
        }
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (a + b);
            (psi(mid) < 0.0 ? a : b) = mid;
        }
        return 0.5 * (a + b);
    };
    if (psi(0.0) >= 0.0) return {std::nan(""), std::nan("")};
    return {find(1.0), find(-1.0)};
}

}  // namespace

PotentialTable potential_fourier(const LevyCharacteristics& c, const LevelGrid& grid, const FourierOptions& opt) {
    c.validate();
    if (c.kill <= 0.0) throw Error(ErrorKind::FourierUnavailable, "no killing: pole at theta = 0");
    const double m = c.slope();
    if (c.sigma2 <= 0.0 && m == 0.0) throw Error(ErrorKind::FourierUnavailable, "no diffusion and no drift");
    const double R = c.total_jump_rate();
    const double cref = c.kill + R + 1.0;
    LevyCharacteristics ref;
    ref.sigma2 = c.sigma2;
    ref.drift = m;
    ref.kill = cref;

    // |D| <= (R+1) / (|psi| |psi_ref|)
    double theta;
    if (c.sigma2 > 0.0) {
        const double s4 = c.sigma2 * c.sigma2;
        theta = std::cbrt(4.0 * (R + 1.0) / (3.0 * std::numbers::pi * s4 * opt.tolerance));
    } else {
        theta = (R + 1.0) / (std::numbers::pi * m * m * opt.tolerance);
    }
    theta = std::clamp(theta, 50.0, opt.theta_cap);

    auto [rp, rn] = exponent_roots(c);
    double decay = kInf;
    if (std::isfinite(rp)) decay = std::min(decay, rp);
    if (std::isfinite(rn)) decay = std::min(decay, -rn);
    decay = std::min(decay, std::sqrt(2.0 * cref / std::max(c.sigma2, 1e-300)));
    if (!std::isfinite(decay) || decay <= 0.0) decay = 1.0;
    const double span = std::max(std::abs(grid.lo), std::abs(grid.hi));
    double h = 2.0 * std::numbers::pi / (2.0 * span + 40.0 / decay);
    std::size_t nodes = static_cast<std::size_t>(std::ceil(theta / h));
    const std::size_t max_nodes = 4000000;
    if (nodes > max_nodes) {
        nodes = max_nodes;
        theta = h * static_cast<double>(nodes);
    }

    std::vector<double> re(nodes + 1), im(nodes + 1);
    for (std::size_t j = 0; j <= nodes; ++j) {
        const std::complex<double> z(0.0, h * static_cast<double>(j));
        const std::complex<double> d = -1.0 / evaluate_exponent(c, z) + 1.0 / evaluate_exponent(ref, z);
        const double w = (j == 0 || j == nodes) ? 0.5 : 1.0;
        re[j] = w * d.real();
        im[j] = w * d.imag();
    }

    PotentialTable t;
    t.grid = grid;
    t.method = PotentialMethod::Fourier;
    t.values.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double y = grid.at(i);
        // Re[e^{-i theta y} D] = cos(theta y) Re D + sin(theta y) Im D
        const std::complex<double> rot = std::polar(1.0, h * y);
        std::complex<double> e(1.0, 0.0);
        double s = 0.0;
        for (std::size_t j = 0; j <= nodes; ++j) {
            if ((j & 255u) == 0) e = std::polar(1.0, h * y * static_cast<double>(j));
            s += e.real() * re[j] + e.imag() * im[j];
            e *= rot;
        }
        const double v = reference_potential(c.sigma2, m, cref, y) + s * h / std::numbers::pi;
        t.values[i] = std::max(0.0, v);
    }
    return t;
}

PotentialTable potential_monte_carlo(const LevyCharacteristics& c, const LevelGrid& grid, const MonteCarloOptions& opt) {
    c.validate();
    PotentialTable t;
    t.grid = grid;
    t.method = PotentialMethod::MonteCarlo;
    std::vector<double> sum(grid.n, 0.0), sq(grid.n, 0.0), cur(grid.n, 0.0);
    std::vector<std::size_t> touched;
    const double step = grid.step() > 0.0 ? grid.step() : 1.0;
    SampleOptions so;
    so.mode = c.sigma2 > 0.0 ? Mode::Diffusion : Mode::BV;
    so.dt = opt.dt;
    for (std::size_t r = 0; r < opt.n_paths; ++r) {
        Rng rng = make_rng(opt.seed, r);
        const PathSkeleton p = sample_path(c, 0.0, so, rng);
        touched.clear();
        p.for_each_part([&](const LinearPart& q) {
            const double a = part_min(q) - opt.eps, b = part_max(q) + opt.eps;
            long i0 = static_cast<long>(std::ceil((a - grid.lo) / step));
            long i1 = static_cast<long>(std::floor((b - grid.lo) / step));
            i0 = std::max(i0, 0L);
            i1 = std::min(i1, static_cast<long>(grid.n) - 1);
            for (long i = i0; i <= i1; ++i) {
                const double w = window_time(q, grid.at(static_cast<std::size_t>(i)), opt.eps);
                if (w <= 0.0) continue;
                auto& slot = cur[static_cast<std::size_t>(i)];
                if (slot == 0.0) touched.push_back(static_cast<std::size_t>(i));
                slot += w;
            }
            return true;
        });
        for (std::size_t i : touched) {
            const double l = cur[i] / (2.0 * opt.eps);
            sum[i] += l;
            sq[i] += l * l;
            cur[i] = 0.0;
        }
    }
    const double n = static_cast<double>(opt.n_paths);
    t.values.resize(grid.n);
    t.std_errors.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double mean = sum[i] / n;
        t.values[i] = mean;
        const double var = std::max(0.0, sq[i] / n - mean * mean);
        t.std_errors[i] = std::sqrt(var / n);
    }
    return t;
}

PotentialTable potential_closed_form(const LevyCharacteristics& c, const LevelGrid& grid) {
    c.validate();
    if (!c.jumps.empty()) throw Error(ErrorKind::ConfigInvalid, "closed form needs a jumpless model");
    if (c.kill <= 0.0) throw Error(ErrorKind::FourierUnavailable, "closed form needs killing");
    if (c.sigma2 <= 0.0 && c.drift == 0.0) throw Error(ErrorKind::ConfigInvalid, "degenerate model");
    PotentialTable t;
    t.grid = grid;
    t.method = PotentialMethod::ClosedForm;
    t.values.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) t.values[i] = reference_potential(c.sigma2, c.drift, c.kill, grid.at(i));
    return t;
}

PotentialTable potential_density(const LevyCharacteristics& c, const LevelGrid& grid, PotentialMethod method,
                                 const MonteCarloOptions& mc) {
    switch (method) {
        case PotentialMethod::Fourier: return potential_fourier(c, grid);
        case PotentialMethod::MonteCarlo: return potential_monte_carlo(c, grid, mc);
        case PotentialMethod::ClosedForm: return potential_closed_form(c, grid);
    }
    throw Error(ErrorKind::ConfigInvalid, "unknown method");
}

double hitting_probability(const PotentialTable& v, double x, double y) { return v.at(y - x) / v.at(0.0); }

double default_hit_tolerance(const LevyCharacteristics& c, double dt) {
    return 10.0 * dt * (std::abs(c.drift) + c.sigma());
}

bool path_hits(const PathSkeleton& path, double y, double tol) {
    bool hit = false;
    path.for_each_part([&](const LinearPart& p) {
        if (y >= part_min(p) - tol && y <= part_max(p) + tol) {
            hit = true;
            return false;
        }
        return true;
    });
    return hit;
}

std::vector<HitFrequency> estimate_hit_frequencies(const LevyCharacteristics& c, double x, const std::vector<double>& ys,
                                                   std::size_t n, const SampleOptions& opt, double tol,
                                                   std::uint64_t seed) {
    std::vector<std::size_t> hits(ys.size(), 0);
    for (std::size_t r = 0; r < n; ++r) {
        Rng rng = make_rng(seed, r);
        const PathSkeleton p = sample_path(c, x, opt, rng);
        for (std::size_t i = 0; i < ys.size(); ++i)
            if (path_hits(p, ys[i], tol)) ++hits[i];
    }
    std::vector<HitFrequency> out;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double f = static_cast<double>(hits[i]) / static_cast<double>(n);
        out.push_back({ys[i], f, std::sqrt(f * (1.0 - f) / static_cast<double>(n))});
    }
    return out;
}

bool kill_at_last_passage(PathSkeleton& path, double y, double tol) {
    long last = -1;
    LinearPart hit;
    path.for_each_part([&](const LinearPart& p) {
        if (y >= part_min(p) - tol && y <= part_max(p) + tol) {
            last = static_cast<long>(p.index);
            hit = p;
        }
        return true;
    });
    if (last < 0) return false;
    double tau;
    if (y >= part_min(hit) && y <= part_max(hit))
        tau = hit.v1 == hit.v0 ? hit.h : (y - hit.v0) / (hit.v1 - hit.v0) * hit.h;
    else
        tau = std::abs(hit.v1 - y) <= std::abs(hit.v0 - y) ? hit.h : 0.0;
    tau = std::max(tau, 1e-9 * hit.h);
    const std::size_t k = static_cast<std::size_t>(last);
    if (path.mode == Mode::BV) {
        path.pieces.resize(k + 1);
        Piece& q = path.pieces[k];
        q.duration = tau;
        q.has_jump = false;
        q.jump = 0.0;
        q.atom = -1;
    } else {
        const double vend = hit.v0 + (hit.v1 - hit.v0) * tau / hit.h;
        path.values.resize(k + 1);
        path.values.push_back(vend);
        while (!path.jumps.empty() && path.jumps.back().step >= k) path.jumps.pop_back();
        if (k == 0) path.first_step = tau;
    }
    path.lifetime = hit.t0 + tau;
    path.killed = true;
    return true;
}

PathSkeleton sample_conditioned(const LevyCharacteristics& c, double x, double y, const ConditionOptions& opt, Rng& rng) {
    const LevyCharacteristics law = opt.proposal_tilt != 0.0 ? esscher_tilt(c, opt.proposal_tilt) : c;
    double tol = opt.hit_tol;
    if (tol < 0.0) tol = opt.sample.mode == Mode::BV ? 0.0 : default_hit_tolerance(c, opt.sample.dt);
    for (std::size_t attempt = 0; attempt < opt.budget; ++attempt) {
        PathSkeleton p = sample_path(law, x, opt.sample, rng);
        if (kill_at_last_passage(p, y, tol)) return p;
    }
    throw Error(ErrorKind::BudgetExhausted, "no path reached the target level");
}

CramerRoot cramer_root(const LevyCharacteristics& c) {
    auto psi = [&](double g) { return evaluate_exponent(c, g); };
    if (!(psi(0.0) < 0.0)) throw Error(ErrorKind::NoRoot, "psi(0) must be negative");
    double lo = -1.0;
    while (psi(lo) < 0.0) {
        lo *= 2.0;
        if (lo < -1e6) throw Error(ErrorKind::NoRoot, "psi < 0 on the whole bracket");
    }
    double a = lo, b = 0.0;  // psi(a) >= 0 > psi(b)
    double mid = 0.5 * (a + b);
    for (int i = 0; i < 400; ++i) {
        mid = 0.5 * (a + b);
        const double v = psi(mid);
        if (std::abs(v) < 1e-14) break;
        (v >= 0.0 ? a : b) = mid;
        if (b - a < 1e-15) break;
    }
    CramerRoot r;
    r.rho = mid;
    r.derivative = exponent_derivative(c, mid);
    return r;
}

}  // namespace ssmt
