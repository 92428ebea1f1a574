#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ssmt/common.hpp"

namespace ssmt {

struct JumpAtom {
    double size = 0.0;
    double rate = 0.0;
    bool operator==(const JumpAtom&) const = default;
};

// (sigma2, drift, finite atoms) plus killing. `drift` is the Levy-Khintchine
// coefficient: atoms with |y| <= 1 are compensated.
struct LevyCharacteristics {
    double sigma2 = 0.0;
    double drift = 0.0;
    std::vector<JumpAtom> jumps;
    double kill = 0.0;

    void validate() const;
    double sigma() const;
    double total_jump_rate() const;
    // slope of the path between jumps (drift net of the compensator)
    double slope() const;
    // psi'(0) ignoring the killing
    double mean() const;
    bool operator==(const LevyCharacteristics&) const = default;
};

std::complex<double> evaluate_exponent(const LevyCharacteristics& c, std::complex<double> gamma);
double evaluate_exponent(const LevyCharacteristics& c, double gamma);
double exponent_derivative(const LevyCharacteristics& c, double gamma);

LevyCharacteristics esscher_tilt(const LevyCharacteristics& c, double beta);
LevyCharacteristics dual(const LevyCharacteristics& c);

// ---------------------------------------------------------------------------
// Paths

// BV piece: linear with `slope` for `duration`, then `jump` if has_jump.
struct Piece {
    double duration = 0.0;
    double slope = 0.0;
    bool has_jump = false;
    double jump = 0.0;
    int atom = -1;
    bool operator==(const Piece&) const = default;
};

// DIFFUSION jump applied at the end of grid step `step`.
struct GridJump {
    std::size_t step = 0;
    double size = 0.0;
    int atom = -1;
    bool operator==(const GridJump&) const = default;
};

// One linear stretch of a path: value moves linearly from v0 to v1 on
// [t0, t0+h), then jumps by `jump`.
struct LinearPart {
    std::size_t index = 0;
    double t0 = 0.0;
    double h = 0.0;
    double v0 = 0.0;
    double v1 = 0.0;
    double jump = 0.0;
    bool last = false;
};

struct PathSkeleton {
    Mode mode = Mode::Diffusion;
    double start = 0.0;
    double lifetime = 0.0;
    bool killed = true;

    std::vector<Piece> pieces;

    // DIFFUSION grid: node k sits at time t_k with t_1 = first_step and
    // spacing dt afterwards; the last node is at `lifetime`. values[k] is
    // the value at the start of step k, values.back() the left limit at
    // the lifetime.
    double dt = 0.0;
    double first_step = 0.0;
    std::vector<double> values;
    std::vector<GridJump> jumps;

    std::size_t parts() const;
    double node_time(std::size_t k) const;
    double terminal() const;
    // right-continuous value; -inf at or after the lifetime
    double value_at(double s) const;
    std::pair<double, double> range() const;

    template <class F>
    void for_each_part(F&& f) const;

    bool operator==(const PathSkeleton&) const = default;
};

template <class F>
void PathSkeleton::for_each_part(F&& f) const {
    LinearPart p;
    if (mode == Mode::BV) {
        double t = 0.0, v = start;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const Piece& q = pieces[i];
            p.index = i;
            p.t0 = t;
            p.h = q.duration;
            p.v0 = v;
            p.v1 = v + q.slope * q.duration;
            p.jump = q.has_jump ? q.jump : 0.0;
            p.last = i + 1 == pieces.size();
            if (!f(static_cast<const LinearPart&>(p))) return;
            t += q.duration;
            v = p.v1 + p.jump;
        }
        return;
    }
    const std::size_t n = values.empty() ? 0 : values.size() - 1;
    std::size_t jc = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double js = 0.0;
        while (jc < jumps.size() && jumps[jc].step == k) js += jumps[jc++].size;
        p.index = k;
        p.t0 = node_time(k);
        p.h = node_time(k + 1) - p.t0;
        p.v0 = values[k];
        p.v1 = values[k + 1] - js;
        p.jump = js;
        p.last = k + 1 == n;
        if (!f(static_cast<const LinearPart&>(p))) return;
    }
}

struct SampleOptions {
    Mode mode = Mode::Diffusion;
    double dt = 1e-3;
    // finite horizon truncates the path (killed = false)
    double horizon = kInf;
    // with no killing and negative mean the path is absorbed once it falls
    // this far below its start
    double drop = 60.0;
};

PathSkeleton sample_path(const LevyCharacteristics& c, double start, const SampleOptions& opt, Rng& rng);
PathSkeleton sample_path(const LevyCharacteristics& c, double start, Mode mode, double dt, std::uint64_t seed);

PathSkeleton reverse_path(const PathSkeleton& p);

// Smallest and largest value over a linear stretch.
inline double part_min(const LinearPart& p) { return p.v0 < p.v1 ? p.v0 : p.v1; }
inline double part_max(const LinearPart& p) { return p.v0 < p.v1 ? p.v1 : p.v0; }

// Time the linear stretch spends in the open window (y-eps, y+eps).
double window_time(const LinearPart& p, double y, double eps);

// ---------------------------------------------------------------------------
// Local times

inline constexpr double kExact = 0.0;

struct LocalTimeAtom {
    double time = 0.0;
    double mass = 0.0;
    bool operator==(const LocalTimeAtom&) const = default;
};

struct LocalTimeProfile {
    double level = 0.0;
    double eps = kExact;
    std::vector<LocalTimeAtom> atoms;

    double total() const;
    double cumulative(double t) const;
    std::vector<std::pair<double, double>> cumulative_samples() const;
};

// eps == kExact: one atom per continuous passage (BV only). A passage at the
// end of a piece (path start, kill point, jump landing on y) carries half the
// mass, so a continuous pass through a piece boundary counts once.
LocalTimeProfile local_time(const PathSkeleton& path, double y, double eps);
double local_time_total(const PathSkeleton& path, double y, double eps);

struct TestFunction {
    std::function<double(double)> f;
    std::vector<double> breaks;
};

struct OccupationResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

// lhs = int f(xi_s) ds; rhs = int f(y) l(y, zeta) dy. EXACT integrates the
// piecewise constant local time field; windowed uses a level grid.
OccupationResult occupation_check(const PathSkeleton& path, const TestFunction& f, double eps, double grid_step = 0.0);

// ---------------------------------------------------------------------------
// Potential densities

enum class PotentialMethod { Fourier, MonteCarlo, ClosedForm };
const char* to_string(PotentialMethod m);

struct LevelGrid {
    double lo = -5.0;
    double hi = 5.0;
    std::size_t n = 1001;
    double step() const { return n > 1 ? (hi - lo) / static_cast<double>(n - 1) : 0.0; }
    double at(std::size_t i) const { return lo + step() * static_cast<double>(i); }
};

struct PotentialTable {
    LevelGrid grid;
    std::vector<double> values;
    std::vector<double> std_errors;  // Monte Carlo only
    PotentialMethod method = PotentialMethod::Fourier;

    // linear interpolation; OutOfGrid outside the grid
    double at(double y) const;
};

struct FourierOptions {
    double tolerance = 1e-9;
    double theta_cap = 2e4;
};

struct MonteCarloOptions {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    double eps = 1.0 / 64.0;
    std::uint64_t seed = 1;
};

PotentialTable potential_fourier(const LevyCharacteristics& c, const LevelGrid& grid, const FourierOptions& opt = {});
PotentialTable potential_monte_carlo(const LevyCharacteristics& c, const LevelGrid& grid, const MonteCarloOptions& opt);
// Brownian motion with drift and killing, no jumps.
PotentialTable potential_closed_form(const LevyCharacteristics& c, const LevelGrid& grid);
PotentialTable potential_density(const LevyCharacteristics& c, const LevelGrid& grid, PotentialMethod method,
                                 const MonteCarloOptions& mc = {});

// v(y - x) / v(0)
double hitting_probability(const PotentialTable& v, double x, double y);

double default_hit_tolerance(const LevyCharacteristics& c, double dt);

// Does the path come within `tol` of y continuously (jumps over y do not
// count)? tol = 0 means exact touching.
bool path_hits(const PathSkeleton& path, double y, double tol);

struct HitFrequency {
    double level = 0.0;
    double frequency = 0.0;
    double std_error = 0.0;
};

std::vector<HitFrequency> estimate_hit_frequencies(const LevyCharacteristics& c, double x, const std::vector<double>& ys,
                                                   std::size_t n, const SampleOptions& opt, double tol,
                                                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Conditioning

struct ConditionOptions {
    SampleOptions sample;
    double hit_tol = -1.0;        // < 0: default_hit_tolerance
    std::size_t budget = 1000000;
    double proposal_tilt = 0.0;   // sample from the beta-tilted law (same bridge law)
};

// Path from x killed at its last passage at y, under P_x( . | H_y < inf).
PathSkeleton sample_conditioned(const LevyCharacteristics& c, double x, double y, const ConditionOptions& opt, Rng& rng);

// Cut the path at its last passage at y; false if y is never reached.
bool kill_at_last_passage(PathSkeleton& path, double y, double tol);

struct CramerRoot {
    double rho = 0.0;
    double derivative = 0.0;   // psi'(rho) < 0
    double limit() const { return -1.0 / derivative; }
};

CramerRoot cramer_root(const LevyCharacteristics& c);

}  // namespace ssmt
