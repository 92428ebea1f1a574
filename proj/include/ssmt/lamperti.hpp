#pragma once

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "ssmt/levy.hpp"

namespace ssmt {

// Positive self-similar Markov path X_t = start * exp(xi_s - xi_0),
// t = start^alpha * int_0^s exp(alpha (xi_r - xi_0)) dr.
//
// Built by to_pssmp the path keeps a handle on its Levy source and the time
// change at every part boundary. Built from samples it is a polyline in t
// (repeated t = jump).
class PssmpPath {
public:
    PssmpPath() = default;

    static PssmpPath from_samples(double alpha, std::vector<std::pair<double, double>> samples);

    double alpha() const { return alpha_; }
    double start() const { return start_; }
    double lifetime() const { return lifetime_; }
    bool has_source() const { return static_cast<bool>(source_); }
    const PathSkeleton& source() const;
    const std::shared_ptr<const PathSkeleton>& source_handle() const { return source_; }

    // pssMp time at Levy time s (source required)
    double time_of(double s) const;
    // Levy time at pssMp time t (source required)
    double levy_time(double t) const;
    // pssMp time at the start of every source part, plus the lifetime
    const std::vector<double>& part_times() const { return part_t_; }
    const std::vector<LinearPart>& parts() const { return parts_; }
    // pssMp time elapsed `tau` into part k
    double part_time(std::size_t k, double tau) const;
    // Levy time into part k after pssMp time `dt` inside it
    double part_tau(std::size_t k, double dt) const;
    double to_size(double xi) const;

    // right-continuous value, 0 at and after the lifetime
    double value_at(double t) const;
    // left limit at t
    double value_before(double t) const;

    // int_0^z X_t^(gamma - alpha) dt, i.e. start^gamma int e^{gamma (xi - xi_0)} ds
    double weighted_integral(double gamma) const;

    double supremum() const;
    double infimum() const;

    // (t, X) polyline; consecutive samples at most `resolution` apart in t
    // inside a part; jumps give two samples at the same t; ends with (z, 0).
    std::vector<std::pair<double, double>> polyline(double resolution) const;
    const std::vector<std::pair<double, double>>& samples() const { return samples_; }

    void write_csv(std::ostream& os, double resolution) const;

private:
    friend PssmpPath to_pssmp(std::shared_ptr<const PathSkeleton> path, double alpha, double start);

    double alpha_ = 1.0;
    double start_ = 1.0;
    double lifetime_ = 0.0;
    double xi0_ = 0.0;
    std::shared_ptr<const PathSkeleton> source_;
    std::vector<LinearPart> parts_;
    std::vector<double> part_t_;
    std::vector<std::pair<double, double>> samples_;
};

PssmpPath to_pssmp(std::shared_ptr<const PathSkeleton> path, double alpha, double start);
PssmpPath to_pssmp(const PathSkeleton& path, double alpha, double start);

// Inverse transform. With a source handle the source is returned. A polyline
// is inverted through ds = X^-alpha dt into linear-in-s BV pieces (exact for
// alpha = 1); a continuous approach to 0 is cut at `horizon` in Levy time,
// or once xi has dropped by `drop`.
PathSkeleton from_pssmp(const PssmpPath& x, double horizon = kInf, double drop = 60.0);

// Map a local-time profile of the source at level y to L(x, .) with
// x = start * exp(y - xi_0), atoms moved to pssMp time, masses unchanged.
LocalTimeProfile transfer_local_time(const LocalTimeProfile& profile, const PssmpPath& x);

// lhs = int_0^z f(X_t) dt; rhs = int f(x) L(x,z) x^(alpha-1) dx
OccupationResult pssmp_occupation_check(const PssmpPath& x, const TestFunction& f, double eps, double grid_step = 0.0);

}  // namespace ssmt
