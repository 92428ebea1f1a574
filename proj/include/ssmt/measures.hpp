#pragma once

#include <iosfwd>
#include <vector>

#include "ssmt/tree.hpp"

namespace ssmt {

// Default window for DIFFUSION local times: 2^-6 in log scale.
inline constexpr double kDefaultWindow = 1.0 / 64.0;

double default_eps(Mode mode);

struct NodeProfile {
    std::size_t node = 0;
    LocalTimeProfile profile;  // atoms in pssMp age, level = x
};

struct TreeLevelMeasure {
    double level = 0.0;
    double eps = kExact;
    std::vector<NodeProfile> nodes;
    double total() const;
    double node_total(std::size_t node) const;
};

// Level of node u in its own Levy coordinates: log(x / chi_u).
double node_level(const TreeNode& n, double x);
// L(x, S_u)
double node_local_time(const TreeNode& n, double x, double eps);

// L(x, dt). Throws LevelTooLow when x < margin * x_min.
TreeLevelMeasure level_local_time(const DecoratedTree& tree, double x, double eps, double margin = 10.0);
double level_local_time_total(const DecoratedTree& tree, double x, double eps, double margin = 10.0);

struct HitPoint {
    std::size_t node = 0;
    double age = 0.0;
    double levy_time = 0.0;
    std::size_t part = 0;
};

struct HittingLine {
    double level = 0.0;
    std::vector<HitPoint> points;
    std::size_t count() const { return points.size(); }
};

// First continuous passage of xi through y on the segment: Levy time and
// part index, or nullopt. Jumps over y do not count.
std::optional<std::pair<double, std::size_t>> first_passage(const PssmpPath& x, double y);

HittingLine hitting_line(const DecoratedTree& tree, double x, double margin = 10.0);

// ---------------------------------------------------------------------------
// Potentials of kappa^(gamma) and the mean formulas

// gamma with kappa(gamma) < 0: Fourier inversion; kappa(gamma) = 0: shift by
// delta and untilt, w(y) = e^{-delta y} w^(gamma+delta)(y).
PotentialTable potential_w(const CharacteristicQuadruplet& q, double gamma, const LevelGrid& grid, double delta = 0.05);

struct MeanFormulas {
    CharacteristicQuadruplet quad;
    CumulantAnalysis analysis;
    PotentialTable v;          // psi of Lambda_0
    PotentialTable w_gamma0;
    PotentialTable w_omega;    // empty without omega

    // x^-gamma0 w^(gamma0)(log x)
    double mean_local_time(double x) const;
    // x^-omega w^(omega)(log x) / w^(omega)(0)
    double mean_hits(double x) const;
    // w^(gamma0)(0) / v(0)
    double mean_level_individuals() const;
    // 1/v(0) - 1/w^(gamma0)(0)
    double z_integral() const;
    // -1/kappa(gamma0)
    double mean_weighted_length() const;
    // psi(gamma0)/kappa(gamma0)
    double mean_birth_moment() const;
    // -kappa'(omega) w^(omega)(0)
    double hit_normalization() const;
};

MeanFormulas make_mean_formulas(const CharacteristicQuadruplet& q, const CumulantAnalysis& a,
                                const LevelGrid& grid = {-8.0, 8.0, 1601});

// ---------------------------------------------------------------------------
// Harmonic proxies

struct Germ {
    double value = 0.0;
    std::uint32_t branch = 0;  // first label entry of the germ point, 0 on the root segment
};

// First entrances of the decoration into (0, x_cut] along ancestral lines.
std::vector<Germ> harmonic_germs(const DecoratedTree& tree, double x_cut, double margin = 10.0);
double harmonic_mass_proxy(const DecoratedTree& tree, double omega, double x_cut, double margin = 10.0);

struct ConvergenceRow {
    double x = 0.0;
    double n_dev = 0.0;          // mean |x^w N (-k'(w) w(0)) - proxy|
    double l_dev = 0.0;          // mean |L / E L - proxy|
    double subtree_corr = 0.0;
    double mean_scaled_hits = 0.0;  // E[x^w N] (-k'(w) w(0))
    double mean_scaled_hits_se = 0.0;
};

struct ConvergenceReport {
    double x_cut = 0.0;
    double mean_proxy = 0.0;
    double mean_proxy_se = 0.0;
    std::vector<ConvergenceRow> rows;
    bool monotone_n() const;
    bool monotone_l() const;
};

// Per-tree quantities behind the diagnostics.
struct ConvergenceObservation {
    double proxy = 0.0;
    std::vector<double> scaled_hits;  // x^w N(x,T) (-k'(w) w(0)) per level
    std::vector<double> scaled_mass;  // L(x,T) / E L(x,T) per level
    std::vector<std::vector<std::pair<double, double>>> subtree_pairs;
};

// Streaming accumulator: feed trees one at a time.
class ConvergenceAccumulator {
public:
    ConvergenceAccumulator(const MeanFormulas& f, std::vector<double> xs, double x_cut, double eps);
    ConvergenceObservation observe(const DecoratedTree& tree) const;
    void add(const ConvergenceObservation& o);
    void add(const DecoratedTree& tree) { add(observe(tree)); }
    ConvergenceReport report() const;

private:
    const MeanFormulas* f_;
    std::vector<double> xs_;
    double x_cut_;
    double eps_;
    std::size_t n_ = 0;
    double proxy_sum_ = 0.0, proxy_sq_ = 0.0;
    std::vector<double> n_dev_, l_dev_, hits_sum_, hits_sq_;
    // pooled subtree pairs per level
    std::vector<std::vector<std::pair<double, double>>> pairs_;
};

ConvergenceReport convergence_diagnostics(const CharacteristicQuadruplet& q, const MeanFormulas& f,
                                          const std::vector<double>& xs, std::size_t n_trees, const TreeOptions& opt,
                                          std::uint64_t seed, double x_cut = 0.0);

double pearson(const std::vector<std::pair<double, double>>& xy);

void write_measure_csv(std::ostream& os, const DecoratedTree& tree, const TreeLevelMeasure& m);

}  // namespace ssmt
