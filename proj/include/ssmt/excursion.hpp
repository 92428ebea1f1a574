#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ssmt/io.hpp"
#include "ssmt/measures.hpp"

namespace ssmt {

// One passage of a segment through level 1: a local-time atom in BV mode, a
// cluster of grid steps with positive window time in DIFFUSION mode (steps
// closer than merge_gap in Levy time are merged).
struct Passage {
    double start_time = 0.0;  // Levy time
    double end_time = 0.0;
    std::size_t first_part = 0;
    std::size_t last_part = 0;
    double mass = 0.0;
    double cumulative = 0.0;  // local time up to the end of the passage
};

struct LevelIndividual {
    std::size_t node = 0;
    std::vector<Passage> passages;
    double total = 0.0;  // L(1, S_u)
    long level_parent = -1;  // index into LevelSet::individuals
    std::size_t parent_excursion = 0;  // excursion of the parent where u branches
    double depth = 0.0;  // L(1, [[rho, rho(u)]])
    std::vector<std::size_t> level_children;
};

struct LevelSet {
    double eps = kExact;
    std::vector<LevelIndividual> individuals;  // breadth-first in the tree
    std::map<std::size_t, std::size_t> by_node;
    double total() const;
};

// The Galton-Watson set L of individuals whose segment meets level 1, with
// the genealogy induced by the excursions. Tree must start at 1.
LevelSet level_individuals(const DecoratedTree& tree, double eps, double merge_gap);
LevelSet level_individuals(const DecoratedTree& tree);

struct MarkedExcursion {
    std::size_t individual = 0;
    std::size_t node = 0;
    std::size_t k = 0;       // passage index on the segment
    bool ultimate = false;
    double debut_time = 0.0;  // Levy time on the segment
    double end_time = 0.0;
    double debut_age = 0.0;   // pssMp age
    double end_age = 0.0;
    double index = 0.0;       // local time at the debut, a
    double root_value = 1.0;
    double mark_value = 1.0;
    std::size_t z = 0;        // first returns to 1 off the marked segment
    std::size_t n = 0;        // z + 1 unless ultimate
    std::vector<std::size_t> returns;   // tree nodes of the first returns
    std::vector<std::size_t> offspring; // tree children born inside
};

std::vector<MarkedExcursion> decompose_excursions(const DecoratedTree& tree, const LevelSet& ls);

struct LevelTreeNode {
    enum class Kind { Root, Branch, Leaf };
    long parent = -1;
    double edge_length = 0.0;
    Kind kind = Kind::Root;
    std::vector<std::size_t> children;
};

struct LevelTree {
    std::vector<LevelTreeNode> nodes;
    double total_length() const;
    std::size_t leaves() const;
    std::vector<std::size_t> branch_multiplicities() const;  // sorted
    std::vector<double> edge_lengths() const;                // sorted
    std::string shape() const;                               // canonical, lengths ignored
};

LevelTree build_level_tree(const LevelSet& ls, const std::vector<MarkedExcursion>& exc);

struct ExcursionAtom {
    double t = 0.0;
    std::size_t excursion = 0;
    std::size_t n = 0;
};

struct ExcursionProcess {
    std::vector<std::size_t> order;  // u(1), u(2), ... as LevelSet indices
    std::vector<double> boundaries;  // A(0) = 0, A(1), ...
    std::vector<ExcursionAtom> atoms;
    std::vector<long> F;             // F just after each atom
    long phi = -1;                   // first atom index with F = -1

    // (t, n) of the atoms with n != 1
    std::vector<std::pair<double, std::size_t>> branching_atoms() const;
};

ExcursionProcess build_excursion_process(const DecoratedTree& tree, const LevelSet& ls,
                                         const std::vector<MarkedExcursion>& exc);

// Depth-first replay: k = 0 closes the active tip, k >= 2 opens k tips; the
// clock between consecutive atoms is spent on one edge.
LevelTree reconstruct_level_tree(const std::vector<std::pair<double, std::size_t>>& atoms);

struct IsomorphismReport {
    bool multiplicities = false;
    bool leaves = false;
    bool shape = false;
    double max_length_diff = 0.0;
    bool ok(double tol) const { return multiplicities && leaves && shape && max_length_diff <= tol; }
};

IsomorphismReport compare_level_trees(const LevelTree& a, const LevelTree& b);

// Empirical excursion measure from the excursions on the root segment of
// replicas started at 1, per unit of v(0).
struct ExcursionMeasure {
    double v0 = 0.0;
    std::size_t replicas = 0;
    std::size_t tail = 8;
    std::vector<double> beta;        // N(n = k), k = 0..tail (tail bucket pooled)
    std::vector<double> nonultimate; // N(not ultimate, Z = j), j = 0..tail
    std::vector<double> ultimate;    // N(ultimate, Z = j)
    double total = 0.0;              // N(all)
    double z_integral = 0.0;         // int Z dN
    double drift() const;            // sum (k - 1) beta_k
    double branching_rate() const;   // sum_{k != 1} beta_k
    // offspring law of L: G(s) = Q(s) / (sum mu + sum_{j>=1} nu_j (1 - s^j))
    std::vector<double> offspring_law(std::size_t kmax) const;
};

class ExcursionMeasureAccumulator {
public:
    explicit ExcursionMeasureAccumulator(std::size_t tail = 8) : tail_(tail) {}
    void add(const std::vector<MarkedExcursion>& exc);
    ExcursionMeasure result(double v0) const;

private:
    std::size_t tail_;
    std::size_t replicas_ = 0;
    std::vector<double> n_count_, nonult_, ult_;
    double total_ = 0.0, z_sum_ = 0.0;
};

// level children of every individual
std::vector<std::size_t> offspring_counts(const LevelSet& ls);

Json excursions_to_json(const DecoratedTree& tree, const std::vector<MarkedExcursion>& exc);
Json level_tree_to_json(const LevelTree& t);
Json atoms_to_json(const std::vector<std::pair<double, std::size_t>>& atoms);
std::vector<std::pair<double, std::size_t>> atoms_from_json(const Json& j);

}  // namespace ssmt
