#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ssmt/lamperti.hpp"

namespace ssmt {

// Branching event: at `rate`, the parent jumps by parent_jump (nullopt: the
// parent dies) and children are born at f(s-) * exp(y_i).
struct BranchEvent {
    double rate = 0.0;
    std::optional<double> parent_jump;
    std::vector<double> children;  // non-increasing
    bool operator==(const BranchEvent&) const = default;
};

struct CharacteristicQuadruplet {
    LevyCharacteristics base;  // plain atoms and plain killing
    std::vector<BranchEvent> events;
    double alpha = 1.0;

    void validate() const;
    // Lambda_0: base atoms, then one atom per non-death event; death rates
    // go into the killing.
    LevyCharacteristics first_projection() const;
    // event index for every atom of first_projection(), -1 for plain atoms
    std::vector<int> atom_events() const;
    double death_rate() const;
    double total_child_rate() const;
    bool operator==(const CharacteristicQuadruplet&) const = default;
};

double cumulant(const CharacteristicQuadruplet& q, double gamma);
std::complex<double> cumulant(const CharacteristicQuadruplet& q, std::complex<double> gamma);
double cumulant_derivative(const CharacteristicQuadruplet& q, double gamma);

struct CumulantAnalysis {
    double gamma0 = 0.0;
    double kappa_gamma0 = 0.0;
    std::optional<double> omega;
    std::optional<double> kappa_prime_omega;
    bool p_moment_ok = true;
};

CumulantAnalysis analyze_cumulant(const CharacteristicQuadruplet& q, double search_max = 10.0);

// Characteristics with exponent kappa(gamma + .)
LevyCharacteristics spine_reference_characteristics(const CharacteristicQuadruplet& q, double gamma);

// ---------------------------------------------------------------------------

using Label = std::vector<std::uint32_t>;

struct OffspringAtom {
    double age = 0.0;         // pssMp time on the parent segment
    double size = 0.0;        // birth size
    double parent_before = 0.0;  // f(s-)
    double levy_time = 0.0;
    std::size_t part = 0;     // source part at whose end the birth happens
    int event = -1;
    std::uint32_t child = 0;  // label suffix
    long node = -1;           // -1: pruned (below x_min) or not stored
    bool operator==(const OffspringAtom&) const = default;
};

struct TreeNode {
    Label label;
    long parent = -1;
    double attach_age = 0.0;
    double birth_size = 1.0;
    double lifetime = 0.0;
    int death_event = -1;
    std::size_t generation = 0;
    PssmpPath decoration;
    std::vector<OffspringAtom> offspring;
    std::vector<std::size_t> children;
};

struct TreeOptions {
    Mode mode = Mode::Diffusion;
    double dt = 1e-3;
    double x_min = 1e-3;
    std::size_t node_cap = 1000000;
};

struct DecoratedTree {
    double alpha = 1.0;
    double start = 1.0;
    double x_min = 1e-3;
    Mode mode = Mode::Diffusion;
    double dt = 1e-3;
    std::vector<TreeNode> nodes;  // breadth-first; nodes[0] is the root
    std::map<Label, std::size_t> index;

    const TreeNode& root() const { return nodes.front(); }
    std::optional<std::size_t> find(const Label& u) const;
    // is a an ancestor of b (or equal)?
    bool ancestor_or_self(std::size_t a, std::size_t b) const;
};

DecoratedTree build_tree(const CharacteristicQuadruplet& q, double start, const TreeOptions& opt, std::uint64_t seed);

// sum_u int_0^{z_u} f_u(t)^(gamma - alpha) dt
double weighted_length(const DecoratedTree& tree, double gamma);

std::string label_string(const Label& u);

}  // namespace ssmt
