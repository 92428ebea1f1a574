#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ssmt/measures.hpp"
#include "ssmt/stats.hpp"

namespace ssmt {

struct MarkedPoint {
    std::size_t node = 0;
    double age = 0.0;
};

// Draw (node, age) proportionally to the atoms of L(x, dt).
MarkedPoint sample_marked_point(const TreeLevelMeasure& m, Rng& rng);

struct SpineSample {
    std::size_t node = 0;
    double age = 0.0;
    double length = 0.0;     // z'
    double max_value = 0.0;  // sup Y (left limits included)
    double min_value = 0.0;
    double mid_value = 0.0;      // Y(z'/2)
    double quarter_value = 0.0;  // Y(z'/4)
    double three_quarter_value = 0.0;
    double end_value = 0.0;  // Y(z') or Y(z'-) for reference paths
    double weight = 1.0;
    std::vector<std::pair<double, double>> path;  // (arclength, Y), filled on request
};

// Spine from the root to (node, age); resolution > 0 also fills the polyline.
SpineSample extract_spine(const DecoratedTree& tree, std::size_t node, double age, double resolution = 0.0);

// Y under Q_{1,x}: conditioned path of kappa^(gamma) from 0 to log x, then
// Lamperti with start 1.
SpineSample reference_spine_sample(const LevyCharacteristics& reference, double alpha, double x,
                                   const ConditionOptions& opt, Rng& rng);
// Reversed law: dual characteristics from log x to 0, Lamperti with start x.
SpineSample dual_spine_sample(const LevyCharacteristics& reference, double alpha, double x,
                              const ConditionOptions& opt, Rng& rng);

std::vector<SpineSample> reference_spines(const CharacteristicQuadruplet& q, double gamma, double x, std::size_t n,
                                          const ConditionOptions& opt, std::uint64_t seed);
std::vector<SpineSample> dual_spines(const CharacteristicQuadruplet& q, double gamma, double x, std::size_t n,
                                     const ConditionOptions& opt, std::uint64_t seed);

// One marked spine per tree with L(x,T) > 0, weighted by L(x,T) / E L(x,T).
// Trees with zero mass add a zero weight to `weights_all` only.
struct SpineEnsemble {
    std::vector<SpineSample> samples;
    MeanAccumulator weights_all;
};

void add_tree_spine(SpineEnsemble& e, const DecoratedTree& tree, double x, double eps, double mean_mass, Rng& rng);

struct KsEntry {
    std::string functional;
    KsResult result;
};

struct SpineTestReport {
    std::vector<KsEntry> entries;
    bool pass(double alpha) const;
};

// Weighted two-sample KS on (length, max, min, mid) of tree spines against
// reference spines.
SpineTestReport spine_law_test(const std::vector<SpineSample>& tree_spines, const std::vector<SpineSample>& reference);

// max Y on one half of the tree spines against x / min Y on the other half;
// then (length, Y(3z'/4)) of tree spines against (length, Y(z'/4)) of dual
// samples.
SpineTestReport reversal_test(const std::vector<SpineSample>& tree_spines, double x,
                              const std::vector<SpineSample>& dual);

void write_spine_csv(std::ostream& os, const std::vector<SpineSample>& s);

}  // namespace ssmt
