#include "ssmt/spine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ssmt {

MarkedPoint sample_marked_point(const TreeLevelMeasure& m, Rng& rng) {
    const double total = m.total();
    if (!(total > 0.0)) throw Error(ErrorKind::EmptyMeasure, "level measure has no mass");
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    const NodeProfile* last = nullptr;
    const LocalTimeAtom* last_atom = nullptr;
    for (const auto& np : m.nodes)
        for (const auto& a : np.profile.atoms) {
            if (a.mass <= 0.0) continue;
            last = &np;
            last_atom = &a;
            u -= a.mass;
            if (u < 0.0) return {np.node, a.time};
        }
    return {last->node, last_atom->time};
}

namespace {

struct Segment {
    const PssmpPath* path;
    double cut;
};

struct Extremes {
    double lo = kInf, hi = -kInf;
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

// values of one segment on [0, cut], left limits included
void scan(const PssmpPath& d, double cut, Extremes& e) {
    const auto& parts = d.parts();
    const auto& pt = d.part_times();
    e.add(d.start());
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const double t0 = pt[k], t1 = pt[k + 1];
        if (t0 >= cut && k > 0) break;
        const LinearPart& p = parts[k];
        e.add(d.to_size(p.v0));
        if (t1 <= cut) {
            e.add(d.to_size(p.v1));
        } else {
            const double tau = d.part_tau(k, cut - t0);
            e.add(d.to_size(p.h > 0.0 ? p.v0 + (p.v1 - p.v0) * tau / p.h : p.v0));
            break;
        }
    }
}

SpineSample summarize(const std::vector<Segment>& segs, double resolution) {
    SpineSample s;
    Extremes e;
    double len = 0.0;
    for (const auto& g : segs) {
        scan(*g.path, g.cut, e);
        len += g.cut;
    }
    s.length = len;
    s.max_value = e.hi;
    s.min_value = e.lo;
    auto at = [&](double r) {
        double off = 0.0;
        for (const auto& g : segs) {
            if (r < off + g.cut) return g.path->value_at(r - off);
            off += g.cut;
        }
        return segs.back().path->value_before(segs.back().cut);
    };
    s.quarter_value = at(0.25 * len);
    s.mid_value = at(0.5 * len);
    s.three_quarter_value = at(0.75 * len);
    s.end_value = segs.back().path->value_before(segs.back().cut);
    if (resolution > 0.0) {
        double off = 0.0;
        for (const auto& g : segs) {
            for (const auto& [t, v] : g.path->polyline(resolution)) {
                if (t >= g.cut) break;
                s.path.emplace_back(off + t, v);
            }
            s.path.emplace_back(off + g.cut, g.path->value_before(g.cut));
            off += g.cut;
        }
    }
    return s;
}

}  // namespace

SpineSample extract_spine(const DecoratedTree& tree, std::size_t node, double age, double resolution) {
    std::vector<std::size_t> chain;
    for (long i = static_cast<long>(node); i >= 0; i = tree.nodes[static_cast<std::size_t>(i)].parent)
        chain.push_back(static_cast<std::size_t>(i));
    std::reverse(chain.begin(), chain.end());
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const double cut = i + 1 < chain.size() ? tree.nodes[chain[i + 1]].attach_age : age;
        segs.push_back({&tree.nodes[chain[i]].decoration, cut});
    }
    SpineSample s = summarize(segs, resolution);
    s.node = node;
    s.age = age;
    return s;
}

SpineSample reference_spine_sample(const LevyCharacteristics& reference, double alpha, double x,
                                   const ConditionOptions& opt, Rng& rng) {
    const PssmpPath y = to_pssmp(sample_conditioned(reference, 0.0, std::log(x), opt, rng), alpha, 1.0);
    return summarize({{&y, y.lifetime()}}, 0.0);
}

SpineSample dual_spine_sample(const LevyCharacteristics& reference, double alpha, double x,
                              const ConditionOptions& opt, Rng& rng) {
    const PssmpPath y = to_pssmp(sample_conditioned(dual(reference), std::log(x), 0.0, opt, rng), alpha, x);
    return summarize({{&y, y.lifetime()}}, 0.0);
}

std::vector<SpineSample> reference_spines(const CharacteristicQuadruplet& q, double gamma, double x, std::size_t n,
                                          const ConditionOptions& opt, std::uint64_t seed) {
    const LevyCharacteristics ref = spine_reference_characteristics(q, gamma);
    std::vector<SpineSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, i);
        out.push_back(reference_spine_sample(ref, q.alpha, x, opt, rng));
    }
    return out;
}

std::vector<SpineSample> dual_spines(const CharacteristicQuadruplet& q, double gamma, double x, std::size_t n,
                                     const ConditionOptions& opt, std::uint64_t seed) {
    const LevyCharacteristics ref = spine_reference_characteristics(q, gamma);
    std::vector<SpineSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, i);
        out.push_back(dual_spine_sample(ref, q.alpha, x, opt, rng));
    }
    return out;
}

void add_tree_spine(SpineEnsemble& e, const DecoratedTree& tree, double x, double eps, double mean_mass, Rng& rng) {
    const TreeLevelMeasure m = level_local_time(tree, x, eps);
    const double total = m.total();
    e.weights_all.add(total / mean_mass);
    if (!(total > 0.0)) return;
    const MarkedPoint mp = sample_marked_point(m, rng);
    SpineSample s = extract_spine(tree, mp.node, mp.age);
    s.weight = total / mean_mass;
    e.samples.push_back(std::move(s));
}

bool SpineTestReport::pass(double alpha) const {
    for (const auto& e : entries)
        if (!(e.result.p_value > alpha)) return false;
    return !entries.empty();
}

namespace {

template <class F>
std::vector<double> column(const std::vector<SpineSample>& s, F f) {
    std::vector<double> out;
    out.reserve(s.size());
    for (const auto& x : s) out.push_back(f(x));
    return out;
}

}  // namespace

SpineTestReport spine_law_test(const std::vector<SpineSample>& tree_spines, const std::vector<SpineSample>& reference) {
    const auto w = column(tree_spines, [](const SpineSample& s) { return s.weight; });
    SpineTestReport r;
    auto add = [&](const char* name, auto f) {
        r.entries.push_back({name, ks_two_sample_weighted(column(tree_spines, f), w, column(reference, f), {})});
    };
    add("length", [](const SpineSample& s) { return s.length; });
    add("max", [](const SpineSample& s) { return s.max_value; });
    add("min", [](const SpineSample& s) { return s.min_value; });
    add("mid", [](const SpineSample& s) { return s.mid_value; });
    return r;
}

SpineTestReport reversal_test(const std::vector<SpineSample>& tree_spines, double x, const std::vector<SpineSample>& dual) {
    std::vector<double> mx, wmx, inv, winv;
    for (std::size_t i = 0; i < tree_spines.size(); ++i) {
        const auto& s = tree_spines[i];
        if (i % 2 == 0) {
            mx.push_back(s.max_value);
            wmx.push_back(s.weight);
        } else {
            inv.push_back(x / s.min_value);
            winv.push_back(s.weight);
        }
    }
    SpineTestReport r;
    r.entries.push_back({"max_vs_x_over_min", ks_two_sample_weighted(mx, wmx, inv, winv)});
    if (!dual.empty()) {
        const auto w = column(tree_spines, [](const SpineSample& s) { return s.weight; });
        r.entries.push_back({"dual_length", ks_two_sample_weighted(column(tree_spines, [](const SpineSample& s) { return s.length; }), w,
                                                                   column(dual, [](const SpineSample& s) { return s.length; }), {})});
        r.entries.push_back({"dual_quarter",
                             ks_two_sample_weighted(column(tree_spines, [](const SpineSample& s) { return s.three_quarter_value; }), w,
                                                    column(dual, [](const SpineSample& s) { return s.quarter_value; }), {})});
    }
    return r;
}

void write_spine_csv(std::ostream& os, const std::vector<SpineSample>& s) {
    os.precision(17);
    os << "sample,arclength,value\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        for (const auto& [r, v] : s[i].path) os << i << ',' << r << ',' << v << '\n';
}

}  // namespace ssmt
