#include "ssmt/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace ssmt {

double LevelSet::total() const {
    double s = 0.0;
    for (const auto& u : individuals) s += u.total;
    return s;
}

namespace {

std::vector<Passage> diffusion_passages(const PathSkeleton& src, double y, double eps, double merge_gap) {
    std::vector<Passage> out;
    const double inv = 1.0 / (2.0 * eps);
    src.for_each_part([&](const LinearPart& p) {
        const double w = window_time(p, y, eps);
        if (w <= 0.0) return true;
        if (!out.empty() && p.t0 - out.back().end_time < merge_gap) {
            Passage& c = out.back();
            c.end_time = p.t0 + p.h;
            c.last_part = p.index;
            c.mass += w * inv;
        } else {
            out.push_back({p.t0, p.t0 + p.h, p.index, p.index, w * inv, 0.0});
        }
        return true;
    });
    return out;
}

std::vector<Passage> exact_passages(const PathSkeleton& src, double y) {
    std::vector<Passage> out;
    auto emit = [&](double t, double m, std::size_t k) {
        if (!out.empty() && out.back().end_time == t) {
            out.back().mass += m;
            return;
        }
        out.push_back({t, t, k, k, m, 0.0});
    };
    src.for_each_part([&](const LinearPart& p) {
        if (p.v0 == p.v1) {
            if (p.v0 == y && p.h > 0.0) throw Error(ErrorKind::ExactUnavailable, "flat piece at the level");
            return true;
        }
        const double full = p.h / std::abs(p.v1 - p.v0);
        if (y > part_min(p) && y < part_max(p))
            emit(p.t0 + (y - p.v0) / (p.v1 - p.v0) * p.h, full, p.index);
        else if (y == p.v0)
            emit(p.t0, 0.5 * full, p.index);
        else if (y == p.v1)
            emit(p.t0 + p.h, 0.5 * full, p.index);
        return true;
    });
    return out;
}

bool may_touch(const TreeNode& n, double eps) {
    const double pad = std::exp(std::max(eps, 0.0));
    return 1.0 <= n.decoration.supremum() * pad && 1.0 >= n.decoration.infimum() / pad;
}

// excursion of u in which the birth `a` falls, if any
std::optional<std::size_t> chunk_of(const LevelIndividual& u, const OffspringAtom& a, Mode mode) {
    std::optional<std::size_t> k;
    for (std::size_t i = 0; i < u.passages.size(); ++i) {
        const bool after = mode == Mode::BV ? u.passages[i].start_time <= a.levy_time : u.passages[i].first_part <= a.part;
        if (!after) break;
        k = i;
    }
    return k;
}

const OffspringAtom& birth_atom(const DecoratedTree& tree, std::size_t v) {
    const TreeNode& n = tree.nodes[v];
    const TreeNode& p = tree.nodes[static_cast<std::size_t>(n.parent)];
    return p.offspring.at(n.label.back() - 1);
}

}  // namespace

LevelSet level_individuals(const DecoratedTree& tree, double eps, double merge_gap) {
    if (std::abs(tree.start - 1.0) > 1e-12) throw Error(ErrorKind::ConfigInvalid, "level set needs a tree started at 1");
    if (tree.mode == Mode::Diffusion && !(eps > 0.0))
        throw Error(ErrorKind::ExactUnavailable, "DIFFUSION level set needs a window");
    LevelSet ls;
    ls.eps = eps;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (!may_touch(n, eps)) continue;
        const PathSkeleton& src = n.decoration.source();
        const double y = node_level(n, 1.0);
        LevelIndividual u;
        u.node = i;
        u.passages = eps == kExact ? exact_passages(src, y) : diffusion_passages(src, y, eps, merge_gap);
        if (u.passages.empty()) continue;
        double c = 0.0;
        for (auto& p : u.passages) p.cumulative = c += p.mass;
        u.total = c;
        if (!(u.total > 0.0)) continue;
        ls.by_node[i] = ls.individuals.size();
        ls.individuals.push_back(std::move(u));
    }
    if (ls.individuals.empty() || ls.individuals.front().node != 0)
        throw Error(ErrorKind::EmptyMeasure, "root segment does not meet level 1");

    for (std::size_t j = 1; j < ls.individuals.size(); ++j) {
        LevelIndividual& v = ls.individuals[j];
        std::size_t cur = v.node;
        while (true) {
            const OffspringAtom& a = birth_atom(tree, cur);
            const std::size_t par = static_cast<std::size_t>(tree.nodes[cur].parent);
            const auto it = ls.by_node.find(par);
            if (it != ls.by_node.end()) {
                const LevelIndividual& u = ls.individuals[it->second];
                if (const auto k = chunk_of(u, a, tree.mode)) {
                    v.level_parent = static_cast<long>(it->second);
                    v.parent_excursion = *k;
                    v.depth = u.depth + u.passages[*k].cumulative;
                    break;
                }
            }
            cur = par;
        }
        ls.individuals[static_cast<std::size_t>(v.level_parent)].level_children.push_back(j);
    }
    return ls;
}

LevelSet level_individuals(const DecoratedTree& tree) {
    return level_individuals(tree, default_eps(tree.mode), tree.mode == Mode::Diffusion ? 10.0 * tree.dt : 0.0);
}

std::vector<MarkedExcursion> decompose_excursions(const DecoratedTree& tree, const LevelSet& ls) {
    std::vector<MarkedExcursion> out;
    for (std::size_t i = 0; i < ls.individuals.size(); ++i) {
        const LevelIndividual& u = ls.individuals[i];
        const TreeNode& n = tree.nodes[u.node];
        const PssmpPath& d = n.decoration;
        const std::size_t m = u.passages.size();
        const std::size_t first = out.size();
        for (std::size_t k = 0; k < m; ++k) {
            MarkedExcursion e;
            e.individual = i;
            e.node = u.node;
            e.k = k;
            e.ultimate = k + 1 == m;
            e.debut_time = u.passages[k].end_time;
            e.end_time = e.ultimate ? d.source().lifetime : u.passages[k + 1].start_time;
            e.debut_age = d.time_of(e.debut_time);
            e.end_age = e.ultimate ? d.lifetime() : d.time_of(e.end_time);
            e.index = u.passages[k].cumulative;
            e.root_value = tree.mode == Mode::BV ? 1.0 : d.value_before(e.debut_age);
            e.mark_value = e.ultimate ? d.value_before(d.lifetime()) : (tree.mode == Mode::BV ? 1.0 : d.value_at(e.end_age));
            out.push_back(std::move(e));
        }
        for (std::size_t c : n.children)
            if (const auto k = chunk_of(u, birth_atom(tree, c), tree.mode)) out[first + *k].offspring.push_back(c);
        for (std::size_t j : u.level_children) out[first + ls.individuals[j].parent_excursion].returns.push_back(ls.individuals[j].node);
        for (std::size_t k = 0; k < m; ++k) {
            MarkedExcursion& e = out[first + k];
            e.z = e.returns.size();
            e.n = e.ultimate ? e.z : e.z + 1;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

double LevelTree::total_length() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.edge_length;
    return s;
}

std::size_t LevelTree::leaves() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const LevelTreeNode& n) { return n.kind == LevelTreeNode::Kind::Leaf; }));
}

std::vector<std::size_t> LevelTree::branch_multiplicities() const {
    std::vector<std::size_t> out;
    for (const auto& n : nodes)
        if (n.kind == LevelTreeNode::Kind::Branch) out.push_back(n.children.size());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<double> LevelTree::edge_lengths() const {
    std::vector<double> out;
    for (const auto& n : nodes)
        if (n.parent >= 0) out.push_back(n.edge_length);
    std::sort(out.begin(), out.end());
    return out;
}

std::string LevelTree::shape() const {
    if (nodes.empty()) return {};
    std::vector<std::string> s(nodes.size());
    // children always have larger indices than their parent
    for (std::size_t i = nodes.size(); i-- > 0;) {
        std::vector<std::string> c;
        for (std::size_t k : nodes[i].children) c.push_back(std::move(s[k]));
        std::sort(c.begin(), c.end());
        std::string r = "(";
        for (auto& x : c) r += x;
        s[i] = r + ")";
    }
    return s[0];
}

namespace {

std::size_t add_node(LevelTree& t, std::size_t parent, double len, LevelTreeNode::Kind kind) {
    LevelTreeNode n;
    n.parent = static_cast<long>(parent);
    n.edge_length = len;
    n.kind = kind;
    t.nodes.push_back(n);
    const std::size_t id = t.nodes.size() - 1;
    t.nodes[parent].children.push_back(id);
    return id;
}

std::vector<std::size_t> excursion_offsets(const LevelSet& ls, const std::vector<MarkedExcursion>& exc) {
    std::vector<std::size_t> off(ls.individuals.size() + 1, 0);
    for (const auto& e : exc) ++off[e.individual + 1];
    for (std::size_t i = 1; i < off.size(); ++i) off[i] += off[i - 1];
    return off;
}

}  // namespace

LevelTree build_level_tree(const LevelSet& ls, const std::vector<MarkedExcursion>& exc) {
    LevelTree t;
    t.nodes.push_back({});
    if (ls.individuals.empty()) return t;
    const auto off = excursion_offsets(ls, exc);
    struct Work {
        std::size_t individual, at;
        double carry;
    };
    std::vector<Work> stack{{0, 0, 0.0}};
    auto push_returns = [&](const MarkedExcursion& e, std::size_t at, double carry) {
        for (auto it = e.returns.rbegin(); it != e.returns.rend(); ++it) stack.push_back({ls.by_node.at(*it), at, carry});
    };
    while (!stack.empty()) {
        const Work w = stack.back();
        stack.pop_back();
        const LevelIndividual& u = ls.individuals[w.individual];
        std::size_t cur = w.at;
        double last = 0.0, carry = w.carry;
        for (std::size_t q = off[w.individual]; q < off[w.individual + 1]; ++q) {
            const MarkedExcursion& e = exc[q];
            if (!e.ultimate) {
                if (e.z == 0) continue;
                const std::size_t b = add_node(t, cur, e.index - last + carry, LevelTreeNode::Kind::Branch);
                push_returns(e, b, 0.0);
                cur = b;
                last = e.index;
                carry = 0.0;
                continue;
            }
            const double len = u.total - last + carry;
            if (e.z == 0)
                add_node(t, cur, len, LevelTreeNode::Kind::Leaf);
            else if (e.z == 1)
                push_returns(e, cur, len);
            else
                push_returns(e, add_node(t, cur, len, LevelTreeNode::Kind::Branch), 0.0);
        }
    }
    return t;
}

std::vector<std::pair<double, std::size_t>> ExcursionProcess::branching_atoms() const {
    std::vector<std::pair<double, std::size_t>> out;
    for (const auto& a : atoms)
        if (a.n != 1) out.emplace_back(a.t, a.n);
    return out;
}

ExcursionProcess build_excursion_process(const DecoratedTree& tree, const LevelSet& ls,
                                         const std::vector<MarkedExcursion>& exc) {
    ExcursionProcess p;
    p.boundaries.push_back(0.0);
    if (ls.individuals.empty()) return p;
    const auto off = excursion_offsets(ls, exc);
    std::vector<Label> labels;
    for (const auto& u : ls.individuals) labels.push_back(tree.nodes[u.node].label);
    // maximal depth first, ties by the smaller label
    std::set<std::tuple<double, Label, std::size_t>> avail;
    avail.insert({-0.0, Label{}, 0});
    long f = 0;
    while (!avail.empty()) {
        const auto it = avail.begin();
        const std::size_t i = std::get<2>(*it);
        avail.erase(it);
        p.order.push_back(i);
        const double a0 = p.boundaries.back();
        for (std::size_t q = off[i]; q < off[i + 1]; ++q) {
            p.atoms.push_back({a0 + exc[q].index, q, exc[q].n});
            f += static_cast<long>(exc[q].n) - 1;
            p.F.push_back(f);
            if (f == -1 && p.phi < 0) p.phi = static_cast<long>(p.atoms.size()) - 1;
        }
        p.boundaries.push_back(a0 + ls.individuals[i].total);
        for (std::size_t j : ls.individuals[i].level_children) avail.insert({-ls.individuals[j].depth, labels[j], j});
    }
    return p;
}

LevelTree reconstruct_level_tree(const std::vector<std::pair<double, std::size_t>>& atoms) {
    LevelTree t;
    t.nodes.push_back({});
    std::vector<std::size_t> tips{0};
    double prev = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto [time, k] = atoms[i];
        if (k == 1) throw Error(ErrorKind::MalformedSequence, "atom with k = 1");
        if (tips.empty()) throw Error(ErrorKind::MalformedSequence, "atoms after the tree closed");
        if (!(time >= prev)) throw Error(ErrorKind::MalformedSequence, "atom times must be nondecreasing");
        const std::size_t parent = tips.back();
        tips.pop_back();
        const std::size_t c = add_node(t, parent, time - prev, k == 0 ? LevelTreeNode::Kind::Leaf : LevelTreeNode::Kind::Branch);
        for (std::size_t j = 0; j < k; ++j) tips.push_back(c);
        prev = time;
    }
    if (!tips.empty()) throw Error(ErrorKind::MalformedSequence, "sequence ends with open tips");
    return t;
}

IsomorphismReport compare_level_trees(const LevelTree& a, const LevelTree& b) {
    IsomorphismReport r;
    r.multiplicities = a.branch_multiplicities() == b.branch_multiplicities();
    r.leaves = a.leaves() == b.leaves();
    r.shape = a.shape() == b.shape();
    const auto ea = a.edge_lengths(), eb = b.edge_lengths();
    if (ea.size() != eb.size()) {
        r.max_length_diff = kInf;
        return r;
    }
    for (std::size_t i = 0; i < ea.size(); ++i) r.max_length_diff = std::max(r.max_length_diff, std::abs(ea[i] - eb[i]));
    return r;
}

// ---------------------------------------------------------------------------

double ExcursionMeasure::drift() const {
    double s = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) s += (static_cast<double>(k) - 1.0) * beta[k];
    return s;
}

double ExcursionMeasure::branching_rate() const {
    double s = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k)
        if (k != 1) s += beta[k];
    return s;
}

std::vector<double> ExcursionMeasure::offspring_law(std::size_t kmax) const {
    double d = 0.0;
    for (double m : ultimate) d += m;
    for (std::size_t j = 1; j < nonultimate.size(); ++j) d += nonultimate[j];
    std::vector<double> p(kmax + 1, 0.0);
    if (!(d > 0.0)) return p;
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) {
        double s = k < ultimate.size() ? ultimate[k] : 0.0;
        for (std::size_t j = 1; j <= k && j < nonultimate.size(); ++j) s += nonultimate[j] * p[k - j];
        p[k] = s / d;
        acc += p[k];
    }
    p[kmax] = std::max(0.0, 1.0 - acc);
    return p;
}

void ExcursionMeasureAccumulator::add(const std::vector<MarkedExcursion>& exc) {
    if (n_count_.empty()) {
        n_count_.assign(tail_ + 1, 0.0);
        nonult_.assign(tail_ + 1, 0.0);
        ult_.assign(tail_ + 1, 0.0);
    }
    ++replicas_;
    for (const auto& e : exc) {
        if (e.individual != 0) continue;
        n_count_[std::min(e.n, tail_)] += 1.0;
        (e.ultimate ? ult_ : nonult_)[std::min(e.z, tail_)] += 1.0;
        total_ += 1.0;
        z_sum_ += static_cast<double>(e.z);
    }
}

ExcursionMeasure ExcursionMeasureAccumulator::result(double v0) const {
    ExcursionMeasure m;
    m.v0 = v0;
    m.replicas = replicas_;
    m.tail = tail_;
    const double c = replicas_ > 0 && v0 > 0.0 ? 1.0 / (static_cast<double>(replicas_) * v0) : 0.0;
    auto scale = [&](const std::vector<double>& x) {
        std::vector<double> y(tail_ + 1, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * c;
        return y;
    };
    m.beta = scale(n_count_);
    m.nonultimate = scale(nonult_);
    m.ultimate = scale(ult_);
    m.total = total_ * c;
    m.z_integral = z_sum_ * c;
    return m;
}

std::vector<std::size_t> offspring_counts(const LevelSet& ls) {
    std::vector<std::size_t> out;
    out.reserve(ls.individuals.size());
    for (const auto& u : ls.individuals) out.push_back(u.level_children.size());
    return out;
}

// ---------------------------------------------------------------------------

Json excursions_to_json(const DecoratedTree& tree, const std::vector<MarkedExcursion>& exc) {
    Json list = Json::array();
    for (const auto& e : exc) {
        Json r = Json::array();
        for (std::size_t v : e.returns) r.push_back(label_string(tree.nodes[v].label));
        list.push_back({{"node", label_string(tree.nodes[e.node].label)},
                        {"k", e.k},
                        {"ultimate", e.ultimate},
                        {"debut_age", e.debut_age},
                        {"end_age", e.end_age},
                        {"a", e.index},
                        {"root_value", e.root_value},
                        {"mark_value", e.mark_value},
                        {"z", e.z},
                        {"n", e.n},
                        {"returns", r}});
    }
    return {{"schema", "ssmt.excursions/1"}, {"excursions", list}};
}

Json level_tree_to_json(const LevelTree& t) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
        const char* kind = n.kind == LevelTreeNode::Kind::Root ? "root" : n.kind == LevelTreeNode::Kind::Leaf ? "leaf" : "branch";
        nodes.push_back({{"parent", n.parent < 0 ? Json(nullptr) : Json(n.parent)},
                         {"edge_length", n.edge_length},
                         {"kind", kind},
                         {"children", n.children}});
    }
    return {{"schema", "ssmt.level_tree/1"}, {"total_length", t.total_length()}, {"leaves", t.leaves()}, {"nodes", nodes}};
}

Json atoms_to_json(const std::vector<std::pair<double, std::size_t>>& atoms) {
    Json a = Json::array();
    for (const auto& [t, k] : atoms) a.push_back({t, k});
    return {{"schema", "ssmt.atoms/1"}, {"atoms", a}};
}

std::vector<std::pair<double, std::size_t>> atoms_from_json(const Json& j) {
    try {
        std::vector<std::pair<double, std::size_t>> out;
        for (const auto& a : j.at("atoms")) out.emplace_back(a.at(0).get<double>(), a.at(1).get<std::size_t>());
        return out;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::IoError, std::string("atoms json: ") + e.what());
    }
}

}  // namespace ssmt
