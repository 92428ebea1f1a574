#include "ssmt/tree.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <deque>
#include <sstream>

namespace ssmt {

void CharacteristicQuadruplet::validate() const {
    base.validate();
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::ConfigInvalid, "alpha must be > 0");
    for (const auto& e : events) {
        if (!(e.rate > 0.0) || !std::isfinite(e.rate)) throw Error(ErrorKind::ConfigInvalid, "event rates must be > 0");
        if (e.parent_jump && !std::isfinite(*e.parent_jump))
            throw Error(ErrorKind::ConfigInvalid, "parent jump must be finite");
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (!std::isfinite(e.children[i])) throw Error(ErrorKind::ConfigInvalid, "child displacement must be finite");
            if (i > 0 && e.children[i] > e.children[i - 1])
                throw Error(ErrorKind::ConfigInvalid, "children must be non-increasing");
        }
    }
}

LevyCharacteristics CharacteristicQuadruplet::first_projection() const {
    LevyCharacteristics c = base;
    for (const auto& e : events) {
        if (e.parent_jump)
            c.jumps.push_back({*e.parent_jump, e.rate});
        else
            c.kill += e.rate;
    }
    return c;
}

std::vector<int> CharacteristicQuadruplet::atom_events() const {
    std::vector<int> out(base.jumps.size(), -1);
    for (std::size_t i = 0; i < events.size(); ++i)
        if (events[i].parent_jump) out.push_back(static_cast<int>(i));
    return out;
}

double CharacteristicQuadruplet::death_rate() const {
    double r = 0.0;
    for (const auto& e : events)
        if (!e.parent_jump) r += e.rate;
    return r;
}

double CharacteristicQuadruplet::total_child_rate() const {
    double r = 0.0;
    for (const auto& e : events) r += e.rate * static_cast<double>(e.children.size());
    return r;
}

double cumulant(const CharacteristicQuadruplet& q, double gamma) {
    double k = evaluate_exponent(q.first_projection(), gamma);
    for (const auto& e : q.events)
        for (double y : e.children) k += e.rate * std::exp(gamma * y);
    return k;
}

std::complex<double> cumulant(const CharacteristicQuadruplet& q, std::complex<double> gamma) {
    std::complex<double> k = evaluate_exponent(q.first_projection(), gamma);
    for (const auto& e : q.events)
        for (double y : e.children) k += e.rate * std::exp(gamma * y);
    return k;
}

double cumulant_derivative(const CharacteristicQuadruplet& q, double gamma) {
    double k = exponent_derivative(q.first_projection(), gamma);
    for (const auto& e : q.events)
        for (double y : e.children) k += e.rate * y * std::exp(gamma * y);
    return k;
}

CumulantAnalysis analyze_cumulant(const CharacteristicQuadruplet& q, double search_max) {
    if (!(search_max > 0.0)) throw Error(ErrorKind::ConfigInvalid, "search_max must be > 0");
    q.validate();
    auto kappa = [&](double g) { return cumulant(q, g); };
    const int n = 4000;
    double best = kInf, arg = 0.0;
    int ibest = 0;
    for (int i = 1; i <= n; ++i) {
        const double g = search_max * i / n;
        const double k = kappa(g);
        if (k < best) {
            best = k;
            arg = g;
            ibest = i;
        }
    }
    if (!(best < 0.0)) throw Error(ErrorKind::SubcriticalityViolated, "kappa >= 0 on the search grid");
    const double lo = search_max * std::max(ibest - 1, 0) / n;
    const double hi = search_max * std::min(ibest + 1, n) / n;
    const auto r = boost::math::tools::brent_find_minima(kappa, lo, hi, 52);
    if (r.second < best && r.first > 0.0) {
        arg = r.first;
        best = r.second;
    }
    CumulantAnalysis a;
    a.gamma0 = arg;
    a.kappa_gamma0 = best;
    if (kappa(0.0) > 0.0) {
        double l = 0.0, h = arg;
        for (int i = 0; i < 300 && h - l > 0.0; ++i) {
            const double m = 0.5 * (l + h);
            if (m == l || m == h) break;
            (kappa(m) > 0.0 ? l : h) = m;
        }
        const double w = std::abs(kappa(l)) < std::abs(kappa(h)) ? l : h;
        a.omega = w;
        a.kappa_prime_omega = cumulant_derivative(q, w);
    }
    return a;
}

LevyCharacteristics spine_reference_characteristics(const CharacteristicQuadruplet& q, double gamma) {
    const double k = cumulant(q, gamma);
    if (k > 1e-12) throw Error(ErrorKind::InvalidShift, "kappa(gamma) = " + std::to_string(k) + " > 0");
    LevyCharacteristics c = esscher_tilt(q.first_projection(), gamma);
    for (const auto& e : q.events)
        for (double y : e.children) {
            const double r = e.rate * std::exp(gamma * y);
            c.jumps.push_back({y, r});
            // these atoms enter the exponent uncompensated
            if (std::abs(y) <= 1.0) c.drift += r * y;
        }
    c.kill = std::max(0.0, -k);
    return c;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> DecoratedTree::find(const Label& u) const {
    const auto it = index.find(u);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

bool DecoratedTree::ancestor_or_self(std::size_t a, std::size_t b) const {
    const Label& la = nodes[a].label;
    const Label& lb = nodes[b].label;
    return la.size() <= lb.size() && std::equal(la.begin(), la.end(), lb.begin());
}

std::string label_string(const Label& u) {
    if (u.empty()) return "0";
    std::ostringstream os;
    for (std::size_t i = 0; i < u.size(); ++i) os << (i ? "." : "") << u[i];
    return os.str();
}

namespace {

struct Pending {
    Label label;
    long parent;
    double attach_age;
    double size;
    std::size_t generation;
};

}  // namespace

DecoratedTree build_tree(const CharacteristicQuadruplet& q, double start, const TreeOptions& opt, std::uint64_t seed) {
    q.validate();
    if (!(start > 0.0)) throw Error(ErrorKind::ConfigInvalid, "start must be > 0");
    if (!(opt.x_min > 0.0)) throw Error(ErrorKind::ConfigInvalid, "x_min must be > 0");
    const LevyCharacteristics c0 = q.first_projection();
    const std::vector<int> ev = q.atom_events();
    const double kill_total = c0.kill;
    SampleOptions so;
    so.mode = opt.mode;
    so.dt = opt.dt;

    DecoratedTree tree;
    tree.alpha = q.alpha;
    tree.start = start;
    tree.x_min = opt.x_min;
    tree.mode = opt.mode;
    tree.dt = opt.dt;

    std::deque<Pending> queue;
    queue.push_back({{}, -1, 0.0, start, 0});
    while (!queue.empty()) {
        Pending pd = std::move(queue.front());
        queue.pop_front();
        if (tree.nodes.size() >= opt.node_cap) throw Error(ErrorKind::BudgetExhausted, "node cap reached");
        Rng rng(label_seed(seed, pd.label));
        auto path = std::make_shared<const PathSkeleton>(sample_path(c0, 0.0, so, rng));

        TreeNode node;
        node.label = pd.label;
        node.parent = pd.parent;
        node.attach_age = pd.attach_age;
        node.birth_size = pd.size;
        node.generation = pd.generation;
        node.decoration = to_pssmp(path, q.alpha, pd.size);
        node.lifetime = node.decoration.lifetime();
        if (path->killed && kill_total > 0.0) {
            // which killing: plain or a death event
            double u = std::uniform_real_distribution<double>(0.0, kill_total)(rng);
            u -= q.base.kill;
            if (u >= 0.0) {
                for (std::size_t e = 0; e < q.events.size(); ++e) {
                    if (q.events[e].parent_jump) continue;
                    node.death_event = static_cast<int>(e);
                    u -= q.events[e].rate;
                    if (u < 0.0) break;
                }
            }
        }

        const auto& times = node.decoration.part_times();
        const auto& parts = node.decoration.parts();
        auto birth = [&](std::size_t part, double xi_before, int e) {
            const double f = node.decoration.to_size(xi_before);
            for (double y : q.events[static_cast<std::size_t>(e)].children) {
                OffspringAtom a;
                a.age = times[part + 1];
                a.parent_before = f;
                a.size = f * std::exp(y);
                a.levy_time = parts[part].t0 + parts[part].h;
                a.part = part;
                a.event = e;
                a.child = static_cast<std::uint32_t>(node.offspring.size() + 1);
                node.offspring.push_back(a);
            }
        };
        if (path->mode == Mode::BV) {
            for (std::size_t k = 0; k < path->pieces.size(); ++k) {
                const Piece& pc = path->pieces[k];
                if (pc.has_jump && pc.atom >= 0 && ev[static_cast<std::size_t>(pc.atom)] >= 0)
                    birth(k, parts[k].v1, ev[static_cast<std::size_t>(pc.atom)]);
            }
        } else {
            std::size_t cur = static_cast<std::size_t>(-1);
            double run = 0.0;
            for (const auto& j : path->jumps) {
                if (j.step != cur) {
                    cur = j.step;
                    run = parts[cur].v1;
                }
                if (j.atom >= 0 && ev[static_cast<std::size_t>(j.atom)] >= 0)
                    birth(j.step, run, ev[static_cast<std::size_t>(j.atom)]);
                run += j.size;
            }
        }
        if (node.death_event >= 0 && !parts.empty()) birth(parts.size() - 1, parts.back().v1, node.death_event);

        const long self = static_cast<long>(tree.nodes.size());
        for (auto& a : node.offspring) {
            if (a.size < opt.x_min) continue;
            Label child = node.label;
            child.push_back(a.child);
            queue.push_back({std::move(child), self, a.age, a.size, node.generation + 1});
        }
        tree.index.emplace(node.label, tree.nodes.size());
        if (node.parent >= 0) {
            TreeNode& par = tree.nodes[static_cast<std::size_t>(node.parent)];
            par.children.push_back(tree.nodes.size());
            par.offspring[node.label.back() - 1].node = self;
        }
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

double weighted_length(const DecoratedTree& tree, double gamma) {
    double s = 0.0;
    for (const auto& n : tree.nodes) s += n.decoration.weighted_integral(gamma);
    return s;
}

}  // namespace ssmt
