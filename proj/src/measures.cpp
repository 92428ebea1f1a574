#include "ssmt/measures.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ssmt {

double default_eps(Mode mode) { return mode == Mode::BV ? kExact : kDefaultWindow; }

double TreeLevelMeasure::total() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.profile.total();
    return s;
}

double TreeLevelMeasure::node_total(std::size_t node) const {
    for (const auto& n : nodes)
        if (n.node == node) return n.profile.total();
    return 0.0;
}

double node_level(const TreeNode& n, double x) {
    return n.decoration.source().start + std::log(x / n.decoration.start());
}

namespace {

void check_margin(const DecoratedTree& tree, double x, double margin) {
    if (!(x > 0.0)) throw Error(ErrorKind::ConfigInvalid, "level must be > 0");
    if (x < margin * tree.x_min * (1.0 - 1e-12))
        throw Error(ErrorKind::LevelTooLow, "level " + std::to_string(x) + " below the truncation margin");
}

bool may_touch(const TreeNode& n, double x, double eps) {
    const double pad = std::exp(std::max(eps, 0.0));
    return x <= n.decoration.supremum() * pad && x >= n.decoration.infimum() / pad;
}

}  // namespace

double node_local_time(const TreeNode& n, double x, double eps) {
    if (!may_touch(n, x, eps)) return 0.0;
    return local_time_total(n.decoration.source(), node_level(n, x), eps);
}

TreeLevelMeasure level_local_time(const DecoratedTree& tree, double x, double eps, double margin) {
    check_margin(tree, x, margin);
    TreeLevelMeasure m;
    m.level = x;
    m.eps = eps;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (!may_touch(n, x, eps)) continue;
        const LocalTimeProfile lp = local_time(n.decoration.source(), node_level(n, x), eps);
        if (lp.atoms.empty()) continue;
        m.nodes.push_back({i, transfer_local_time(lp, n.decoration)});
    }
    return m;
}

double level_local_time_total(const DecoratedTree& tree, double x, double eps, double margin) {
    check_margin(tree, x, margin);
    double s = 0.0;
    for (const auto& n : tree.nodes) s += node_local_time(n, x, eps);
    return s;
}

std::optional<std::pair<double, std::size_t>> first_passage(const PssmpPath& x, double y) {
    for (std::size_t k = 0; k < x.parts().size(); ++k) {
        const LinearPart& p = x.parts()[k];
        if (y < part_min(p) || y > part_max(p)) continue;
        const double tau = p.v1 == p.v0 ? 0.0 : (y - p.v0) / (p.v1 - p.v0) * p.h;
        return std::make_pair(p.t0 + tau, k);
    }
    return std::nullopt;
}

HittingLine hitting_line(const DecoratedTree& tree, double x, double margin) {
    check_margin(tree, x, margin);
    HittingLine hl;
    hl.level = x;
    const std::size_t n = tree.nodes.size();
    // age of the first hit on each segment, +inf if none; blocked: an
    // ancestor point already attained x
    std::vector<double> hit_age(n, kInf);
    std::vector<char> blocked(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& nd = tree.nodes[i];
        if (nd.parent >= 0) {
            const std::size_t p = static_cast<std::size_t>(nd.parent);
            blocked[i] = blocked[p] || hit_age[p] <= nd.attach_age;
        }
        if (blocked[i]) continue;
        if (!may_touch(nd, x, 0.0)) continue;
        const auto fp = first_passage(nd.decoration, node_level(nd, x));
        if (!fp) continue;
        hit_age[i] = nd.decoration.time_of(fp->first);
        hl.points.push_back({i, hit_age[i], fp->first, fp->second});
    }
    return hl;
}

// ---------------------------------------------------------------------------

PotentialTable potential_w(const CharacteristicQuadruplet& q, double gamma, const LevelGrid& grid, double delta) {
    const double k = cumulant(q, gamma);
    if (k > 1e-9) throw Error(ErrorKind::InvalidShift, "kappa(gamma) > 0");
    if (k < -1e-9) return potential_fourier(spine_reference_characteristics(q, gamma), grid);
    if (!(delta > 0.0) || !(cumulant(q, gamma + delta) < 0.0))
        throw Error(ErrorKind::InvalidShift, "kappa(gamma + delta) must be < 0");
    PotentialTable t = potential_fourier(spine_reference_characteristics(q, gamma + delta), grid);
    for (std::size_t i = 0; i < grid.n; ++i) t.values[i] *= std::exp(-delta * grid.at(i));
    return t;
}

double MeanFormulas::mean_local_time(double x) const {
    return std::pow(x, -analysis.gamma0) * w_gamma0.at(std::log(x));
}

double MeanFormulas::mean_hits(double x) const {
    const double w = *analysis.omega;
    return std::pow(x, -w) * w_omega.at(std::log(x)) / w_omega.at(0.0);
}

double MeanFormulas::mean_level_individuals() const { return w_gamma0.at(0.0) / v.at(0.0); }

double MeanFormulas::z_integral() const { return 1.0 / v.at(0.0) - 1.0 / w_gamma0.at(0.0); }

double MeanFormulas::mean_weighted_length() const { return -1.0 / analysis.kappa_gamma0; }

double MeanFormulas::mean_birth_moment() const {
    return evaluate_exponent(quad.first_projection(), analysis.gamma0) / analysis.kappa_gamma0;
}

double MeanFormulas::hit_normalization() const { return -*analysis.kappa_prime_omega * w_omega.at(0.0); }

MeanFormulas make_mean_formulas(const CharacteristicQuadruplet& q, const CumulantAnalysis& a, const LevelGrid& grid) {
    MeanFormulas f;
    f.quad = q;
    f.analysis = a;
    f.v = potential_fourier(q.first_projection(), grid);
    f.w_gamma0 = potential_w(q, a.gamma0, grid);
    if (a.omega) f.w_omega = potential_w(q, *a.omega, grid);
    return f;
}

// ---------------------------------------------------------------------------

std::vector<Germ> harmonic_germs(const DecoratedTree& tree, double x_cut, double margin) {
    check_margin(tree, x_cut, margin);
    std::vector<Germ> germs;
    std::vector<std::size_t> stack{0};
    if (tree.root().birth_size <= x_cut) {
        germs.push_back({tree.root().birth_size, 0});
        return germs;
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const TreeNode& nd = tree.nodes[i];
        const std::uint32_t branch = nd.label.empty() ? 0 : nd.label.front();
        const PssmpPath& d = nd.decoration;
        const double y = node_level(nd, x_cut);
        // Levy time of the entrance into (0, x_cut]
        double entrance = kInf;
        for (const auto& p : d.parts()) {
            if (part_min(p) <= y) {
                const double tau = p.v1 == p.v0 ? 0.0 : (y - p.v0) / (p.v1 - p.v0) * p.h;
                entrance = p.t0 + std::clamp(tau, 0.0, p.h);
                germs.push_back({x_cut, branch});
                break;
            }
            if (p.jump != 0.0 && p.v1 + p.jump <= y) {
                entrance = p.t0 + p.h;
                germs.push_back({d.to_size(p.v1 + p.jump), branch});
                break;
            }
        }
        for (const auto& a : nd.offspring) {
            if (a.levy_time > entrance) break;
            if (a.size <= x_cut) {
                germs.push_back({a.size, nd.label.empty() ? a.child : branch});
            } else if (a.node >= 0) {
                stack.push_back(static_cast<std::size_t>(a.node));
            }
        }
    }
    return germs;
}

double harmonic_mass_proxy(const DecoratedTree& tree, double omega, double x_cut, double margin) {
    double s = 0.0;
    for (const auto& g : harmonic_germs(tree, x_cut, margin)) s += std::pow(g.value, omega);
    return s;
}

double pearson(const std::vector<std::pair<double, double>>& xy) {
    const double n = static_cast<double>(xy.size());
    if (xy.size() < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (const auto& [a, b] : xy) {
        mx += a;
        my += b;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [a, b] : xy) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

bool ConvergenceReport::monotone_n() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].n_dev < rows[i - 1].n_dev)) return false;
    return true;
}

bool ConvergenceReport::monotone_l() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].l_dev < rows[i - 1].l_dev)) return false;
    return true;
}

ConvergenceAccumulator::ConvergenceAccumulator(const MeanFormulas& f, std::vector<double> xs, double x_cut, double eps)
    : f_(&f), xs_(std::move(xs)), x_cut_(x_cut), eps_(eps) {
    if (!f.analysis.omega) throw Error(ErrorKind::ConfigInvalid, "convergence diagnostics need omega");
    n_dev_.assign(xs_.size(), 0.0);
    l_dev_.assign(xs_.size(), 0.0);
    hits_sum_.assign(xs_.size(), 0.0);
    hits_sq_.assign(xs_.size(), 0.0);
    pairs_.resize(xs_.size());
}

ConvergenceObservation ConvergenceAccumulator::observe(const DecoratedTree& tree) const {
    const double w = *f_->analysis.omega;
    const double norm = f_->hit_normalization();
    ConvergenceObservation o;
    std::map<std::uint32_t, double> sub_proxy;
    for (const auto& g : harmonic_germs(tree, x_cut_)) {
        const double m = std::pow(g.value, w);
        o.proxy += m;
        if (g.branch) sub_proxy[g.branch] += m;
    }
    o.subtree_pairs.resize(xs_.size());
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        const double x = xs_[i];
        o.scaled_hits.push_back(std::pow(x, w) * static_cast<double>(hitting_line(tree, x).count()) * norm);
        const double el = f_->mean_local_time(x);
        std::map<std::uint32_t, double> sub_l;
        double total = 0.0;
        for (const auto& nd : tree.nodes) {
            const double l = node_local_time(nd, x, eps_);
            total += l;
            if (!nd.label.empty()) sub_l[nd.label.front()] += l;
        }
        o.scaled_mass.push_back(total / el);
        for (const auto& a : tree.root().offspring) {
            if (a.node < 0) continue;
            const auto il = sub_l.find(a.child);
            const auto ip = sub_proxy.find(a.child);
            o.subtree_pairs[i].emplace_back(il == sub_l.end() ? 0.0 : il->second / el, ip == sub_proxy.end() ? 0.0 : ip->second);
        }
    }
    return o;
}

void ConvergenceAccumulator::add(const ConvergenceObservation& o) {
    ++n_;
    proxy_sum_ += o.proxy;
    proxy_sq_ += o.proxy * o.proxy;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        hits_sum_[i] += o.scaled_hits[i];
        hits_sq_[i] += o.scaled_hits[i] * o.scaled_hits[i];
        n_dev_[i] += std::abs(o.scaled_hits[i] - o.proxy);
        l_dev_[i] += std::abs(o.scaled_mass[i] - o.proxy);
        pairs_[i].insert(pairs_[i].end(), o.subtree_pairs[i].begin(), o.subtree_pairs[i].end());
    }
}

ConvergenceReport ConvergenceAccumulator::report() const {
    ConvergenceReport r;
    r.x_cut = x_cut_;
    const double n = static_cast<double>(std::max<std::size_t>(n_, 1));
    r.mean_proxy = proxy_sum_ / n;
    r.mean_proxy_se = std::sqrt(std::max(0.0, proxy_sq_ / n - r.mean_proxy * r.mean_proxy) / n);
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        ConvergenceRow row;
        row.x = xs_[i];
        row.n_dev = n_dev_[i] / n;
        row.l_dev = l_dev_[i] / n;
        row.subtree_corr = pearson(pairs_[i]);
        row.mean_scaled_hits = hits_sum_[i] / n;
        row.mean_scaled_hits_se =
            std::sqrt(std::max(0.0, hits_sq_[i] / n - row.mean_scaled_hits * row.mean_scaled_hits) / n);
        r.rows.push_back(row);
    }
    return r;
}

ConvergenceReport convergence_diagnostics(const CharacteristicQuadruplet& q, const MeanFormulas& f,
                                          const std::vector<double>& xs, std::size_t n_trees, const TreeOptions& opt,
                                          std::uint64_t seed, double x_cut) {
    if (x_cut <= 0.0) x_cut = 10.0 * opt.x_min;
    ConvergenceAccumulator acc(f, xs, x_cut, default_eps(opt.mode));
    for (std::size_t r = 0; r < n_trees; ++r) acc.add(build_tree(q, 1.0, opt, split_seed(seed, r)));
    return acc.report();
}

void write_measure_csv(std::ostream& os, const DecoratedTree& tree, const TreeLevelMeasure& m) {
    os.precision(17);
    os << "node,age,mass\n";
    for (const auto& np : m.nodes)
        for (const auto& a : np.profile.atoms) os << label_string(tree.nodes[np.node].label) << ',' << a.time << ',' << a.mass << '\n';
}

}  // namespace ssmt
