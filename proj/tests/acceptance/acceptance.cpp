// Runs the canonical configuration and prints one PASS/FAIL line per
// acceptance criterion. Each criterion is the conjunction of the gated report
// entries listed for it; diagnostics never count.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ssmt/harness.hpp"

using namespace ssmt;

namespace {

struct Criterion {
    const char* title;
    std::vector<std::string> prefixes;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> c{
        {"potential density closed form (Fourier 1e-6, Monte Carlo 3%)", {"levy.potential."}},
        {"exponential local time (KS, alpha 0.001, N 5000)", {"levy.local_time."}},
        {"hitting probabilities v(y-x)/v(0) within 2% at 5 pairs", {"levy.hitting"}},
        {"Esscher identities (exponent 1e-10, potential 1%)", {"levy.esscher."}},
        {"Cramer asymptotics (limit 1e-3, conditioned KS)", {"levy.cramer."}},
        {"tree means within 5% at N 1e4", {"tree_means."}},
        {"spine law: four-functional weighted KS and negative control", {"spine.sample_size", "spine.law.", "spine.negative_control"}},
        {"time reversal: max Y vs x/min Y", {"spine.reversal.max_vs_x_over_min"}},
        {"harmonic proxies: mass, scaled hits at 0.02, monotone trend",
         {"convergence.proxy_mean", "convergence.scaled_hits", "convergence.monotone_hits"}},
        {"excursion structure over 100 seeds in both modes",
         {"excursion.structure.diffusion.telescoping", "excursion.structure.diffusion.first_hit",
          "excursion.structure.diffusion.isomorphism", "excursion.structure.bv.telescoping", "excursion.structure.bv.first_hit",
          "excursion.structure.bv.isomorphism", "excursion.structure.bv.edge_lengths"}},
        {"excursion measure identities: Z integral, subcriticality, offspring law",
         {"excursion.measure.z_integral", "excursion.measure.subcritical", "excursion.offspring_law"}},
        {"level-tree law: total length L(1,T), exponential edge lengths",
         {"excursion.structure.bv.total_length", "excursion.structure.diffusion.total_length", "excursion.level_tree.edges"}},
    };
    return c;
}

bool starts_with(const std::string& s, const std::string& p) { return s.compare(0, p.size(), p) == 0; }

}  // namespace

int main(int argc, char** argv) {
    std::setvbuf(stdout, nullptr, _IONBF, 0);
    if (argc < 2) {
        std::cerr << "usage: ssmt_acceptance CONFIG [OUT_DIR]\n";
        return 2;
    }
    RunReport rep;
    try {
        ExperimentConfig cfg = ExperimentConfig::load(argv[1]);
        cfg.apply_env();
        rep = run(cfg, argc > 2 ? std::filesystem::path(argv[2]) : std::filesystem::path());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    int failed = 0;
    for (const auto& c : criteria()) {
        std::size_t n = 0;
        std::string detail;
        bool pass = true;
        for (const auto& r : rep.results) {
            if (!r.gate) continue;
            bool hit = false;
            for (const auto& p : c.prefixes) hit = hit || starts_with(r.name, p);
            if (!hit) continue;
            ++n;
            if (!r.pass) {
                pass = false;
                detail += " " + r.name + "=" + std::to_string(r.value);
            }
        }
        // a suite error also fails every criterion it feeds
        for (const auto& r : rep.results) {
            const bool error = r.name == r.suite + ".error" || (r.name == "trees.errors" && !r.pass);
            if (!error) continue;
            bool feeds = false;
            for (const auto& p : c.prefixes) feeds = feeds || starts_with(p, r.suite + ".") || (r.suite == "trees" && !starts_with(p, "levy."));
            if (feeds) {
                pass = false;
                detail += " " + r.name + ": " + r.note;
            }
        }
        if (n == 0) {
            pass = false;
            detail = " no checks ran";
        }
        failed += !pass;
        std::printf("%s  %s  [%zu checks]%s\n", pass ? "PASS" : "FAIL", c.title, n, detail.c_str());
    }
    std::printf("%s: %d of %zu criteria failed\n", failed ? "FAIL" : "PASS", failed, criteria().size());
    return failed ? 1 : 0;
}
