#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ssmt/excursion.hpp"
#include "ssmt/harness.hpp"

using namespace ssmt;

namespace {

ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
    ExperimentConfig c = ExperimentConfig::load(path);
    if (seed) c.seed = *seed;
    c.apply_env();
    return c;
}

std::ostream& open_out(const std::string& path, std::ofstream& f) {
    if (path.empty() || path == "-") return std::cout;
    f.open(path);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + path);
    return f;
}

int exit_code(const RunReport& r) { return r.pass() ? 0 : 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-similar Markov tree lab"};
    app.require_subcommand(1);

    std::string config, out, dir, in;
    std::optional<std::uint64_t> seed;

    // run
    auto* run_cmd = app.add_subcommand("run", "run the configured suites and write report.json");
    run_cmd->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed, "master seed (overrides the config)");
    run_cmd->add_option("--out", out, "output directory")->required();
    std::vector<std::string> suites;
    run_cmd->add_option("--suite", suites, "restrict to these suites");

    // levy
    auto* levy = app.add_subcommand("levy", "Levy process utilities");
    levy->require_subcommand(1);
    auto* pot = levy->add_subcommand("potential", "potential density of Lambda_0 as CSV");
    pot->add_option("--config", config)->required()->check(CLI::ExistingFile);
    std::string method = "fourier";
    pot->add_option("--method", method)->check(CLI::IsMember({"fourier", "mc", "closed"}));
    LevelGrid grid;
    pot->add_option("--lo", grid.lo);
    pot->add_option("--hi", grid.hi);
    pot->add_option("--n", grid.n);
    std::size_t paths = 100000;
    pot->add_option("--paths", paths, "Monte Carlo paths");
    pot->add_option("--seed", seed);
    pot->add_option("--out", out, "CSV file, - for stdout");
    auto* chk = levy->add_subcommand("check", "run the Levy suite");
    chk->add_option("--config", config)->required()->check(CLI::ExistingFile);
    chk->add_option("--seed", seed);

    // tree
    auto* tree = app.add_subcommand("tree", "simulate and export trees");
    tree->require_subcommand(1);
    double resolution = 0.01, level = 1.0;
    auto* sim = tree->add_subcommand("simulate", "simulate one tree and write it as JSON");
    sim->add_option("--config", config)->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", seed)->required();
    sim->add_option("--out", out, "tree JSON, - for stdout")->required();
    sim->add_option("--resolution", resolution);
    auto* exp = tree->add_subcommand("export", "tree JSON, polylines CSV and overlay JSON for plotting");
    exp->add_option("--config", config)->required()->check(CLI::ExistingFile);
    exp->add_option("--seed", seed)->required();
    exp->add_option("--dir", dir)->required();
    exp->add_option("--level", level, "level for first hits, local-time atoms and the marked spine");
    exp->add_option("--resolution", resolution);

    // spine
    auto* spine = app.add_subcommand("spine", "spine decomposition");
    spine->require_subcommand(1);
    auto* st = spine->add_subcommand("test", "tree spines against the conditioned reference law");
    st->add_option("--config", config)->required()->check(CLI::ExistingFile);
    st->add_option("--seed", seed);
    st->add_option("--out", out, "optional output directory");

    // exc
    auto* exc = app.add_subcommand("exc", "excursion decomposition of the level-1 individuals");
    exc->require_subcommand(1);
    auto* dec = exc->add_subcommand("decompose", "excursions, level tree and branching atoms of one tree");
    dec->add_option("--config", config)->required()->check(CLI::ExistingFile);
    dec->add_option("--seed", seed)->required();
    dec->add_option("--dir", dir)->required();
    auto* rec = exc->add_subcommand("reconstruct", "rebuild the level tree from an atoms file");
    rec->add_option("--atoms", in)->required()->check(CLI::ExistingFile);
    rec->add_option("--out", out, "level tree JSON, - for stdout");

    // report
    auto* rep = app.add_subcommand("report", "print a report.json as a table");
    rep->add_option("--dir", dir)->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            ExperimentConfig c = load_config(config, seed);
            if (!suites.empty()) c.suites = suites;
            const RunReport r = run(c, out);
            write_report_table(std::cout, r);
            return exit_code(r);
        }
        if (*pot) {
            const ExperimentConfig c = load_config(config, seed);
            MonteCarloOptions mc;
            mc.n_paths = paths;
            mc.dt = c.dt;
            mc.seed = c.seed;
            const PotentialMethod m = method == "fourier" ? PotentialMethod::Fourier
                                      : method == "mc"    ? PotentialMethod::MonteCarlo
                                                          : PotentialMethod::ClosedForm;
            const PotentialTable t = potential_density(c.quadruplet.first_projection(), grid, m, mc);
            std::ofstream f;
            write_potential_csv(open_out(out, f), t);
            return 0;
        }
        if (*chk) {
            ExperimentConfig c = load_config(config, seed);
            c.suites = {"levy"};
            RunReport r;
            r.config = c.to_json();
            r.config_hash = c.hash();
            r.results = run_levy_suite(c);
            write_report_table(std::cout, r);
            return exit_code(r);
        }
        if (*sim) {
            const ExperimentConfig c = load_config(config, seed);
            const DecoratedTree t = build_tree(c.quadruplet, 1.0, c.tree_options(), c.seed);
            std::ofstream f;
            open_out(out, f) << tree_to_json(t, resolution).dump() << '\n';
            std::cerr << t.nodes.size() << " nodes\n";
            return 0;
        }
        if (*exp) {
            const ExperimentConfig c = load_config(config, seed);
            const DecoratedTree t = build_tree(c.quadruplet, 1.0, c.tree_options(), c.seed);
            const ExportPaths p = export_tree(t, resolution, level, dir, "tree", split_seed(c.seed, 1));
            std::cout << p.tree.string() << '\n' << p.polylines.string() << '\n' << p.overlay.string() << '\n';
            return 0;
        }
        if (*st) {
            ExperimentConfig c = load_config(config, seed);
            c.suites = {"spine"};
            const RunReport r = run(c, out);
            write_report_table(std::cout, r);
            return exit_code(r);
        }
        if (*dec) {
            const ExperimentConfig c = load_config(config, seed);
            const DecoratedTree t = build_tree(c.quadruplet, 1.0, c.tree_options(), c.seed);
            const LevelSet ls = level_individuals(t);
            const auto ex = decompose_excursions(t, ls);
            const LevelTree lt = build_level_tree(ls, ex);
            const ExcursionProcess pr = build_excursion_process(t, ls, ex);
            std::filesystem::create_directories(dir);
            write_json_file(std::filesystem::path(dir) / "excursions.json", excursions_to_json(t, ex));
            write_json_file(std::filesystem::path(dir) / "level_tree.json", level_tree_to_json(lt));
            write_json_file(std::filesystem::path(dir) / "atoms.json", atoms_to_json(pr.branching_atoms()));
            std::cout << ls.individuals.size() << " level individuals, " << ex.size() << " excursions, L(1,T) = "
                      << ls.total() << '\n';
            return 0;
        }
        if (*rec) {
            const LevelTree lt = reconstruct_level_tree(atoms_from_json(read_json_file(in)));
            std::ofstream f;
            open_out(out, f) << level_tree_to_json(lt).dump(2) << '\n';
            return 0;
        }
        if (*rep) {
            const RunReport r = RunReport::from_json(read_json_file(std::filesystem::path(dir) / "report.json"));
            write_report_table(std::cout, r);
            return exit_code(r);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
