// Command-line front end: calib <subcommand> [flags]
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calib/experiment.hpp"

namespace {

int thread_count_from_env() {
    const char* v = std::getenv("CALIB_THREADS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw calib::ConfigError("CALIB_THREADS must be a positive integer");
    return static_cast<int>(n);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibration checks for nonlocal and local variational problems"};
    app.fallthrough();
    app.require_subcommand(1);

    calib::ExperimentConfig flags;
    std::string config_path;
    std::vector<double> omega;
    std::string shape = "bump";
    bool dump_config = false;

    app.add_option("--config", config_path, "JSON config file; flags override it");
    auto* o_field = app.add_option("--field", flags.field, "peierls-nabarro | linear | constant");
    auto* o_pot = app.add_option("--potential", flags.potential, "auto | zero | cosine-well | negative-quadratic");
    auto* o_omega = app.add_option("--omega", omega, "Omega endpoints A B")->expected(2);
    auto* o_s = app.add_option("--s", flags.s, "fractional order");
    auto* o_t0 = app.add_option("--t0", flags.t0, "base leaf parameter");
    auto* o_grid = app.add_option("--grid", flags.grid, "quadrature nodes across Omega");
    auto* o_lad = app.add_option("--eps-ladder", flags.eps_ladder, "principal-value ladder length");
    auto* o_R = app.add_option("--tail-radius", flags.tail_radius, "outer radius R (0 = automatic)");
    auto* o_cut = app.add_option("--cutoffs", flags.cutoffs, "truncation radii for the truncated calibration");
    auto* o_seed = app.add_option("--seed", flags.perturbation.seed, "perturbation seed");
    auto* o_count = app.add_option("--count", flags.perturbation.count, "number of competitors");
    auto* o_shape = app.add_option("--shape", shape, "bump | multi-bump | leaf-modulation");
    auto* o_amp = app.add_option("--amplitude", flags.perturbation.amplitude_fraction,
                                 "fraction of the distance to the parameter-interval boundary");
    auto* o_fn = app.add_option("--function", flags.function, "flaplace: cos | pn-leaf | linear");
    auto* o_k = app.add_option("--k", flags.k, "flaplace: cosine frequency");
    auto* o_at = app.add_option("--at", flags.at, "flaplace: evaluation points");
    auto* o_cand = app.add_option("--candidate", flags.candidate, "counterexample: F1 | F2 | F3");
    auto* o_lag = app.add_option("--lagrangian", flags.lagrangian, "local: dirichlet | p-dirichlet:<p> | semilinear:<F>");
    auto* o_fmt = app.add_option("--format", flags.format, "stdout format: json | csv");
    auto* o_out = app.add_option("--out", flags.out, "output directory for report and CSV files");
    app.add_flag("--dump-config", dump_config, "print the canonical config and exit");

    for (const auto& name : calib::experiment_names()) app.add_subcommand(name, "run the " + name + " experiment");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        const int threads = thread_count_from_env();
        if (threads > 0) calib::parallel::set_threads(threads);

        calib::ExperimentConfig cfg = config_path.empty() ? calib::ExperimentConfig{} : calib::load_config_file(config_path);
        cfg.experiment = app.get_subcommands().front()->get_name();
        auto given = [](CLI::Option* o) { return o->count() > 0; };
        if (given(o_field)) cfg.field = flags.field;
        if (given(o_pot)) cfg.potential = flags.potential;
        if (given(o_omega)) {
            cfg.omega_lo = omega[0];
            cfg.omega_hi = omega[1];
        }
        if (given(o_s)) cfg.s = flags.s;
        if (given(o_t0)) cfg.t0 = flags.t0;
        if (given(o_grid)) cfg.grid = flags.grid;
        if (given(o_lad)) cfg.eps_ladder = flags.eps_ladder;
        if (given(o_R)) cfg.tail_radius = flags.tail_radius;
        if (given(o_cut)) cfg.cutoffs = flags.cutoffs;
        if (given(o_seed)) cfg.perturbation.seed = flags.perturbation.seed;
        if (given(o_count)) cfg.perturbation.count = flags.perturbation.count;
        if (given(o_shape)) cfg.perturbation.shape = calib::shape_by_name(shape);
        if (given(o_amp)) cfg.perturbation.amplitude_fraction = flags.perturbation.amplitude_fraction;
        if (given(o_fn)) cfg.function = flags.function;
        if (given(o_k)) cfg.k = flags.k;
        if (given(o_at)) cfg.at = flags.at;
        if (given(o_cand)) cfg.candidate = flags.candidate;
        if (given(o_lag)) cfg.lagrangian = flags.lagrangian;
        if (given(o_fmt)) cfg.format = flags.format;
        if (given(o_out)) cfg.out = flags.out;

        if (dump_config) {
            calib::check_config(cfg);
            std::cout << calib::serialize_config(cfg);
            return 0;
        }

        const calib::RunResult r = calib::run(cfg);
        if (!cfg.out.empty()) calib::write_artifacts(r, cfg.out);
        // data on stdout, the human summary on stderr
        std::cerr << r.message;
        if (cfg.format == "csv") std::cout << calib::summary_csv(r);
        else std::cout << r.report.dump(2) << "\n";
        return r.exit_code;
    } catch (const calib::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const calib::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
    } catch (const calib::AdmissibilityError& e) {
        std::cerr << "admissibility error: " << e.what() << "\n";
    } catch (const calib::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
}
