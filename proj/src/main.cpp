#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fastslow/coarse.hpp"
#include "fastslow/dynamics.hpp"
#include "fastslow/edp.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/gradstruct.hpp"
#include "fastslow/io.hpp"
#include "fastslow/network.hpp"
#include "fastslow/version.hpp"

using namespace fastslow;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_override;
    bool strict = false;
    double tol_override = -1.0;
    double eps = 1.0;
    double t_final = -1.0;
    int steps = -1;
    std::string initial = "uniform";
    std::string gs_kind;
    int refine = 0;
};

Kind parse_kind(const std::string& token) {
    if (token == "quad") return Kind::Quadratic;
    if (token == "entropic") return Kind::EntropicQuadratic;
    if (token == "cosh") return Kind::Cosh;
    throw Error(ErrorKind::ConfigError, "--gs must be one of quad|entropic|cosh, got \"" +
                                            token + "\"");
}

double resolve_t_final(const CliOptions& opts, const ExperimentConfig& cfg,
                       const ReactionNetwork& net) {
    if (opts.t_final > 0.0) return opts.t_final;
    if (cfg.t_final) return *cfg.t_final;
    CoarseGraining cg = build_operators(fast_classes(net), limit_equilibrium(net));
    return default_horizon(net, cg);
}

int resolve_steps(const CliOptions& opts, const ExperimentConfig& cfg) {
    int steps = opts.steps > 0 ? opts.steps : cfg.steps;
    if (steps < 2) throw Error(ErrorKind::ConfigError, "steps must be >= 2");
    return steps;
}

std::vector<double> graded_times(double t_final, int n) {
    // Power-graded grid clustering nodes near t = 0, where propagate
    // solutions develop their initial layer.
    std::vector<double> times(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
        times[static_cast<size_t>(k)] =
            t_final * std::pow(static_cast<double>(k) / (n - 1), 1.5);
    return times;
}

std::vector<Vector> sample_states(const Vector& w) {
    std::vector<Vector> samples;
    const int n = static_cast<int>(w.size());
    for (int s = 0; s < 4; ++s) {
        Vector c(n);
        for (int i = 0; i < n; ++i) c(i) = 1.0 + 0.4 * std::sin(static_cast<double>(i + 1 + s));
        samples.push_back(c / c.sum());
    }
    samples.push_back(w);
    return samples;
}

// --- subcommand handlers; each returns the list of files it wrote ---

std::vector<std::string> run_stationary(const NetworkFile& nf, const ExperimentConfig& cfg,
                                        const std::filesystem::path& out_dir) {
    Matrix A = assemble_generator(nf.net, 1.0);
    EquilibriumMeasure w = stationary_measure(A);
    std::string header = "quantity";
    for (const auto& name : nf.state_names) header += "," + name;
    std::vector<double> row(w.w.data(), w.w.data() + w.w.size());
    std::string csv = header + "\nw," + csv_join(row) + "\n";
    auto path = out_dir / "stationary.csv";
    write_text_file(path, csv);
    (void)cfg;
    return {path.string()};
}

std::vector<std::string> run_coarse_grain(const NetworkFile& nf,
                                          const std::filesystem::path& out_dir) {
    EquilibriumMeasure w0 = limit_equilibrium(nf.net);
    CoarseGraining cg = build_operators(fast_classes(nf.net), w0);
    Matrix Ahat = coarse_generator(nf.net, cg);
    std::string doc;
    doc += "M\n" + matrix_text(cg.M);
    doc += "N\n" + matrix_text(cg.N);
    if (cg.P.size() > 0) doc += "P\n" + matrix_text(cg.P);
    doc += "what\n" + matrix_text(Matrix(cg.what.w.transpose()));
    doc += "Ahat\n" + matrix_text(Ahat);
    auto path = out_dir / "coarse_grain.txt";
    write_text_file(path, doc);
    return {path.string()};
}

std::vector<std::string> run_simulate(const NetworkFile& nf, const ExperimentConfig& cfg,
                                      const CliOptions& opts,
                                      const std::filesystem::path& out_dir) {
    Matrix A = assemble_generator(nf.net, opts.eps);
    EquilibriumMeasure w = stationary_measure(A);
    double T = resolve_t_final(opts, cfg, nf.net);
    auto times = uniform_times(T, resolve_steps(opts, cfg));
    Vector c0 = parse_initial(opts.initial, nf.net.num_states, std::filesystem::current_path());
    Trajectory traj = propagate(A, w, c0, times);

    std::string csv = "t";
    for (int i = 1; i <= nf.net.num_states; ++i) csv += ",c_" + std::to_string(i);
    csv += "\n";
    for (size_t k = 0; k < traj.times.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        for (int i = 0; i < nf.net.num_states; ++i) row.push_back(traj.states[k](i));
        csv += csv_join(row) + "\n";
    }
    auto path = out_dir / "simulate.csv";
    write_text_file(path, csv);
    return {path.string()};
}

std::vector<std::string> run_converge(const NetworkFile& nf, const ExperimentConfig& cfg,
                                      const CliOptions& opts,
                                      const std::filesystem::path& out_dir) {
    double T = resolve_t_final(opts, cfg, nf.net);
    auto times = uniform_times(T, resolve_steps(opts, cfg));
    Vector c0 = parse_initial(opts.initial, nf.net.num_states, std::filesystem::current_path());
    ConvergenceReport report = convergence_experiment(nf.net, c0, cfg.eps_list, times);

    std::string csv = "eps,sup_Mc_err,l2_err,fast_integral,rate_ratio\n";
    for (size_t k = 0; k < report.eps.size(); ++k)
        csv += csv_join({report.eps[k], report.sup_mc_err[k], report.l2_err[k],
                         report.fast_integral[k], report.rate_ratio[k]}) +
               "\n";
    auto path = out_dir / "converge.csv";
    write_text_file(path, csv);
    return {path.string()};
}

std::vector<std::string> run_edb(const NetworkFile& nf, const ExperimentConfig& cfg,
                                 const CliOptions& opts,
                                 const std::filesystem::path& out_dir) {
    Kind kind = opts.gs_kind.empty() ? cfg.kind : parse_kind(opts.gs_kind);
    Matrix A = assemble_generator(nf.net, opts.eps);
    EquilibriumMeasure w = stationary_measure(A);
    double T = resolve_t_final(opts, cfg, nf.net);
    int base_steps = resolve_steps(opts, cfg);
    Vector c0 = parse_initial(opts.initial, nf.net.num_states, std::filesystem::current_path());
    EpsFamily family = make_family(nf.net, kind);
    GradientStructure gs(kind, w, kappa_representation(A, w).kappa);

    std::string report_text = "kind " + std::string(kind_name(kind)) + "\neps " +
                              format_g17(opts.eps) + "\n";
    Trajectory finest;
    for (int level = 0; level <= opts.refine; ++level) {
        int n = (base_steps - 1) * (1 << level) + 1;
        Trajectory traj = propagate(A, w, c0, graded_times(T, n));
        DissipationReport rep = dissipation_functional(family, traj, opts.eps);
        report_text += "level " + std::to_string(level) +
                       " points " + std::to_string(rep.quadrature_points) +
                       " velocity_part " + format_g17(rep.velocity_part) +
                       " slope_slow " + format_g17(rep.slope_slow) +
                       " slope_fast " + format_g17(rep.slope_fast) +
                       " total " + format_g17(rep.total) +
                       " edb_residual " + format_g17(rep.edb_residual) + "\n";
        finest = std::move(traj);
    }

    std::string csv = "t,velocity_integrand,slope_slow_integrand,slope_fast_integrand\n";
    for (size_t k = 0; k < finest.times.size(); ++k) {
        double vel = legendre_primal(gs, finest.states[k], finest.velocities[k]).value;
        auto [slow, fast] = slope_term(family, finest.states[k], opts.eps);
        csv += csv_join({finest.times[k], vel, slow, fast}) + "\n";
    }

    auto report_path = out_dir / "edb.txt";
    auto csv_path = out_dir / "edb.csv";
    write_text_file(report_path, report_text);
    write_text_file(csv_path, csv);
    return {report_path.string(), csv_path.string()};
}

std::vector<std::string> run_recovery(const NetworkFile& nf, const ExperimentConfig& cfg,
                                      const CliOptions& opts,
                                      const std::filesystem::path& out_dir) {
    EquilibriumMeasure w0 = limit_equilibrium(nf.net);
    CoarseGraining cg = build_operators(fast_classes(nf.net), w0);
    double T = resolve_t_final(opts, cfg, nf.net);
    auto times = uniform_times(T, resolve_steps(opts, cfg));
    Vector c0 = parse_initial(opts.initial, nf.net.num_states, std::filesystem::current_path());
    Vector pc0 = cg.apply_projection(c0);

    Trajectory limit = solve_limit(nf.net, cg, pc0, times);
    Trajectory resampled = resample_trajectory(limit, times);
    Trajectory curve = mollify_positivity(resampled, 0.01, w0.w);

    EpsFamily family = make_family(nf.net, cfg.kind);
    DissipationReport d0 = dissipation_functional(family, curve, 0.0);

    std::string report_text =
        "kind " + std::string(kind_name(cfg.kind)) + "\nlimit velocity_part " +
        format_g17(d0.velocity_part) + " slope_slow " + format_g17(d0.slope_slow) +
        " total " + format_g17(d0.total) + "\n";
    std::string csv = "eps,d_eps_total,d0_total,rel_gap\n";
    for (double eps : cfg.eps_list) {
        Trajectory ce = recovery_sequence(curve, nf.net, eps);
        DissipationReport de = dissipation_functional(family, ce, eps);
        double gap = std::abs(de.total - d0.total) / (1.0 + std::abs(d0.total));
        csv += csv_join({eps, de.total, d0.total, gap}) + "\n";
    }
    auto report_path = out_dir / "recovery.txt";
    auto csv_path = out_dir / "recovery.csv";
    write_text_file(report_path, report_text);
    write_text_file(csv_path, csv);
    return {report_path.string(), csv_path.string()};
}

std::vector<std::string> run_gs_check(const NetworkFile& nf, const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_dir) {
    Matrix A = assemble_generator(nf.net, 1.0);
    EquilibriumMeasure w = stationary_measure(A);
    Matrix kappa = kappa_representation(A, w).kappa;
    auto samples = sample_states(w.w);

    bool all_pass = true;
    std::string doc;
    auto line = [&](const std::string& check, const std::string& kind, double residual,
                    double threshold) {
        bool pass = residual <= threshold;
        all_pass = all_pass && pass;
        doc += "check=" + check + (kind.empty() ? "" : " kind=" + kind) +
               " max_residual=" + format_g17(residual) + " result=" +
               (pass ? "PASS" : "FAIL") + "\n";
    };

    for (Kind kind : {Kind::Quadratic, Kind::EntropicQuadratic, Kind::Cosh}) {
        GradientStructure gs(kind, w, kappa);
        double worst = 0.0;
        for (const Vector& c : samples)
            worst = std::max(worst,
                             (vector_field(gs, c) - A * c).lpNorm<Eigen::Infinity>());
        line("vector-field-consistency", kind_name(kind), worst, cfg.tol);
    }

    {
        // Dual-potential identity at log ratios and the Fenchel pair.
        double worst_log = 0.0, worst_fenchel = 0.0;
        for (double p = 0.05; p <= 2.0; p += 0.12)
            for (double q = 0.05; q <= 2.0; q += 0.12) {
                double lhs = cosh_star(std::log(p) - std::log(q));
                double rhs = 2.0 * (std::sqrt(p / q) + std::sqrt(q / p) - 2.0);
                worst_log = std::max(worst_log, std::abs(lhs - rhs));
            }
        for (double z = -30.0; z <= 30.0; z += 0.25) {
            double slope = cosh_star_prime(z);
            double direct = cosh_primal(slope);
            double conjugate = z * slope - cosh_star(z);
            worst_fenchel = std::max(
                worst_fenchel, std::abs(direct - conjugate) / (1.0 + std::abs(conjugate)));
        }
        line("log-ratio-identity", "", worst_log, 1e-12);
        line("fenchel-conjugacy", "", worst_fenchel, 1e-10);
    }

    {
        // Coarse intensity construction runs its own consistency cross-check.
        double residual = 0.0;
        try {
            CoarseGraining cg = build_operators(fast_classes(nf.net), limit_equilibrium(nf.net));
            coarse_cosh_intensities(nf.net, cg);
        } catch (const Error&) {
            residual = 1.0;
        }
        line("coarse-intensity-consistency", "", residual, cfg.tol);
    }

    auto path = out_dir / "gs_check.txt";
    write_text_file(path, doc);
    if (!all_pass)
        throw Error(ErrorKind::NumericalFailure, "gs-check found failing checks; see " +
                                                     path.string());
    return {path.string()};
}

std::vector<std::string> run_tilt(const NetworkFile& nf, const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir) {
    if (!cfg.tilt)
        throw Error(ErrorKind::ConfigError, "tilt: required for the tilt subcommand");
    if (cfg.tilt->size() != nf.net.num_states)
        throw Error(ErrorKind::ConfigError,
                    "tilt: has " + std::to_string(cfg.tilt->size()) + " entries, expected " +
                        std::to_string(nf.net.num_states));
    Matrix A = assemble_generator(nf.net, 1.0);
    EquilibriumMeasure w = stationary_measure(A);
    Matrix kappa = kappa_representation(A, w).kappa;
    auto samples = sample_states(w.w);
    Tilt tilt{*cfg.tilt};

    std::string csv = "kind,residual,invariant\n";
    for (Kind kind : {Kind::Quadratic, Kind::EntropicQuadratic, Kind::Cosh}) {
        GradientStructure gs(kind, w, kappa);
        double residual = check_tilt_invariance(gs, tilt, samples);
        csv += std::string(kind_name(kind)) + "," + format_g17(residual) + "," +
               (residual <= cfg.tol ? "1" : "0") + "\n";
    }
    auto path = out_dir / "tilt.csv";
    write_text_file(path, csv);
    return {path.string()};
}

int emit_error(int code, const char* kind, const std::string& message) {
    std::cerr << "error exit=" << code << " kind=" << kind << " message=\"" << message
              << "\"\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "fastslow: linear fast-slow reaction networks with detailed balance.\n"
        "Exit codes: 0 success, 2 config error, 3 assumption failure under --strict, "
        "4 numerical failure."};
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "experiment config file")->required();
    app.add_option("--out", opts.out_override, "output directory (overrides config)");
    app.add_flag("--strict", opts.strict, "make assumption-check failures fatal (exit 3)");
    app.add_option("--tol", opts.tol_override, "tolerance override");

    auto* sub_stationary = app.add_subcommand("stationary", "stationary measure as CSV");
    auto* sub_coarse = app.add_subcommand("coarse-grain", "M, N, P, what, Ahat as text");
    auto* sub_simulate = app.add_subcommand("simulate", "propagate and emit t,c_1..c_I CSV");
    sub_simulate->add_option("--eps", opts.eps, "time-scale separation (default 1)");
    sub_simulate->add_option("--t-final", opts.t_final, "horizon (default 5/gap)");
    sub_simulate->add_option("--steps", opts.steps, "number of grid points");
    sub_simulate->add_option("--initial", opts.initial, "uniform | vertex:i | file");
    auto* sub_converge = app.add_subcommand("converge", "eps-sweep convergence table");
    sub_converge->add_option("--initial", opts.initial, "uniform | vertex:i | file");
    auto* sub_edb = app.add_subcommand("edb", "energy-dissipation balance report");
    sub_edb->add_option("--eps", opts.eps, "time-scale separation (default 1)");
    sub_edb->add_option("--gs", opts.gs_kind, "gradient structure: quad|entropic|cosh");
    sub_edb->add_option("--refine", opts.refine, "extra grid-halving levels");
    sub_edb->add_option("--initial", opts.initial, "uniform | vertex:i | file");
    sub_edb->add_option("--t-final", opts.t_final, "horizon (default 5/gap)");
    sub_edb->add_option("--steps", opts.steps, "base number of grid points");
    auto* sub_recovery = app.add_subcommand("recovery", "recovery-sequence gap table");
    sub_recovery->add_option("--initial", opts.initial, "uniform | vertex:i | file");
    auto* sub_gs = app.add_subcommand("gs-check", "gradient-structure consistency suite");
    auto* sub_tilt = app.add_subcommand("tilt", "tilt-invariance residuals per kind");
    for (CLI::App* sub : {sub_stationary, sub_coarse, sub_simulate, sub_converge, sub_edb,
                          sub_recovery, sub_gs, sub_tilt})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    auto t0 = std::chrono::steady_clock::now();
    std::string name = app.get_subcommands().front()->get_name();
    try {
        ExperimentConfig cfg = load_config(opts.config_path);
        if (opts.tol_override > 0.0) cfg.tol = opts.tol_override;
        if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
        NetworkFile nf = load_network(cfg.network_path);

        // Assumption gate: warn by default, fatal under --strict.
        AssumptionReport assumptions = check_assumptions(nf.net, cfg.eps_list);
        std::vector<std::string> failures;
        if (!assumptions.connected) failures.push_back("connected");
        if (!assumptions.reversible) failures.push_back("reversible");
        if (assumptions.dbc_residual > cfg.tol)
            failures.push_back("detailed-balance residual " +
                               format_g17(assumptions.dbc_residual));
        if (!assumptions.limit_measure_positive) failures.push_back("limit-measure-positive");
        for (const auto& f : failures)
            std::cerr << "warning assumption=" << f << " network=" << cfg.network_path << "\n";
        if (opts.strict && !failures.empty())
            return emit_error(3, "assumption-failure",
                              "assumptions violated: " + std::to_string(failures.size()) +
                                  " check(s); rerun without --strict to continue anyway");

        std::filesystem::path out_dir(cfg.out_dir);
        std::filesystem::create_directories(out_dir);

        std::vector<std::string> outputs;
        if (name == "stationary")
            outputs = run_stationary(nf, cfg, out_dir);
        else if (name == "coarse-grain")
            outputs = run_coarse_grain(nf, out_dir);
        else if (name == "simulate")
            outputs = run_simulate(nf, cfg, opts, out_dir);
        else if (name == "converge")
            outputs = run_converge(nf, cfg, opts, out_dir);
        else if (name == "edb")
            outputs = run_edb(nf, cfg, opts, out_dir);
        else if (name == "recovery")
            outputs = run_recovery(nf, cfg, opts, out_dir);
        else if (name == "gs-check")
            outputs = run_gs_check(nf, cfg, out_dir);
        else if (name == "tilt")
            outputs = run_tilt(nf, cfg, out_dir);

        RunManifest manifest;
        manifest.subcommand = name;
        manifest.library_version = kLibraryVersion;
        manifest.config_snapshot = cfg.snapshot;
        manifest.outputs = outputs;
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(out_dir / "manifest.json", manifest);
        for (const auto& o : outputs) std::cout << o << "\n";
        return 0;
    } catch (const Error& e) {
        int code = e.kind() == ErrorKind::ConfigError ? 2 : 4;
        return emit_error(code, error_kind_name(e.kind()), e.what());
    } catch (const std::exception& e) {
        return emit_error(4, "numerical-failure", e.what());
    }
}
