#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fastslow/coarse.hpp"
#include "fastslow/dynamics.hpp"
#include "fastslow/edp.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/gradstruct.hpp"
#include "fastslow/network.hpp"
#include "fastslow/numerics.hpp"
#include "fixtures.hpp"

// Release gate: every shipped guarantee checked end to end, one line per
// criterion. Exits nonzero if any line fails. Tolerances and time budgets
// are part of the guarantee and are printed alongside the measurements.

using namespace fastslow;

namespace {

struct Criterion {
    std::string label;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

template <typename Fn>
Criterion run_criterion(const std::string& label, double budget_seconds, Fn&& body) {
    Criterion c;
    c.label = label;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("threw: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_seconds > 0.0 && c.seconds >= budget_seconds) {
        c.pass = false;
        c.detail += " [over " + sci(budget_seconds) + "s budget]";
    }
    return c;
}

std::vector<double> graded_times(double t_final, int n) {
    std::vector<double> times(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
        times[static_cast<size_t>(k)] =
            t_final * std::pow(static_cast<double>(k) / (n - 1), 1.5);
    return times;
}

const Kind kAllKinds[3] = {Kind::Quadratic, Kind::EntropicQuadratic, Kind::Cosh};

// 1. Operator algebra: MN = id, P idempotent, fast part annihilated on both
// sides, P reversible w.r.t. the limit measure. Named chains plus 50
// randomized reversible networks up to 20 states.
Criterion operator_algebra() {
    return run_criterion("coarse-graining operator algebra", 5.0, [](Criterion& c) {
        double worst = 0.0;
        auto probe = [&](const ReactionNetwork& net, const EquilibriumMeasure& w0) {
            CoarseGraining cg = build_operators(fast_classes(net), w0);
            worst = std::max(worst, verify_operator_algebra(net, cg).worst());
        };
        probe(fixtures::chain4(), limit_equilibrium(fixtures::chain4()));
        probe(fixtures::chain4_rates(), limit_equilibrium(fixtures::chain4_rates()));
        std::mt19937 rng(101);
        for (int t = 0; t < 50; ++t) {
            int n = 3 + static_cast<int>(rng() % 18);
            auto inst = fixtures::random_split_network(rng, n);
            probe(inst.net, EquilibriumMeasure{inst.w});
        }
        c.pass = worst <= 1e-10;
        c.detail = "worst residual " + sci(worst) + " <= 1e-10";
    });
}

// 2. Gradient-flow equivalence: D_xi R*(c, -DE(c)) = Ac for all three
// structure kinds on 100 interior states drawn from 10 random networks.
Criterion gradient_flow_equivalence() {
    return run_criterion("gradient-flow field matches the generator", 10.0, [](Criterion& c) {
        std::mt19937 rng(202);
        double worst = 0.0;
        for (int t = 0; t < 10; ++t) {
            int n = 3 + static_cast<int>(rng() % 10);
            auto inst = fixtures::random_split_network(rng, n);
            Matrix A = assemble_generator(inst.net, 1.0);
            EquilibriumMeasure w = stationary_measure(A);
            Matrix kappa = kappa_representation(A, w).kappa;
            for (Kind kind : kAllKinds) {
                GradientStructure gs(kind, w, kappa);
                for (int s = 0; s < 10; ++s) {
                    Vector state = fixtures::interior_state(rng, n);
                    worst = std::max(
                        worst, (vector_field(gs, state) - A * state).lpNorm<Eigen::Infinity>());
                }
            }
        }
        c.pass = worst <= 1e-9;
        c.detail = "worst |field - Ac| " + sci(worst) + " <= 1e-9";
    });
}

// 3. Energy-dissipation balance along exact trajectories of the 4-state
// chain at eps in {1, 0.1}: relative residual below 1e-5 on 400 graded
// nodes and shrinking at least 3x on 800.
Criterion energy_dissipation_balance() {
    return run_criterion("energy-dissipation balance under refinement", 30.0, [](Criterion& c) {
        auto net = fixtures::chain4();
        Vector c0(4);
        c0 << 0.4, 0.25, 0.25, 0.1;
        EpsFamily family = make_family(net, Kind::Cosh);
        double worst_rel = 0.0, min_shrink = 1e300;
        for (double eps : {1.0, 0.1}) {
            Matrix A = assemble_generator(net, eps);
            EquilibriumMeasure w = stationary_measure(A);
            Trajectory coarse = propagate(A, w, c0, graded_times(1.25, 400));
            Trajectory fine = propagate(A, w, c0, graded_times(1.25, 800));
            DissipationReport r400 = dissipation_functional(family, coarse, eps);
            DissipationReport r800 = dissipation_functional(family, fine, eps);
            double e0 = energy_value(GradientStructure(Kind::Cosh, w, Matrix::Zero(4, 4)), c0);
            worst_rel = std::max(worst_rel, r400.edb_residual / (1.0 + std::abs(e0)));
            min_shrink = std::min(min_shrink, r400.edb_residual / r800.edb_residual);
        }
        c.pass = worst_rel <= 1e-5 && min_shrink >= 3.0;
        c.detail = "rel residual " + sci(worst_rel) + " <= 1e-5, refinement shrink " +
                   sci(min_shrink) + "x >= 3x";
    });
}

// 4. Convergence of solutions to the limit dynamics: coarse sup error and
// L2 error strictly decreasing over eps in {1e-1, 1e-2, 1e-3}, and the
// fast-direction rate eps^-1 int |(id-P)c|^2 dt stays within a 10x band.
Criterion solution_convergence() {
    return run_criterion("solution convergence and fast-direction rate", 30.0, [](Criterion& c) {
        auto net = fixtures::chain4();
        auto times = uniform_times(5.0, 201);
        ConvergenceReport rep =
            convergence_experiment(net, fixtures::c0_default(), {1e-1, 1e-2, 1e-3}, times);
        bool decreasing = true;
        for (size_t k = 0; k + 1 < rep.eps.size(); ++k) {
            decreasing = decreasing && rep.sup_mc_err[k + 1] < rep.sup_mc_err[k];
            decreasing = decreasing && rep.l2_err[k + 1] < rep.l2_err[k];
        }
        double rmax = *std::max_element(rep.rate_ratio.begin(), rep.rate_ratio.end());
        double rmin = *std::min_element(rep.rate_ratio.begin(), rep.rate_ratio.end());
        c.pass = decreasing && rmax / rmin <= 10.0;
        c.detail = std::string("errors ") + (decreasing ? "decreasing" : "NOT decreasing") +
                   ", rate band " + sci(rmax / rmin) + "x <= 10x";
    });
}

// 5. Coarse generator computed two independent ways (operator product vs
// class-averaged rates) agrees to 1e-12 and annihilates the coarse
// equilibrium to 1e-10, on 50 random instances.
Criterion coarse_generator_two_ways() {
    return run_criterion("coarse generator double computation", 0.0, [](Criterion& c) {
        std::mt19937 rng(505);
        double worst_gap = 0.0, worst_annihilation = 0.0;
        for (int t = 0; t < 50; ++t) {
            int n = 3 + static_cast<int>(rng() % 14);
            auto inst = fixtures::random_split_network(rng, n);
            Partition part = fast_classes(inst.net);
            CoarseGraining cg = build_operators(part, EquilibriumMeasure{inst.w});
            Matrix from_lib = coarse_generator(inst.net, cg);
            Matrix product = cg.M_real() * inst.net.slow * cg.N;
            const int J = static_cast<int>(part.classes.size());
            Matrix averaged = Matrix::Zero(J, J);
            for (int l = 0; l < J; ++l)
                for (int k = 0; k < J; ++k) {
                    double sum = 0.0;
                    for (int i : part.classes[static_cast<size_t>(l)])
                        for (int m : part.classes[static_cast<size_t>(k)])
                            sum += inst.net.slow(i, m) * cg.w0.w(m);
                    averaged(l, k) = sum / cg.what.w(k);
                }
            worst_gap = std::max(worst_gap, (product - averaged).cwiseAbs().maxCoeff());
            worst_gap = std::max(worst_gap, (from_lib - product).cwiseAbs().maxCoeff());
            worst_annihilation = std::max(worst_annihilation,
                                          (from_lib * cg.what.w).lpNorm<Eigen::Infinity>());
        }
        c.pass = worst_gap <= 1e-12 && worst_annihilation <= 1e-10;
        c.detail = "two-way gap " + sci(worst_gap) + " <= 1e-12, |Ahat what| " +
                   sci(worst_annihilation) + " <= 1e-10";
    });
}

// 6. Effective-potential duality: the constrained primal infimum equals an
// independently maximized dual supremum over class-constant forces, within
// 1e-8 relative, on 100 random (state, velocity) pairs in the projected
// simplex.
Criterion effective_duality() {
    return run_criterion("effective-potential duality", 20.0, [](Criterion& c) {
        std::mt19937 rng(606);
        double worst = 0.0;
        int checked = 0;
        for (int t = 0; t < 10; ++t) {
            int n = 4 + static_cast<int>(rng() % 9);
            auto inst = fixtures::random_split_network(rng, n);
            CoarseGraining cg =
                build_operators(fast_classes(inst.net), EquilibriumMeasure{inst.w});
            Matrix kappa_slow = kappa_representation(inst.net.slow, cg.w0).kappa;
            const Matrix Mr = cg.M_real();
            const int J = static_cast<int>(cg.what.w.size());
            for (int pair = 0; pair < 10; ++pair) {
                Kind kind = kAllKinds[(t * 10 + pair) % 3];
                GradientStructure gs_slow(kind, cg.w0, kappa_slow);
                Vector chat = fixtures::interior_state(rng, J);
                Vector vhat = 0.1 * fixtures::interior_state(rng, J);
                vhat.array() -= vhat.mean();
                Vector state = cg.N * chat;
                Vector v = cg.N * vhat;
                double primal = effective_primal(cg, gs_slow, state, v);
                if (J < 2) {
                    // one merged class: the only admissible velocity is zero
                    worst = std::max(worst, std::abs(primal));
                    ++checked;
                    continue;
                }
                // Dual supremum over forces constant on fast classes, gauge
                // fixed by pinning the first class, maximized from scratch.
                auto f_grad = [&](const Vector& y, Vector& g) {
                    Vector xihat = Vector::Zero(J);
                    xihat.tail(J - 1) = y;
                    Vector xi = Mr.transpose() * xihat;
                    auto [value, grad_xi] = dual_dissipation(gs_slow, state, xi);
                    Vector g_full = Mr * (grad_xi - v);
                    g = g_full.tail(J - 1);
                    return value - xi.dot(v);
                };
                // Value error at a stationary point scales like |g|^2, so a
                // 1e-8 gradient certifies the value far beyond the 1e-8
                // relative comparison below.
                double neg_dual = 0.0;
                bfgs_minimize(f_grad, Vector::Zero(J - 1), BfgsOptions{1e-8, 800}, &neg_dual,
                              nullptr);
                double dual = -neg_dual;
                worst = std::max(worst, std::abs(primal - dual) /
                                            (1.0 + std::max(std::abs(primal), std::abs(dual))));
                ++checked;
            }
        }
        c.pass = worst <= 1e-8 && checked == 100;
        c.detail = "worst rel gap " + sci(worst) + " <= 1e-8 over " + std::to_string(checked) +
                   " pairs";
    });
}

// 7. Tilt-invariance dichotomy: under 10 random linear energy perturbations
// the cosh structure keeps its flow equation (residual <= 1e-9) while the
// quadratic and entropic-quadratic structures break it (> 1e-3).
Criterion tilt_dichotomy() {
    return run_criterion("tilt-invariance dichotomy", 0.0, [](Criterion& c) {
        auto net = fixtures::chain3_rates();
        Matrix A = assemble_generator(net, 1.0);
        EquilibriumMeasure w = stationary_measure(A);
        Matrix kappa = kappa_representation(A, w).kappa;
        std::mt19937 rng(707);
        std::vector<Vector> samples;
        for (int s = 0; s < 8; ++s) samples.push_back(fixtures::interior_state(rng, 3));

        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        double cosh_worst = 0.0, quad_best = 0.0, entropic_best = 0.0;
        for (int t = 0; t < 10; ++t) {
            Vector eta(3);
            for (int i = 0; i < 3; ++i) eta(i) = unit(rng);
            Tilt tilt{eta};
            cosh_worst = std::max(
                cosh_worst,
                check_tilt_invariance(GradientStructure(Kind::Cosh, w, kappa), tilt, samples));
            quad_best = std::max(
                quad_best, check_tilt_invariance(GradientStructure(Kind::Quadratic, w, kappa),
                                                 tilt, samples));
            entropic_best = std::max(
                entropic_best,
                check_tilt_invariance(GradientStructure(Kind::EntropicQuadratic, w, kappa),
                                      tilt, samples));
        }
        c.pass = cosh_worst <= 1e-9 && quad_best > 1e-3 && entropic_best > 1e-3;
        c.detail = "cosh " + sci(cosh_worst) + " <= 1e-9; quadratic " + sci(quad_best) +
                   ", entropic " + sci(entropic_best) + " > 1e-3";
    });
}

// 8. Recovery-sequence dissipation gap: on a mollified resampled limit
// curve, |D_eps(c_eps) - D_0(c_0)| / (1 + D_0) decreases monotonically over
// eps in {1e-1, 1e-2, 1e-3} and ends below 1e-2.
Criterion recovery_gap() {
    return run_criterion("recovery-sequence dissipation gap", 60.0, [](Criterion& c) {
        auto net = fixtures::chain4_rates();
        CoarseGraining cg = build_operators(fast_classes(net), limit_equilibrium(net));
        auto times = uniform_times(default_horizon(net, cg), 240);
        Trajectory limit = solve_limit(net, cg, cg.apply_projection(fixtures::c0_default()),
                                       times);
        Trajectory curve = mollify_positivity(resample_trajectory(limit, times), 0.01, cg.w0.w);
        EpsFamily family = make_family(net, Kind::Cosh);
        DissipationReport d0 = dissipation_functional(family, curve, 0.0);

        std::vector<double> gaps;
        for (double eps : {1e-1, 1e-2, 1e-3}) {
            Trajectory ce = recovery_sequence(curve, net, eps);
            DissipationReport de = dissipation_functional(family, ce, eps);
            gaps.push_back(std::abs(de.total - d0.total) / (1.0 + std::abs(d0.total)));
        }
        c.pass = gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] <= 1e-2;
        c.detail = "gaps " + sci(gaps[0]) + " > " + sci(gaps[1]) + " > " + sci(gaps[2]) +
                   ", final <= 1e-2";
    });
}

// 9. Dual-potential identity suite: Fenchel conjugacy on a dense grid,
// quadratic scaling inequalities, superlinear growth bounds up to 1e6, and
// the log-ratio identity on 1000 random pairs.
Criterion identity_suite() {
    return run_criterion("dual-potential identity suite", 0.0, [](Criterion& c) {
        double worst_fenchel = 0.0;
        for (double z = -30.0; z <= 30.0 + 1e-12; z += 0.01) {
            double slope = cosh_star_prime(z);
            double direct = cosh_primal(slope);
            double conjugate = z * slope - cosh_star(z);
            worst_fenchel = std::max(worst_fenchel, std::abs(direct - conjugate) /
                                                        (1.0 + std::abs(conjugate)));
        }

        bool scaling_ok = true;
        for (double lambda : {1.0, 1.5, 2.0, 5.0, 10.0}) {
            for (double z = -20.0; z <= 20.0 + 1e-12; z += 0.05) {
                double lhs = cosh_star(lambda * z), rhs = lambda * lambda * cosh_star(z);
                if (lhs < rhs - 1e-12 * (1.0 + std::abs(rhs))) scaling_ok = false;
            }
            for (double s = -100.0; s <= 100.0 + 1e-12; s += 0.25) {
                double lhs = cosh_primal(lambda * s), rhs = lambda * lambda * cosh_primal(s);
                if (lhs > rhs + 1e-12 * (1.0 + std::abs(rhs))) scaling_ok = false;
            }
        }

        bool growth_ok = true;
        for (int k = 0; k <= 400; ++k) {
            double mag = std::pow(10.0, -3.0 + 9.0 * static_cast<double>(k) / 400.0);
            for (double s : {mag, -mag}) {
                double value = cosh_primal(s);
                double lo = 0.5 * std::abs(s) * std::log1p(std::abs(s));
                double hi = 2.0 * std::abs(s) * std::log1p(std::abs(s));
                double slack = 1e-12 * (1.0 + hi);
                if (value < lo - slack || value > hi + slack) growth_ok = false;
            }
        }

        std::mt19937 rng(909);
        std::uniform_real_distribution<double> logrange(-3.0, 3.0);
        double worst_log = 0.0;
        for (int t = 0; t < 1000; ++t) {
            double p = std::exp(logrange(rng)), q = std::exp(logrange(rng));
            double lhs = cosh_star(std::log(p) - std::log(q));
            double rhs = 2.0 * (std::sqrt(p / q) + std::sqrt(q / p) - 2.0);
            worst_log = std::max(worst_log, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        }

        c.pass = worst_fenchel <= 1e-10 && scaling_ok && growth_ok && worst_log <= 1e-12;
        c.detail = "fenchel " + sci(worst_fenchel) + " <= 1e-10, scaling " +
                   (scaling_ok ? "ok" : "VIOLATED") + ", growth " +
                   (growth_ok ? "ok" : "VIOLATED") + ", log identity " + sci(worst_log) +
                   " <= 1e-12";
    });
}

// 10. Degenerate negative fixture: the three-state network whose middle
// state loses all mass in the limit is flagged by check_assumptions, and
// the CLI refuses it with exit code 3 under --strict.
Criterion degenerate_detection() {
    return run_criterion("degenerate-limit detection and strict exit", 0.0, [](Criterion& c) {
        AssumptionReport rep =
            check_assumptions(fixtures::vanishing_middle(), {1e-1, 1e-2, 1e-3});
        bool flagged = !rep.limit_measure_positive;

        namespace fs = std::filesystem;
        fs::path out = fs::path(FASTSLOW_SCRATCH_DIR) / "acceptance_strict";
        fs::remove_all(out);
        std::string cmd = std::string("\"") + FASTSLOW_CLI_PATH + "\" --config \"" +
                          (fs::path(FASTSLOW_DATA_DIR) / "cfg_vanishing.json").string() +
                          "\" --out \"" + out.string() +
                          "\" --strict stationary > /dev/null 2> /dev/null";
        int raw = std::system(cmd.c_str());
        int code = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;

        c.pass = flagged && code == 3;
        c.detail = std::string("limit_measure_positive=") + (flagged ? "false" : "true") +
                   ", strict CLI exit " + std::to_string(code) + " == 3";
    });
}

}  // namespace

int main() {
    std::vector<Criterion> results;
    results.push_back(operator_algebra());
    results.push_back(gradient_flow_equivalence());
    results.push_back(energy_dissipation_balance());
    results.push_back(solution_convergence());
    results.push_back(coarse_generator_two_ways());
    results.push_back(effective_duality());
    results.push_back(tilt_dichotomy());
    results.push_back(recovery_gap());
    results.push_back(identity_suite());
    results.push_back(degenerate_detection());

    int passed = 0;
    for (size_t k = 0; k < results.size(); ++k) {
        const Criterion& c = results[k];
        std::printf("[%2zu] %s  %-46s %s  (%.2fs)\n", k + 1, c.pass ? "PASS" : "FAIL",
                    c.label.c_str(), c.detail.c_str(), c.seconds);
        if (c.pass) ++passed;
    }
    std::printf("\nacceptance: %d/%zu criteria passed\n", passed, results.size());
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}
