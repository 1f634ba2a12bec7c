#include "fastslow/dynamics.hpp"

#include <iostream>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

void require_times(const std::vector<double>& times) {
    if (times.empty()) throw Error(ErrorKind::InvalidParameter, "empty time grid");
    for (size_t k = 0; k + 1 < times.size(); ++k)
        if (!(times[k] < times[k + 1]))
            throw Error(ErrorKind::InvalidParameter, "time grid must be strictly increasing");
}

void require_simplex(const Vector& c, const char* where) {
    for (int i = 0; i < c.size(); ++i)
        if (c(i) < -1e-9)
            throw Error(ErrorKind::InvalidParameter,
                        std::string(where) + ": state entry " + std::to_string(i + 1) +
                            " is negative (" + format_g17(c(i)) + ")");
    if (std::abs(c.sum() - 1.0) > 1e-9)
        throw Error(ErrorKind::InvalidParameter,
                    std::string(where) + ": state mass is " + format_g17(c.sum()));
}

// (exp(mu T) - 1) / mu, the T-integral of exp(mu t); series branch near 0.
double growth_integral(double mu, double T) {
    double x = mu * T;
    if (std::abs(x) < 1e-8) return T * (1.0 + 0.5 * x + x * x / 6.0);
    return (std::exp(x) - 1.0) / mu;
}

}  // namespace

Vector ModeExpansion::eval(double t) const {
    Vector c = Vector::Zero(modes.empty() ? 0 : modes.front().size());
    for (size_t k = 0; k < modes.size(); ++k) c += std::exp(rates(static_cast<long>(k)) * t) * modes[k];
    return c;
}

ModeExpansion spectral_modes(const Matrix& A, const EquilibriumMeasure& w, const Vector& c0) {
    const int n = static_cast<int>(A.rows());
    auto [dbc_ok, residual] = check_detailed_balance(A, w, 1e-8);
    if (!dbc_ok)
        throw Error(ErrorKind::RequiresDetailedBalance,
                    "generator violates detailed balance (residual " + format_g17(residual) + ")");

    // Similarity transform to a symmetric matrix; DBC makes this exact.
    Vector sqrt_w = w.w.cwiseSqrt();
    Matrix B = sqrt_w.cwiseInverse().asDiagonal() * A * sqrt_w.asDiagonal();
    B = 0.5 * (B + Matrix(B.transpose()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(B);
    if (eig.info() != Eigen::Success)
        throw Error(ErrorKind::NumericalFailure, "symmetric eigendecomposition failed");

    ModeExpansion expansion;
    expansion.rates = eig.eigenvalues();
    Vector y0 = sqrt_w.cwiseInverse().asDiagonal() * c0;
    for (int k = 0; k < n; ++k) {
        double coeff = eig.eigenvectors().col(k).dot(y0);
        expansion.modes.push_back(sqrt_w.asDiagonal() * (coeff * eig.eigenvectors().col(k)));
    }
    return expansion;
}

double exact_square_integral(const ModeExpansion& expansion, double T) {
    const size_t m = expansion.modes.size();
    std::vector<double> terms;
    terms.reserve(m * m);
    for (size_t k = 0; k < m; ++k)
        for (size_t l = 0; l < m; ++l) {
            double gram = expansion.modes[k].dot(expansion.modes[l]);
            double mu = expansion.rates(static_cast<long>(k)) + expansion.rates(static_cast<long>(l));
            terms.push_back(gram * growth_integral(mu, T));
        }
    return pairwise_sum(terms);
}

Trajectory propagate(const Matrix& A, const EquilibriumMeasure& w, const Vector& c0,
                     const std::vector<double>& times) {
    require_times(times);
    require_simplex(c0, "propagate");
    ModeExpansion expansion = spectral_modes(A, w, c0);

    Trajectory traj;
    traj.times = times;
    double worst_drift = 0.0;
    for (double t : times) {
        Vector c = expansion.eval(t);
        double mass = c.sum();
        worst_drift = std::max(worst_drift, std::abs(mass - 1.0));
        c /= mass;
        require_simplex(c, "propagate output");
        traj.velocities.push_back(A * c);
        traj.states.push_back(std::move(c));
    }
    if (worst_drift > 1e-12)
        std::cerr << "propagate: renormalized mass drift " << format_g17(worst_drift) << "\n";
    return traj;
}

Trajectory solve_limit(const ReactionNetwork& net, const CoarseGraining& cg, const Vector& c0,
                       const std::vector<double>& times) {
    require_times(times);
    require_simplex(c0, "solve_limit");
    double fast_residual = (net.fast * c0).lpNorm<Eigen::Infinity>();
    if (fast_residual > 1e-9)
        throw Error(ErrorKind::InvalidInitialState,
                    "initial state is not fast-equilibrated (|fast c0| = " +
                        format_g17(fast_residual) + "); project with P first");

    Matrix Ahat = coarse_generator(net, cg);
    Vector chat0 = cg.M_real() * c0;
    Trajectory coarse = propagate(Ahat, cg.what, chat0, times);

    Trajectory traj;
    traj.times = times;
    for (size_t k = 0; k < times.size(); ++k) {
        traj.states.push_back(cg.N * coarse.states[k]);
        traj.velocities.push_back(cg.N * (Ahat * coarse.states[k]));
    }
    return traj;
}

ConvergenceReport convergence_experiment(const ReactionNetwork& net, const Vector& c0,
                                         const std::vector<double>& eps_list,
                                         const std::vector<double>& times) {
    require_times(times);
    require_simplex(c0, "convergence_experiment");
    if (eps_list.empty())
        throw Error(ErrorKind::InvalidParameter, "eps_list must be nonempty");
    for (size_t k = 0; k + 1 < eps_list.size(); ++k)
        if (!(eps_list[k] > eps_list[k + 1]))
            throw Error(ErrorKind::InvalidParameter, "eps_list must be strictly decreasing");

    CoarseGraining cg = build_operators(fast_classes(net), limit_equilibrium(net));
    Matrix Ahat = coarse_generator(net, cg);
    Matrix Md = cg.M_real();
    double T = times.back();

    // Lifted limit flow N chat(t) as a mode expansion, started from M c0
    // (the coarse image of the projected initial state N M c0).
    ModeExpansion coarse_modes =
        spectral_modes(Ahat, cg.what, Vector(Md * c0));
    ModeExpansion limit_lifted;
    limit_lifted.rates = coarse_modes.rates;
    for (const Vector& m : coarse_modes.modes) limit_lifted.modes.push_back(cg.N * m);

    ConvergenceReport report;
    for (double eps : eps_list) {
        Matrix A = assemble_generator(net, eps);
        EquilibriumMeasure w_eps = stationary_measure(A);
        ModeExpansion fine = spectral_modes(A, w_eps, c0);

        double sup_mc = 0.0;
        for (double t : times) {
            Vector diff = Md * (fine.eval(t) - limit_lifted.eval(t));
            sup_mc = std::max(sup_mc, diff.lpNorm<Eigen::Infinity>());
        }

        // L2 error via the concatenated difference expansion (exact).
        ModeExpansion diff;
        diff.rates = Vector(fine.rates.size() + limit_lifted.rates.size());
        diff.rates << fine.rates, limit_lifted.rates;
        diff.modes = fine.modes;
        for (const Vector& m : limit_lifted.modes) diff.modes.push_back(-m);
        double l2 = std::sqrt(std::max(0.0, exact_square_integral(diff, T)));

        // Fast-direction integral: project each fine mode by (id - P).
        ModeExpansion fast_part;
        fast_part.rates = fine.rates;
        for (const Vector& m : fine.modes) fast_part.modes.push_back(m - cg.apply_projection(m));
        double fast_integral = std::max(0.0, exact_square_integral(fast_part, T));

        report.eps.push_back(eps);
        report.sup_mc_err.push_back(sup_mc);
        report.l2_err.push_back(l2);
        report.fast_integral.push_back(fast_integral);
        report.rate_ratio.push_back(fast_integral / eps);
    }
    return report;
}

Trajectory resample_trajectory(const Trajectory& traj, const std::vector<double>& new_times) {
    require_times(traj.times);
    require_times(new_times);
    if (new_times.front() < traj.times.front() - 1e-14 ||
        new_times.back() > traj.times.back() + 1e-14)
        throw Error(ErrorKind::OutOfRange,
                    "resample grid [" + format_g17(new_times.front()) + ", " +
                        format_g17(new_times.back()) + "] leaves the trajectory span");

    Trajectory out;
    out.times = new_times;
    size_t seg = 0;
    for (double t : new_times) {
        while (seg + 2 < traj.times.size() && traj.times[seg + 1] < t) ++seg;
        double t0 = traj.times[seg], t1 = traj.times[seg + 1];
        double theta = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
        out.states.push_back((1.0 - theta) * traj.states[seg] + theta * traj.states[seg + 1]);
    }
    for (size_t k = 0; k + 1 < new_times.size(); ++k)
        out.velocities.push_back((out.states[k + 1] - out.states[k]) /
                                 (new_times[k + 1] - new_times[k]));
    if (new_times.size() >= 2)
        out.velocities.push_back(out.velocities.back());
    else
        out.velocities.push_back(Vector::Zero(out.states.front().size()));
    return out;
}

std::vector<double> uniform_times(double t_final, int n) {
    if (n < 2 || !(t_final > 0.0))
        throw Error(ErrorKind::InvalidParameter, "uniform_times needs n >= 2 and t_final > 0");
    std::vector<double> times(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) times[static_cast<size_t>(k)] = t_final * k / (n - 1);
    return times;
}

double default_horizon(const ReactionNetwork& net, const CoarseGraining& cg) {
    Matrix Ahat = coarse_generator(net, cg);
    Vector sqrt_w = cg.what.w.cwiseSqrt();
    Matrix B = sqrt_w.cwiseInverse().asDiagonal() * Ahat * sqrt_w.asDiagonal();
    B = 0.5 * (B + Matrix(B.transpose()));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(B);
    Vector lam = eig.eigenvalues();  // ascending; last is ~0
    if (lam.size() < 2)
        throw Error(ErrorKind::InvalidParameter,
                    "default horizon undefined for a single coarse state");
    double gap = -lam(lam.size() - 2);
    if (!(gap > 0.0))
        throw Error(ErrorKind::UnboundedOrDegenerate, "coarse generator has no spectral gap");
    return 5.0 / gap;
}

}  // namespace fastslow
