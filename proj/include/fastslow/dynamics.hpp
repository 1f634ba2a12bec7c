#pragma once

#include "fastslow/coarse.hpp"
#include "fastslow/network.hpp"

namespace fastslow {

// A curve on the simplex: states (and optionally velocities) on a strictly
// increasing time grid. velocities is either empty or matches states.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> velocities;

    bool has_velocities() const { return !velocities.empty(); }
};

struct ConvergenceReport {
    std::vector<double> eps;
    std::vector<double> sup_mc_err;     // sup_t |M c^eps - M c^0|_inf
    std::vector<double> l2_err;         // ||c^eps - c^0||_{L^2(0,T)}
    std::vector<double> fast_integral;  // int |(id - P) c^eps|^2 dt
    std::vector<double> rate_ratio;     // fast_integral / eps
};

// Eigen-expansion of a detailed-balance semigroup solution:
// c(t) = sum_k exp(rates_k t) modes_k. Exact time integrals of |c(t)|^2
// follow in closed form, which the convergence experiment relies on (a
// quadrature would never resolve the O(eps) initial layer).
struct ModeExpansion {
    Vector rates;
    std::vector<Vector> modes;

    Vector eval(double t) const;
};

ModeExpansion spectral_modes(const Matrix& A, const EquilibriumMeasure& w, const Vector& c0);

// int_0^T |c(t)|^2 dt for an expansion (exact, mode-pair Gram sums).
double exact_square_integral(const ModeExpansion& expansion, double T);

// Exact solution of c' = A c by symmetric eigendecomposition of
// D_w^{-1/2} A D_w^{1/2}; requires detailed balance of (A, w) within 1e-8.
// Velocities are the exact field A c(t). Sums are renormalized (and the
// correction logged) when round-off drifts them beyond 1e-12.
Trajectory propagate(const Matrix& A, const EquilibriumMeasure& w, const Vector& c0,
                     const std::vector<double>& times);

// Limit dynamics: coarse flow of A^ = M slow N started at M c0, lifted by
// N. c0 must satisfy fast c0 = 0 within 1e-9.
Trajectory solve_limit(const ReactionNetwork& net, const CoarseGraining& cg, const Vector& c0,
                       const std::vector<double>& times);

// For each eps: propagate the assembled generator, compare with the lifted
// limit flow started from N M c0, and report sup/L2 errors plus the
// fast-direction integral and its ratio to eps.
ConvergenceReport convergence_experiment(const ReactionNetwork& net, const Vector& c0,
                                         const std::vector<double>& eps_list,
                                         const std::vector<double>& times);

// Piecewise-linear resampling onto new_times (must lie within the original
// span); velocities by forward differences, last node copying its neighbor.
Trajectory resample_trajectory(const Trajectory& traj, const std::vector<double>& new_times);

// n uniform nodes on [0, T].
std::vector<double> uniform_times(double t_final, int n);

// Default experiment horizon 5 / (spectral gap of the coarse generator).
double default_horizon(const ReactionNetwork& net, const CoarseGraining& cg);

}  // namespace fastslow
