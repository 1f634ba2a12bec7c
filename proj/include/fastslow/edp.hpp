#pragma once

#include <utility>
#include <vector>

#include "fastslow/coarse.hpp"
#include "fastslow/dynamics.hpp"
#include "fastslow/gradstruct.hpp"
#include "fastslow/network.hpp"

namespace fastslow {

// Dissipation of a curve: the velocity part integrates R(c, c'), the slope
// parts integrate R*(c, -DE(c)) split into slow and fast-over-eps pieces,
// and edb_residual = |E(c(T)) + total - E(c(0))| measures energy-dissipation
// balance for trajectories produced by propagate.
struct DissipationReport {
    double velocity_part = 0.0;
    double slope_slow = 0.0;
    double slope_fast = 0.0;  // already divided by eps where applicable
    double total = 0.0;
    double edb_residual = 0.0;
    int quadrature_points = 0;
};

// Solution of R(c, v) = sup_xi { <xi, v> - R*(c, xi) }, gauge-fixed by
// pinning the first component of xi to zero.
struct LegendreSolve {
    double value = 0.0;
    Vector maximizer_xi;
    int iterations = 0;
    double kkt_residual = 0.0;
};

// One-parameter family of gradient structures for A = slow + fast/eps: a
// structure kind plus the network. The eps-dependent equilibrium and the
// per-part intensity matrices are realized on demand; each part must be
// balanced by the family equilibrium on its own.
struct EpsFamily {
    Kind kind;
    ReactionNetwork net;
};

EpsFamily make_family(const ReactionNetwork& net, Kind kind);

// Slope term R*(c, -DE(c)) at the given eps, split into (slow, fast/eps).
// Evaluated edge by edge in cancellation-free closed form (for the cosh
// kind 2 kappa sqrt(w_i w_n) (sqrt(rho_i) - sqrt(rho_n))^2), so simplex
// boundary states are handled without log differences. At eps = 0 the fast
// component is 0 when it vanishes and the +infinity sentinel otherwise.
std::pair<double, double> slope_term(const EpsFamily& family, const Vector& c, double eps);

// R(c, v) by damped Newton on the gauge-reduced strictly concave dual
// problem. Requires sum(v) = 0 and a connected positive-coefficient graph.
LegendreSolve legendre_primal(const GradientStructure& gs, const Vector& c, const Vector& v);

// Dissipation functional of a trajectory: trapezoid quadrature of the
// velocity part plus the slope parts. eps = 0 means the limit functional,
// i.e. the slow structure at the limit equilibrium plus the barrier that
// sends curves with a nonvanishing fast slope to the sentinel.
DissipationReport dissipation_functional(const EpsFamily& family, const Trajectory& traj,
                                         double eps);

// Effective dual potential: R*_S(c, xi) when xi is constant on fast classes
// (membership tested via the projection residual |xi - P^T xi|), else the
// +infinity sentinel.
double effective_dual(const CoarseGraining& cg, const GradientStructure& gs_slow,
                      const Vector& c, const Vector& xi);

// Effective primal potential R_eff(c, v) = inf { R_S(c, v + k) : M k = 0 },
// computed both as that minimization over a within-class difference basis
// and as the dual sup over class-constant potentials; the two answers must
// agree to 1e-8 relative. Requires c = Pc. Returns the sentinel when no
// feasible reaction flux exists for v.
double effective_primal(const CoarseGraining& cg, const GradientStructure& gs_slow,
                        const Vector& c, const Vector& v);

// Limit dissipation of a curve in the projected simplex: velocity part via
// effective_primal, slope part from the slow structure at the limit
// equilibrium. Cross-checked against the coarse dissipation of the image
// curve Mc under the inherited coarse structure.
DissipationReport limit_dissipation(const CoarseGraining& cg, const GradientStructure& gs_slow,
                                    const Trajectory& traj);

// Best lower bound max over candidates of int <xi, c'> - R*(c, xi) dt for
// step-function candidates xi given per quadrature node; never exceeds the
// velocity part of dissipation_functional beyond quadrature slack.
double rockafellar_bound(const EpsFamily& family, const Trajectory& traj, double eps,
                         const std::vector<std::vector<Vector>>& xi_candidates);

// Recovery construction: rescales a limit curve by the density of the eps
// equilibrium against the limit one and renormalizes; velocities follow by
// the chain rule. The fast slope of the output vanishes identically.
Trajectory recovery_sequence(const Trajectory& traj0, const ReactionNetwork& net, double eps);

// c_delta(t) = delta w0 + (1 - delta) c(t): pushes a curve into the strict
// interior while staying in the simplex.
Trajectory mollify_positivity(const Trajectory& traj, double delta, const Vector& w0);

}  // namespace fastslow
