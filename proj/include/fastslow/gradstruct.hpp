#pragma once

#include "fastslow/coarse.hpp"
#include "fastslow/network.hpp"

namespace fastslow {

// The three gradient structures for the same equation c' = Ac. They share
// the intensity matrix kappa and equilibrium w but differ in energy and in
// the coefficient functions entering the dual dissipation potential.
enum class Kind {
    Quadratic,           // quadratic energy, state-independent coefficients
    EntropicQuadratic,   // Boltzmann energy, logarithmic-mean coefficients
    Cosh,                // Boltzmann energy, cosh potential, sqrt(c_i c_n)
};

const char* kind_name(Kind kind);

struct GradientStructure {
    Kind kind;
    EquilibriumMeasure w;
    Matrix kappa;  // symmetric, zero diagonal

    // Validates positivity of w and symmetry of kappa (within 1e-12
    // relative; exact symmetry is enforced by averaging).
    GradientStructure(Kind kind_, EquilibriumMeasure w_, Matrix kappa_);
};

// Linear energy perturbation: replaces w by w^eta ~ e^{-eta} w.
struct Tilt {
    Vector eta;
};

// The cosh pair: C*(z) = 4 cosh(z/2) - 4 and its Legendre dual
// C(v) = 2v arsinh(v/2) - 2 sqrt(4 + v^2) + 4. cosh_star saturates to the
// +infinity sentinel for |z| > 1400.
double cosh_star(double zeta);
double cosh_star_prime(double zeta);
double cosh_primal(double v);

// (a - b) / (log a - log b), continuously extended by Lambda(a,a) = a and
// Lambda(a,0) = 0.
double logarithmic_mean(double a, double b);

// Energy value and gradient for the structure's kind. Entropy-based kinds
// throw boundary-state when the gradient is requested at a state with a
// zero component; energy_value alone stays finite there.
std::pair<double, Vector> energy(const GradientStructure& gs, const Vector& c);
double energy_value(const GradientStructure& gs, const Vector& c);

// R*(c, xi) = sum_{i<n} a_in(c) Psi(xi_i - xi_n) and its xi-gradient.
std::pair<double, Vector> dual_dissipation(const GradientStructure& gs, const Vector& c,
                                           const Vector& xi);

// Coefficient matrix a_in(c) per kind, cross-checked against the general
// chain-rule formula kappa sqrt(w_i w_n) (rho_i - rho_n) / Psi'(Phi'(rho_i)
// - Phi'(rho_n)) with its removable-singularity branch.
Matrix coefficient_a(Kind kind, const Vector& c, const EquilibriumMeasure& w,
                     const Matrix& kappa);

// Gradient-flow field D_xi R*(c, -DE(c)); equals A c for all three kinds.
Vector vector_field(const GradientStructure& gs, const Vector& c);

// w^eta_i = e^{-eta_i} w_i / Z, and the generator with the same intensity
// matrix whose equilibrium is w^eta.
EquilibriumMeasure tilt_measure(const EquilibriumMeasure& w, const Tilt& tilt);
Matrix tilt_generator(const Matrix& kappa, const EquilibriumMeasure& w, const Tilt& tilt);

// Max over sample states of |A^eta c - D_xi R*(c, -DE^eta(c))| where E^eta
// is the tilted energy of the structure's kind and R* keeps its untilted
// coefficients. Near zero for Cosh; order one for the other kinds.
double check_tilt_invariance(const GradientStructure& gs, const Tilt& tilt,
                             const std::vector<Vector>& sample_states);

// Coarse intensity matrix: kappa_hat_{j1 j2} = sum over pairs from the two
// classes of kappa_slow at w0 weighted by sqrt(w0 w0 / (what what)).
Matrix coarse_cosh_intensities(const ReactionNetwork& net, const CoarseGraining& cg);

}  // namespace fastslow
