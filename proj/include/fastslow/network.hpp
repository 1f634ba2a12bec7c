#pragma once

#include <optional>
#include <vector>

#include "fastslow/numerics.hpp"

namespace fastslow {

// A linear reaction network split into slow and fast parts. Both parts are
// adjoints of Markov generators: nonnegative off-diagonals, every column
// summing to zero. The evolution at scale eps is c' = (slow + fast/eps) c.
struct ReactionNetwork {
    int num_states = 0;
    Matrix slow;  // I x I
    Matrix fast;  // I x I

    // Validates shapes and signs, recomputes the diagonals from the
    // off-diagonal column sums (inputs may carry slightly inconsistent
    // diagonals), and records the largest correction applied.
    ReactionNetwork(int num_states_, Matrix slow_, Matrix fast_);
    double diagonal_correction() const { return diagonal_correction_; }

private:
    double diagonal_correction_ = 0.0;
};

// Strictly positive probability weights over the states.
struct EquilibriumMeasure {
    Vector w;
};

// Off-diagonal intensity matrix kappa plus exit-rate vector b such that
// A = D_w^{1/2} K D_w^{-1/2} - D_b. K is symmetric exactly when A is in
// detailed balance with respect to w.
struct KappaRepresentation {
    Matrix kappa;
    Vector b;
};

struct AssumptionReport {
    bool connected = false;
    bool reversible = false;
    std::optional<double> quotient_bound;  // only meaningful when reversible
    double dbc_residual = 0.0;             // worst over the sampled eps
    bool limit_measure_positive = false;
};

// slow + (1/eps) * fast. Throws invalid-parameter for eps <= 0.
Matrix assemble_generator(const ReactionNetwork& net, double eps);

// Unique stationary probability vector of a generator matrix, from the
// least-squares solve of the augmented system [A; 1^T] w = [0; 1] with a
// rank check. Throws non-unique-equilibrium for reducible inputs and
// invalid-matrix for non-generator inputs.
EquilibriumMeasure stationary_measure(const Matrix& A);

// residual = max_{i,k} |A_ik w_k - A_ki w_i|; first = (residual <= tol).
std::pair<bool, double> check_detailed_balance(const Matrix& A, const EquilibriumMeasure& w,
                                               double tol);

// Connectivity, reversibility, transition-quotient bound, detailed-balance
// residual, and positivity of the extrapolated small-eps stationary
// measure, sampled over eps_list. Never throws: findings go in the report.
AssumptionReport check_assumptions(const ReactionNetwork& net,
                                   const std::vector<double>& eps_list);

// kappa_in = A_in sqrt(w_n / w_i), b_i = -A_ii.
KappaRepresentation kappa_representation(const Matrix& A, const EquilibriumMeasure& w);

// Inverse of kappa_representation: A = D_w^{1/2} K D_w^{-1/2} - D_b with
// the diagonal recomputed so columns sum to zero (b is derived from kappa,
// not taken from the caller).
Matrix assemble_from_kappa(const Matrix& kappa, const EquilibriumMeasure& w);

// The eps -> 0 stationary measure w0, from the exact linear system
// {fast * w = 0, M * slow * w = 0, sum w = 1} where M merges the connected
// components of the fast part. Cross-validated against the stationary
// measure of the assembled generator at eps = 1e-6.
EquilibriumMeasure limit_equilibrium(const ReactionNetwork& net);

namespace detail {
// Connected components of an undirected support graph given by a symmetric
// boolean adjacency; iterative BFS, components ordered by smallest member.
std::vector<std::vector<int>> connected_components(const std::vector<std::vector<int>>& adjacency,
                                                   int n);
// Undirected support adjacency of a matrix: edge {i,k} iff B_ik or B_ki > 0.
std::vector<std::vector<int>> support_adjacency(const Matrix& B);
}  // namespace detail

}  // namespace fastslow
