#pragma once

#include "fastslow/network.hpp"

namespace fastslow {

// Partition of {0..I-1} into the connected components of the fast-reaction
// graph. classes are disjoint, cover all states, and are ordered by their
// smallest member; phi maps a state to its class index.
struct Partition {
    std::vector<std::vector<int>> classes;
    std::vector<int> phi;
};

// The merge operator M (exact 0/1 integers), reconstruction operator N,
// projection P = N*M, and the coarse equilibrium what = M*w0. P is stored
// densely only up to kDensePLimit states; beyond that use apply_projection.
struct CoarseGraining {
    static constexpr int kDensePLimit = 2000;

    Eigen::MatrixXi M;       // J x I
    Matrix N;                // I x J
    Matrix P;                // I x I, or 0x0 above the dense limit
    EquilibriumMeasure what; // length J
    EquilibriumMeasure w0;   // length I, the measure the operators were built from

    Matrix M_real() const { return M.cast<double>(); }
    Vector apply_projection(const Vector& c) const;
};

// Residuals of the operator identities; all should be at round-off level
// for correctly built operators.
struct AlgebraReport {
    double m_fast = 0.0;       // ||M * fast||
    double fast_n = 0.0;       // ||fast * N||
    double p_fast = 0.0;       // ||P * fast||
    double fast_p = 0.0;       // ||fast * P||
    double p_idempotent = 0.0; // ||P^2 - P||
    double mn_identity = 0.0;  // ||M*N - id||
    double p_reversible = 0.0; // ||D_w0 P^T - P D_w0||

    double worst() const;
};

Partition fast_classes(const ReactionNetwork& net);

CoarseGraining build_operators(const Partition& partition, const EquilibriumMeasure& w0);

AlgebraReport verify_operator_algebra(const ReactionNetwork& net, const CoarseGraining& cg);

// Coarse generator computed two independent ways (matrix product M*slow*N
// and the averaged-coefficient formula); throws internal-consistency if
// they disagree or the result is not a generator annihilating what.
Matrix coarse_generator(const ReactionNetwork& net, const CoarseGraining& cg);

// Splits c = Pc + (id - P)c into the fast-equilibrated part and the
// fast-direction remainder.
std::pair<Vector, Vector> decompose_state(const Vector& c, const CoarseGraining& cg);

}  // namespace fastslow
