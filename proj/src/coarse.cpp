#include "fastslow/coarse.hpp"

#include "fastslow/errors.hpp"

namespace fastslow {

Vector CoarseGraining::apply_projection(const Vector& c) const {
    if (P.rows() > 0) return P * c;
    return N * (M.cast<double>() * c);  // factored form beyond the dense limit
}

double AlgebraReport::worst() const {
    double r = m_fast;
    r = std::max(r, fast_n);
    r = std::max(r, p_fast);
    r = std::max(r, fast_p);
    r = std::max(r, p_idempotent);
    r = std::max(r, mn_identity);
    r = std::max(r, p_reversible);
    return r;
}

Partition fast_classes(const ReactionNetwork& net) {
    Partition part;
    part.classes =
        detail::connected_components(detail::support_adjacency(net.fast), net.num_states);
    part.phi.assign(static_cast<size_t>(net.num_states), -1);
    for (size_t j = 0; j < part.classes.size(); ++j)
        for (int i : part.classes[j]) part.phi[static_cast<size_t>(i)] = static_cast<int>(j);
    return part;
}

CoarseGraining build_operators(const Partition& partition, const EquilibriumMeasure& w0) {
    const int I = static_cast<int>(partition.phi.size());
    const int J = static_cast<int>(partition.classes.size());
    if (w0.w.size() != I)
        throw Error(ErrorKind::InvalidParameter, "build_operators: measure/partition size mismatch");
    for (int i = 0; i < I; ++i)
        if (!(w0.w(i) > 0.0))
            throw Error(ErrorKind::InvalidMeasure,
                        "measure entry " + std::to_string(i + 1) + " must be positive");

    CoarseGraining cg;
    cg.M = Eigen::MatrixXi::Zero(J, I);
    std::vector<int> covered(static_cast<size_t>(I), 0);
    for (int j = 0; j < J; ++j) {
        const auto& cls = partition.classes[static_cast<size_t>(j)];
        if (cls.empty())
            throw Error(ErrorKind::InvalidPartition, "class " + std::to_string(j + 1) + " is empty");
        for (int i : cls) {
            if (i < 0 || i >= I || covered[static_cast<size_t>(i)]++)
                throw Error(ErrorKind::InvalidPartition,
                            "state " + std::to_string(i + 1) + " is missing or repeated");
            cg.M(j, i) = 1;
        }
    }
    for (int i = 0; i < I; ++i)
        if (!covered[static_cast<size_t>(i)])
            throw Error(ErrorKind::InvalidPartition,
                        "state " + std::to_string(i + 1) + " is not covered by any class");

    Matrix Md = cg.M_real();
    Vector what = Md * w0.w;
    // N redistributes a coarse weight over its class proportionally to w0:
    // N = D_{w0} M^T D_{what}^{-1}; every column sums to one.
    Matrix N = w0.w.asDiagonal() * Md.transpose() * what.cwiseInverse().asDiagonal();
    cg.N = N;
    if (I <= CoarseGraining::kDensePLimit) cg.P = N * Md;
    cg.what = EquilibriumMeasure{std::move(what)};
    cg.w0 = w0;
    return cg;
}

AlgebraReport verify_operator_algebra(const ReactionNetwork& net, const CoarseGraining& cg) {
    Matrix Md = cg.M_real();
    const Matrix& AF = net.fast;
    Matrix P = (cg.P.rows() > 0) ? cg.P : Matrix(cg.N * Md);

    AlgebraReport rep;
    rep.m_fast = (Md * AF).cwiseAbs().maxCoeff();
    rep.fast_n = (AF * cg.N).cwiseAbs().maxCoeff();
    rep.p_fast = (P * AF).cwiseAbs().maxCoeff();
    rep.fast_p = (AF * P).cwiseAbs().maxCoeff();
    rep.p_idempotent = (P * P - P).cwiseAbs().maxCoeff();
    rep.mn_identity =
        (Md * cg.N - Matrix::Identity(cg.M.rows(), cg.M.rows())).cwiseAbs().maxCoeff();
    Matrix D = cg.w0.w.asDiagonal();
    rep.p_reversible = (D * P.transpose() - P * D).cwiseAbs().maxCoeff();
    return rep;
}

Matrix coarse_generator(const ReactionNetwork& net, const CoarseGraining& cg) {
    const int J = static_cast<int>(cg.M.rows());
    Matrix Md = cg.M_real();
    Matrix product = Md * net.slow * cg.N;

    // Independent recomputation as the w0-weighted average of slow rates
    // between the classes.
    Matrix averaged = Matrix::Zero(J, J);
    for (int j1 = 0; j1 < J; ++j1)
        for (int j2 = 0; j2 < J; ++j2) {
            double sum = 0.0;
            for (int i1 = 0; i1 < net.num_states; ++i1) {
                if (cg.M(j1, i1) == 0) continue;
                for (int i2 = 0; i2 < net.num_states; ++i2)
                    if (cg.M(j2, i2) != 0) sum += net.slow(i1, i2) * cg.w0.w(i2);
            }
            averaged(j1, j2) = sum / cg.what.w(j2);
        }

    double gap = (product - averaged).cwiseAbs().maxCoeff();
    if (gap > 1e-12)
        throw Error(ErrorKind::InternalConsistency,
                    "coarse generator mismatch between product and averaged forms (" +
                        format_g17(gap) + ")");
    for (int j2 = 0; j2 < J; ++j2) {
        double col = product.col(j2).sum();
        if (std::abs(col) > 1e-10)
            throw Error(ErrorKind::InternalConsistency,
                        "coarse generator column " + std::to_string(j2 + 1) + " sums to " +
                            format_g17(col));
        for (int j1 = 0; j1 < J; ++j1)
            if (j1 != j2 && product(j1, j2) < -1e-12)
                throw Error(ErrorKind::InternalConsistency,
                            "coarse generator has a negative off-diagonal rate");
    }
    double stat = (product * cg.what.w).lpNorm<Eigen::Infinity>();
    if (stat > 1e-10)
        throw Error(ErrorKind::InternalConsistency,
                    "coarse equilibrium is not stationary (|A^ w^| = " + format_g17(stat) + ")");
    return product;
}

std::pair<Vector, Vector> decompose_state(const Vector& c, const CoarseGraining& cg) {
    if (c.size() != cg.N.rows())
        throw Error(ErrorKind::InvalidParameter, "decompose_state: dimension mismatch");
    Vector equilibrated = cg.apply_projection(c);
    Vector fast_part = c - equilibrated;
    return {std::move(equilibrated), std::move(fast_part)};
}

}  // namespace fastslow
