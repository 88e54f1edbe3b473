#pragma once

#include <vector>

#include "mdlan/svd.hpp"

namespace mdlan {

/// Ordered set of rank-1 atoms u_i v_iᵀ with nonnegative coefficients.
/// Atoms are stored as factor pairs, never as dense matrices; synthesizing
/// an r-atom basis costs O(m·n·r).
struct AtomBasis {
    Index rows = 0;
    Index cols = 0;
    Matrix u;       ///< rows × r, unit columns
    Matrix v;       ///< cols × r, unit columns
    Vector coeffs;  ///< r coefficients, descending, ≥ 0

    Index size() const { return coeffs.size(); }
};

/// One-sparse atoms: coordinates of nonzero entries with their coefficients.
struct SparseAtom {
    Index row = 0;
    Index col = 0;
    double value = 0.0;
};

struct SparseAtomSet {
    std::vector<SparseAtom> entries;

    Index size() const { return static_cast<Index>(entries.size()); }
};

namespace detail {

inline void validate_basis_shapes(const AtomBasis& basis, const char* what) {
    if (basis.rows < 1 || basis.cols < 1)
        throw std::invalid_argument(std::string(what) + ": basis target shape must be positive");
    if (basis.u.cols() != basis.size() || basis.v.cols() != basis.size())
        throw std::invalid_argument(std::string(what) + ": atom count mismatch between factors");
    if (basis.size() > 0 && (basis.u.rows() != basis.rows || basis.v.rows() != basis.cols))
        throw std::invalid_argument(std::string(what) + ": atom dimensions do not match basis shape");
}

}  // namespace detail

/// Linear synthesis operator: Σ_i coeffs_i · u_i v_iᵀ. An empty basis
/// synthesizes the zero matrix of the basis' target shape.
inline Matrix synthesize(const AtomBasis& basis) {
    detail::validate_basis_shapes(basis, "synthesize");
    if (basis.size() == 0) return Matrix::Zero(basis.rows, basis.cols);
    return basis.u * basis.coeffs.asDiagonal() * basis.v.transpose();
}

/// Adjoint (analysis) operator: [⟨M, ψ_1⟩, …, ⟨M, ψ_r⟩] with
/// ⟨A, B⟩ = trace(AᵀB).
inline Vector analyze(const AtomBasis& basis, const Matrix& m) {
    detail::validate_basis_shapes(basis, "analyze");
    if (m.rows() != basis.rows || m.cols() != basis.cols)
        throw std::invalid_argument("analyze: matrix shape does not match basis");
    if (basis.size() == 0) return Vector();
    return ((basis.u.transpose() * m) * basis.v).diagonal();
}

/// Candidate low-rank atoms of G: the r_hat leading singular triplets, with
/// singular values as coefficients. This basis attains the supremum of the
/// dual atomic norm over unit rank-1 matrices restricted to r_hat atoms.
inline AtomBasis candidate_lowrank_atoms(const Matrix& g, Index r_hat) {
    if (r_hat < 1 || r_hat > std::min(g.rows(), g.cols()))
        throw std::invalid_argument("candidate_lowrank_atoms: r_hat out of range");
    SvdFactors f = top_svd(g, r_hat);
    AtomBasis basis;
    basis.rows = g.rows();
    basis.cols = g.cols();
    basis.u = std::move(f.u);
    basis.v = std::move(f.v);
    basis.coeffs = std::move(f.s);
    return basis;
}

/// Materializes the one-sparse atom set of a dense matrix: exactly its
/// nonzero coordinates with their values, scanned in column-major order.
inline SparseAtomSet sparse_from_matrix(const Matrix& e) {
    require_finite(e, "sparse_from_matrix");
    SparseAtomSet set;
    for (Index j = 0; j < e.cols(); ++j)
        for (Index i = 0; i < e.rows(); ++i)
            if (e(i, j) != 0.0) set.entries.push_back({i, j, e(i, j)});
    return set;
}

}  // namespace mdlan
