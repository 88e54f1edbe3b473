#pragma once

#include <Eigen/SVD>

#include <algorithm>

#include "mdlan/matrix.hpp"

namespace mdlan {

/// Leading singular triplets of a dense matrix.
struct SvdFactors {
    Matrix u;  ///< m × k, orthonormal columns
    Vector s;  ///< k singular values, descending
    Matrix v;  ///< n × k, orthonormal columns
};

/// k leading singular triplets of m. Signs are canonicalized so the
/// largest-magnitude entry of each left singular vector is positive, making
/// the factors deterministic.
inline SvdFactors top_svd(const Matrix& m, Index k) {
    if (k < 1 || k > std::min(m.rows(), m.cols()))
        throw std::invalid_argument("top_svd: k out of range [1, min(rows, cols)]");
    require_finite(m, "top_svd");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors f;
    f.u = svd.matrixU().leftCols(k);
    f.s = svd.singularValues().head(k);
    f.v = svd.matrixV().leftCols(k);
    for (Index i = 0; i < k; ++i) {
        Index at = 0;
        f.u.col(i).cwiseAbs().maxCoeff(&at);
        if (f.u(at, i) < 0.0) {
            f.u.col(i) = -f.u.col(i);
            f.v.col(i) = -f.v.col(i);
        }
    }
    return f;
}

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
    require_finite(m, "spectral_norm");
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

}  // namespace mdlan
