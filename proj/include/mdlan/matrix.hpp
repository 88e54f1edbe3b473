#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdlan {

/// Column-major double-precision matrix; carries observations and the
/// recovered low-rank / sparse components throughout the library.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Binary matrix used for foreground masks and ground truth.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite())
        throw std::invalid_argument(std::string(what) +
                                    ": matrix contains NaN or Inf entries");
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
}

/// Normalized root mean squared error ‖X0 − X‖_F / ‖X0‖_F.
inline double nrmse(const Matrix& x0, const Matrix& x) {
    require_same_shape(x0, x, "nrmse");
    const double denom = x0.norm();
    if (denom == 0.0)
        throw std::invalid_argument(
            "nrmse: reference matrix has zero Frobenius norm (division by zero)");
    return (x0 - x).norm() / denom;
}

/// Exact count of nonzero entries.
inline Index nnz_count(const Matrix& m) {
    return (m.array() != 0.0).count();
}

}  // namespace mdlan
