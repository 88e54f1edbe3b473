#pragma once

#include <cmath>
#include <numbers>
#include <unordered_map>

#include "mdlan/atoms.hpp"

namespace mdlan {

/// Causal bilinear predictor on an h×w raster grid (row-major). Each pixel
/// is predicted as north + west − northwest with out-of-range neighbours
/// read as zero; the residual operator W is unit lower triangular in raster
/// order, hence invertible with determinant 1. W is never materialized.
struct PredictorMap {
    Index height = 0;
    Index width = 0;

    Index pixels() const { return height * width; }
};

inline PredictorMap build_predictor(Index h, Index w) {
    if (h < 1 || w < 1)
        throw std::invalid_argument("build_predictor: grid dimensions must be positive");
    return PredictorMap{h, w};
}

/// Applies W to a vectorized image: residual[r,c] =
/// a[r,c] − (a[r−1,c] + a[r,c−1] − a[r−1,c−1]).
inline Vector prediction_residual(const PredictorMap& map, const Vector& column) {
    if (column.size() != map.pixels())
        throw std::invalid_argument("prediction_residual: column length does not match grid");
    const Index h = map.height, w = map.width;
    Vector out(column.size());
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
            const Index i = r * w + c;
            const double north = r > 0 ? column[i - w] : 0.0;
            const double west = c > 0 ? column[i - 1] : 0.0;
            const double northwest = (r > 0 && c > 0) ? column[i - w - 1] : 0.0;
            out[i] = column[i] - (north + west - northwest);
        }
    }
    return out;
}

/// Exact inverse of prediction_residual (back-substitution on the unit
/// lower triangular W).
inline Vector prediction_inverse(const PredictorMap& map, const Vector& residual) {
    if (residual.size() != map.pixels())
        throw std::invalid_argument("prediction_inverse: column length does not match grid");
    const Index h = map.height, w = map.width;
    Vector out(residual.size());
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
            const Index i = r * w + c;
            const double north = r > 0 ? out[i - w] : 0.0;
            const double west = c > 0 ? out[i - 1] : 0.0;
            const double northwest = (r > 0 && c > 0) ? out[i - w - 1] : 0.0;
            out[i] = residual[i] + north + west - northwest;
        }
    }
    return out;
}

/// Probability model for quantized prediction residuals. The quantization
/// step is fixed at δ = 1; codelengths are ideal Shannon costs
/// −log₂(p(q)·δ) of the rounded residuals.
enum class ResidualModel { laplace, lg };

struct CodelengthModel {
    ResidualModel kind = ResidualModel::lg;
    /// Lower bound on the estimated noise scale. The default of half a
    /// quantization step keeps the density of a zero residual below 1, so
    /// even an all-zero residual carries a strictly positive cost.
    double sigma_floor = 0.5;
};

namespace detail {

/// erfcx(t) = e^{t²}·erfc(t) for t ≥ 0 without overflow.
inline double erfcx_positive(double t) {
    if (t < 12.0) return std::exp(t * t) * std::erfc(t);
    // Asymptotic series 1/(t√π)·Σ (−1)^k (2k−1)!!/(2t²)^k, error < 1e-13 here.
    const double inv2t2 = 1.0 / (2.0 * t * t);
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= -static_cast<double>(2 * k - 1) * inv2t2;
        sum += term;
    }
    return sum / (t * std::sqrt(std::numbers::pi));
}

inline double log_erfcx(double t) {
    if (t >= 0.0) return std::log(erfcx_positive(t));
    // erfcx(t) = e^{t²}(1 + erf(−t)) for t < 0.
    return t * t + std::log1p(std::erf(-t));
}

}  // namespace detail

/// −log₂ of the LG density at x: the convolution of Laplace(0, θ) with
/// Gaussian(0, σ²),
///   p(x) = 1/(4θ)·e^{−x²/(2σ²)}·[erfcx(x/(√2σ) + σ/(√2θ)) +
///                                 erfcx(−x/(√2σ) + σ/(√2θ))],
/// evaluated in log space so large |x| cannot overflow.
inline double lg_neglog2(double x, double sigma, double theta) {
    if (!std::isfinite(x)) throw std::invalid_argument("lg_neglog2: x must be finite");
    if (!(sigma > 0.0) || !(theta > 0.0))
        throw std::invalid_argument("lg_neglog2: sigma and theta must be positive");
    const double s2 = std::numbers::sqrt2;
    const double a = x / (s2 * sigma) + sigma / (s2 * theta);
    const double b = -x / (s2 * sigma) + sigma / (s2 * theta);
    const double la = detail::log_erfcx(a);
    const double lb = detail::log_erfcx(b);
    const double hi = la > lb ? la : lb;
    const double lo = la > lb ? lb : la;
    const double log_p = -std::log(4.0 * theta) - x * x / (2.0 * sigma * sigma) + hi +
                         std::log1p(std::exp(lo - hi));
    return -log_p / std::numbers::ln2;
}

/// −log₂ of the Laplace(0, θ) density at x.
inline double laplace_neglog2(double x, double theta) {
    if (!std::isfinite(x)) throw std::invalid_argument("laplace_neglog2: x must be finite");
    if (!(theta > 0.0)) throw std::invalid_argument("laplace_neglog2: theta must be positive");
    return (std::abs(x) / theta + std::log(2.0 * theta)) / std::numbers::ln2;
}

namespace detail {

/// Residual model with parameters fitted to one scaled atom.
struct ResidualCode {
    ResidualModel kind = ResidualModel::lg;
    double sigma = 0.0;  // lg only
    double theta = 0.0;

    /// Cost in bits of one quantized residual value, clamped at zero so a
    /// degenerate floor cannot produce negative lengths.
    double bits(double q) const {
        const double b = kind == ResidualModel::lg ? lg_neglog2(q, sigma, theta)
                                                   : laplace_neglog2(q, theta);
        return b > 0.0 ? b : 0.0;
    }
};

/// Fits the residual model to the scaled atom α·u·vᵀ whose residual matrix
/// is (α·v_j)·(W u) column by column. For the LG model the noise variance
/// is the minimum per-column empirical variance (floored), and the Laplace
/// component absorbs the rest: θ = ½·√(var − σ²).
inline ResidualCode fit_residual_code(const Vector& wu, const Vector& v, double alpha,
                                      const CodelengthModel& model) {
    if (!(model.sigma_floor > 0.0))
        throw std::invalid_argument("codelength model: sigma_floor must be positive");
    const double floor = model.sigma_floor;
    const double m = static_cast<double>(wu.size());
    const double n = static_cast<double>(v.size());
    ResidualCode code;
    code.kind = model.kind;
    if (model.kind == ResidualModel::laplace) {
        const double mean_abs = std::abs(alpha) * wu.cwiseAbs().mean() * v.cwiseAbs().mean();
        code.theta = std::max(mean_abs, 1.5 * floor);
        return code;
    }
    const double sum_wu = wu.sum();
    const double sumsq_wu = wu.squaredNorm();
    const double var_wu =
        m > 1.0 ? std::max(0.0, (sumsq_wu - sum_wu * sum_wu / m) / (m - 1.0)) : 0.0;
    const double min_col_var = alpha * alpha * v.cwiseAbs2().minCoeff() * var_wu;
    const double total = m * n;
    const double sum_r = alpha * sum_wu * v.sum();
    const double sumsq_r = alpha * alpha * sumsq_wu * v.squaredNorm();
    const double var_total =
        total > 1.0 ? std::max(0.0, (sumsq_r - sum_r * sum_r / total) / (total - 1.0)) : 0.0;
    const double sigma2 = std::max(floor * floor, min_col_var);
    code.sigma = std::sqrt(sigma2);
    code.theta = 0.5 * std::sqrt(std::max(var_total - sigma2, floor * floor));
    return code;
}

/// Total bits of the quantized residual of the scaled atom. Column j of the
/// residual equals (α·v_j)·wu, so wu is shared across columns; repeated
/// quantized values are cached by magnitude.
inline double residual_bits(const Vector& wu, const Vector& v, double alpha,
                            const ResidualCode& code) {
    const double bits0 = code.bits(0.0);
    const double wu_absmax = wu.cwiseAbs().maxCoeff();
    const Index m = wu.size();
    std::unordered_map<long long, double> cache;
    double total = 0.0;
    for (Index j = 0; j < v.size(); ++j) {
        const double c = alpha * v[j];
        if (std::abs(c) * wu_absmax < 0.5) {
            total += bits0 * static_cast<double>(m);
            continue;
        }
        for (Index e = 0; e < m; ++e) {
            const double q = std::nearbyint(c * wu[e]);
            if (q == 0.0) {
                total += bits0;
                continue;
            }
            const double aq = std::abs(q);
            if (aq > 4.0e18) {  // beyond the cache key range; evaluate directly
                total += code.bits(aq);
                continue;
            }
            const long long key = static_cast<long long>(aq);
            auto [it, inserted] = cache.try_emplace(key, 0.0);
            if (inserted) it->second = code.bits(aq);
            total += it->second;
        }
    }
    return total;
}

}  // namespace detail

/// Codelength in bits of one scaled low-rank atom α·u·vᵀ: every column is
/// reshaped to the predictor grid, residual-coded, quantized with step 1
/// and costed under the fitted residual model.
inline double lowrank_atom_codelength(const Vector& u, const Vector& v, double alpha,
                                      const PredictorMap& map, const CodelengthModel& model) {
    if (u.size() != map.pixels())
        throw std::invalid_argument("lowrank_atom_codelength: atom length does not match grid");
    if (v.size() < 1)
        throw std::invalid_argument("lowrank_atom_codelength: empty right factor");
    if (!u.allFinite() || !v.allFinite() || !std::isfinite(alpha))
        throw std::invalid_argument("lowrank_atom_codelength: non-finite atom");
    const Vector wu = prediction_residual(map, u);
    const detail::ResidualCode code = detail::fit_residual_code(wu, v, alpha, model);
    return detail::residual_bits(wu, v, alpha, code);
}

/// Codelength of a sparse matrix given by its atom set:
/// θ·Σ|β_i| + k·log₂(m·n) — Laplace coefficient cost plus the index cost of
/// naming each nonzero position.
inline double sparse_codelength(const SparseAtomSet& set, double theta, Index m, Index n) {
    if (!(theta > 0.0)) throw std::invalid_argument("sparse_codelength: theta must be positive");
    if (m < 1 || n < 1) throw std::invalid_argument("sparse_codelength: dimensions must be positive");
    double mass = 0.0;
    for (const SparseAtom& a : set.entries) mass += std::abs(a.value);
    return theta * mass +
           static_cast<double>(set.size()) * std::log2(static_cast<double>(m) * static_cast<double>(n));
}

/// Mean of |E_ij| over the nonzero support of E; 1 when E is all-zero,
/// matching the solver's initial θ.
inline double estimate_theta(const Matrix& e) {
    require_finite(e, "estimate_theta");
    double sum = 0.0;
    Index k = 0;
    for (Index j = 0; j < e.cols(); ++j) {
        for (Index i = 0; i < e.rows(); ++i) {
            const double x = e(i, j);
            if (x != 0.0) {
                sum += std::abs(x);
                ++k;
            }
        }
    }
    return k == 0 ? 1.0 : sum / static_cast<double>(k);
}

/// Mean of |E_ij| over all entries; 1 when E is all-zero. Alternative
/// reading of the θ update, selectable in the solver config.
inline double estimate_theta_full_mean(const Matrix& e) {
    require_finite(e, "estimate_theta_full_mean");
    if (e.size() == 0 || (e.array() == 0.0).all()) return 1.0;
    return e.cwiseAbs().mean();
}

}  // namespace mdlan
